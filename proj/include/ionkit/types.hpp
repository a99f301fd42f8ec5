#pragma once

#include <complex>
#include <map>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ionkit {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using Mat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<cplx>;

inline constexpr cplx I_UNIT{0.0, 1.0};

// Outcome of one inequality or convergence check. slack >= -tol means pass.
struct BoundReport {
    std::string name;
    double quantity = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    double tol = 0.0;
    bool pass = false;
    std::map<std::string, double> params;

    static BoundReport make(std::string name, double quantity, double bound, double slack,
                            double tol) {
        BoundReport r;
        r.name = std::move(name);
        r.quantity = quantity;
        r.bound = bound;
        r.slack = slack;
        r.tol = tol;
        r.pass = slack >= -tol;
        return r;
    }
};

}  // namespace ionkit
