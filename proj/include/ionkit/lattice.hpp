#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ionkit/types.hpp"

namespace ionkit {

// Midpoint grid on (0, e_max]: e_j = (j - 1/2) * de, j = 1..n_e.
struct EnergyGrid {
    double e_max = 0.0;
    int n_e = 0;
    double weight = 0.0;
    std::vector<double> nodes;

    EnergyGrid() = default;
    EnergyGrid(double e_max, int n_e);
};

// Symmetric midpoint grid on [-u_max, u_max]; 0 is never a node.
struct FieldGrid {
    double u_max = 0.0;
    int n_u = 0;
    double du = 0.0;
    double angular_weight = 0.0;
    std::vector<double> nodes;

    FieldGrid() = default;
    FieldGrid(double u_max, int n_u, double angular_weight = 4.0 * 3.14159265358979323846);

    // Index of -u_k.
    int negated(int k) const { return n_u - 1 - k; }
    // Quadrature weight of one mode (du times the angular weight).
    double mode_weight() const { return du * angular_weight; }
};

struct ParticleBasis {
    double E = -1.0;
    int fiber_dim = 1;
    EnergyGrid grid;

    int dim() const { return 1 + grid.n_e * fiber_dim; }
    // Energy of basis index i (index 0 is the bound state).
    double energy(int i) const { return i == 0 ? E : grid.nodes[i - 1]; }
};

// Occupation states over n_u modes with total occupation <= n_max.
// A state is stored as its sorted list of occupied mode labels (with repetition).
class FockBasis {
public:
    FockBasis() = default;
    FockBasis(int n_modes, int n_max);

    int n_modes() const { return n_modes_; }
    int n_max() const { return n_max_; }
    int dim() const { return static_cast<int>(states_.size()); }
    const std::vector<int>& state(int idx) const { return states_[idx]; }
    int particle_number(int idx) const { return static_cast<int>(states_[idx].size()); }
    // Returns -1 when the sorted mode list is not a basis state.
    int index_of(const std::vector<int>& sorted_modes) const;
    int occupation(int idx, int mode) const;
    // First index of each sector n (sectors are stored contiguously); size n_max + 2.
    const std::vector<int>& sector_offsets() const { return offsets_; }

private:
    int n_modes_ = 0;
    int n_max_ = 0;
    std::vector<std::vector<int>> states_;
    std::vector<int> offsets_;
    std::vector<std::uint64_t> keys_;  // sorted, parallel to key_index_
    std::vector<int> key_index_;

    std::uint64_t key(const std::vector<int>& modes) const;
};

struct CompositeBasis {
    ParticleBasis particle;
    FieldGrid field;
    FockBasis fock;

    int dp() const { return particle.dim(); }
    int nf() const { return fock.dim(); }
    std::int64_t dim() const { return std::int64_t(dp()) * dp() * nf(); }

    std::int64_t flatten(int i, int j, int n) const;
    struct Triple {
        int i, j, n;
    };
    Triple unflatten(std::int64_t flat) const;
};

struct GridSpec {
    double E = -1.0;
    double e_max = 10.0;
    int n_e = 8;
    double u_max = 10.0;
    int n_u = 8;
    int n_max = 1;
    int fiber_dim = 1;
    int n_sigma = 1;
};

CompositeBasis build_bases(const GridSpec& spec);

// Samples f at the nodes and scales by sqrt(weight).
Vec embed_function(const std::function<cplx(double)>& f, const EnergyGrid& grid);
Vec embed_function(const std::function<cplx(double)>& f, const FieldGrid& grid);

}  // namespace ionkit
