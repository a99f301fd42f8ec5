#include "ionkit/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ionkit {

EnergyGrid::EnergyGrid(double e_max_, int n_e_) : e_max(e_max_), n_e(n_e_) {
    if (!(e_max > 0.0)) throw std::invalid_argument("EnergyGrid: e_max must be > 0");
    if (n_e < 1) throw std::invalid_argument("EnergyGrid: n_e must be >= 1");
    weight = e_max / n_e;
    nodes.resize(n_e);
    for (int j = 0; j < n_e; ++j) nodes[j] = (j + 0.5) * weight;
}

FieldGrid::FieldGrid(double u_max_, int n_u_, double angular_weight_)
    : u_max(u_max_), n_u(n_u_), angular_weight(angular_weight_) {
    if (!(u_max > 0.0)) throw std::invalid_argument("FieldGrid: u_max must be > 0");
    if (n_u < 2 || n_u % 2 != 0)
        throw std::invalid_argument("FieldGrid: n_u must be even and >= 2 (u -> -u symmetry)");
    if (!(angular_weight > 0.0)) throw std::invalid_argument("FieldGrid: angular_weight must be > 0");
    du = 2.0 * u_max / n_u;
    nodes.resize(n_u);
    // Built from |index| so that nodes[negated(k)] == -nodes[k] bit for bit.
    for (int k = 0; k < n_u; ++k) {
        const int half = n_u / 2;
        const int m = k < half ? half - 1 - k : k - half;  // distance to the centre
        const double mag = (m + 0.5) * du;
        nodes[k] = k < half ? -mag : mag;
    }
}

std::uint64_t FockBasis::key(const std::vector<int>& modes) const {
    std::uint64_t k = 0;
    for (int m : modes) k = k * static_cast<std::uint64_t>(n_modes_ + 1) + static_cast<std::uint64_t>(m + 1);
    return k;
}

FockBasis::FockBasis(int n_modes, int n_max) : n_modes_(n_modes), n_max_(n_max) {
    if (n_modes < 1) throw std::invalid_argument("FockBasis: need at least one mode");
    if (n_max < 0) throw std::invalid_argument("FockBasis: n_max must be >= 0");
    const double bits = n_max * std::log2(static_cast<double>(n_modes) + 1.0);
    if (bits > 63.0) throw std::invalid_argument("FockBasis: n_max too large for mode count");

    offsets_.push_back(0);
    std::vector<std::vector<int>> prev{{}};
    states_.push_back({});
    for (int n = 1; n <= n_max; ++n) {
        std::vector<std::vector<int>> next;
        for (const auto& s : prev) {
            const int start = s.empty() ? 0 : s.back();
            for (int m = start; m < n_modes; ++m) {
                auto t = s;
                t.push_back(m);
                next.push_back(std::move(t));
            }
        }
        offsets_.push_back(static_cast<int>(states_.size()));
        for (auto& s : next) states_.push_back(s);
        prev = std::move(next);
    }
    offsets_.push_back(static_cast<int>(states_.size()));

    std::vector<std::pair<std::uint64_t, int>> kv;
    kv.reserve(states_.size());
    for (int i = 0; i < dim(); ++i) kv.emplace_back(key(states_[i]), i);
    std::sort(kv.begin(), kv.end());
    for (auto& [k, i] : kv) {
        keys_.push_back(k);
        key_index_.push_back(i);
    }
}

int FockBasis::index_of(const std::vector<int>& sorted_modes) const {
    if (static_cast<int>(sorted_modes.size()) > n_max_) return -1;
    const auto k = key(sorted_modes);
    auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    if (it == keys_.end() || *it != k) return -1;
    return key_index_[it - keys_.begin()];
}

int FockBasis::occupation(int idx, int mode) const {
    const auto& s = states_[idx];
    return static_cast<int>(std::count(s.begin(), s.end(), mode));
}

std::int64_t CompositeBasis::flatten(int i, int j, int n) const {
    auto bad = [](const char* axis, int v, int hi) {
        std::ostringstream os;
        os << "flatten: " << axis << " index " << v << " out of range [0," << hi << ")";
        throw std::out_of_range(os.str());
    };
    if (i < 0 || i >= dp()) bad("left particle", i, dp());
    if (j < 0 || j >= dp()) bad("right particle", j, dp());
    if (n < 0 || n >= nf()) bad("fock", n, nf());
    const std::int64_t p = dp();
    return i + p * j + p * p * n;
}

CompositeBasis::Triple CompositeBasis::unflatten(std::int64_t flat) const {
    if (flat < 0 || flat >= dim()) {
        std::ostringstream os;
        os << "unflatten: flat index " << flat << " out of range [0," << dim() << ")";
        throw std::out_of_range(os.str());
    }
    const std::int64_t p = dp();
    return {static_cast<int>(flat % p), static_cast<int>((flat / p) % p), static_cast<int>(flat / (p * p))};
}

CompositeBasis build_bases(const GridSpec& s) {
    if (!(s.E < 0.0)) throw std::invalid_argument("build_bases: bound-state energy E must be < 0");
    if (s.fiber_dim != 1) throw std::invalid_argument("build_bases: only fiber_dim = 1 is implemented");
    if (s.n_sigma != 1) throw std::invalid_argument("build_bases: only n_sigma = 1 is implemented");
    CompositeBasis b;
    b.particle.E = s.E;
    b.particle.fiber_dim = s.fiber_dim;
    b.particle.grid = EnergyGrid(s.e_max, s.n_e);
    b.field = FieldGrid(s.u_max, s.n_u);
    b.fock = FockBasis(s.n_u, s.n_max);
    return b;
}

namespace {
template <class Nodes>
Vec embed_nodes(const std::function<cplx(double)>& f, const Nodes& nodes, double w) {
    Vec v(static_cast<Eigen::Index>(nodes.size()));
    const double s = std::sqrt(w);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const cplx z = f(nodes[k]);
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
            std::ostringstream os;
            os << "embed_function: non-finite sample at node " << nodes[k];
            throw std::domain_error(os.str());
        }
        v[static_cast<Eigen::Index>(k)] = z * s;
    }
    return v;
}
}  // namespace

Vec embed_function(const std::function<cplx(double)>& f, const EnergyGrid& g) {
    return embed_nodes(f, g.nodes, g.weight);
}

Vec embed_function(const std::function<cplx(double)>& f, const FieldGrid& g) {
    return embed_nodes(f, g.nodes, g.mode_weight());
}

}  // namespace ionkit
