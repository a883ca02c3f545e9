#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "renyiprobe/block_state.hpp"
#include "renyiprobe/subsystem.hpp"

namespace renyiprobe {

/// Exact reduced density matrix of a pure parent state on the inner space of
/// the factorization (rho_A = Tr_outer |psi><psi|). The fermionic reorder
/// sign of the map is applied to the amplitudes.
inline MatrixXcd oracle_partial_trace(const SubsystemMap& map, const VectorXcd& psi) {
    if (psi.size() != map.parent_dim())
        throw std::invalid_argument("oracle_partial_trace: state/map dimension mismatch");
    MatrixXcd m = MatrixXcd::Zero(map.inner_dim(), map.outer_dim());
    for (int p = 0; p < map.parent_dim(); ++p) {
        auto [i, o] = map.split(p);
        m(i, o) = map.sign(p) * psi[p];
    }
    return m * m.adjoint();
}

/// Density-matrix version: rho_A[i,i'] = sum_o rho[(i,o),(i',o)].
inline MatrixXcd oracle_partial_trace(const SubsystemMap& map, const MatrixXcd& rho) {
    if (rho.rows() != map.parent_dim() || rho.cols() != map.parent_dim())
        throw std::invalid_argument("oracle_partial_trace: state/map dimension mismatch");
    MatrixXcd out = MatrixXcd::Zero(map.inner_dim(), map.inner_dim());
    for (int p = 0; p < map.parent_dim(); ++p) {
        auto [i, o] = map.split(p);
        for (int q = 0; q < map.inner_dim(); ++q) {
            const int pq = map.recompose(q, o);
            if (pq >= 0) out(q, i) += map.sign(pq) * map.sign(p) * rho(pq, p);
        }
    }
    return out;
}

inline double purity_of(const MatrixXcd& rho) { return (rho * rho).trace().real(); }

inline void check_density_matrix(const MatrixXcd& rho, double tol = 1e-10) {
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw std::invalid_argument("density matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol)
        throw std::invalid_argument("density matrix not positive semidefinite");
    if (std::abs(rho.trace().real() - 1.0) > tol)
        throw std::invalid_argument("density matrix trace differs from one");
}

/// Design-exact second moment for a sector block of a global 2-design,
/// summed over the sector outcomes:
///   <sum_{s in sec} P(s)^2> = ((Tr rho_sec)^2 + Tr rho_sec^2) / (N + 1).
/// This is Tr[(1 + V_A) rho (x) rho] / (N (N+1)) summed over the N outcomes,
/// evaluated through Tr[V rho (x) rho] = Tr rho^2.
inline double oracle_swap_moment_summed(double trace, double purity, int dim) {
    if (dim < 1) throw std::invalid_argument("oracle_swap_moment_summed: dim must be >= 1");
    return (trace * trace + purity) / (dim + 1);
}

/// Per-outcome version, the paper's form of the identity.
inline double oracle_swap_moment(double trace, double purity, int dim) {
    return oracle_swap_moment_summed(trace, purity, dim) / dim;
}

/// Product-space subset purities of an L-constituent pure state with uniform
/// local dimension d (ordinal = s_0 d^{L-1} + ... + s_{L-1}). Subsets are
/// bitmasks with bit i = constituent i; the empty subset has purity 1.
struct SubsetPurityOracle {
    int n_sites = 0;
    std::vector<double> purity;  // indexed by mask, size 2^n

    double operator[](unsigned mask) const { return purity[mask]; }
};

namespace detail {

inline std::pair<int, int> mask_split_ordinal(int s, int L, int d, unsigned mask) {
    // decompose ordinal into (kept, dropped) sub-ordinals, site 0 slowest
    int kept = 0, dropped = 0;
    for (int i = 0; i < L; ++i) {
        const int digit_shift = L - 1 - i;
        int digit = s;
        for (int k = 0; k < digit_shift; ++k) digit /= d;
        digit %= d;
        if (mask & (1u << i))
            kept = kept * d + digit;
        else
            dropped = dropped * d + digit;
    }
    return {kept, dropped};
}

} // namespace detail

inline SubsetPurityOracle oracle_subset_purities(const VectorXcd& psi, int n_sites, int d = 2) {
    Eigen::Index dim = 1;
    for (int i = 0; i < n_sites; ++i) dim *= d;
    if (psi.size() != dim)
        throw std::invalid_argument("oracle_subset_purities: state dimension mismatch");
    SubsetPurityOracle out;
    out.n_sites = n_sites;
    out.purity.resize(1u << n_sites);
    for (unsigned mask = 0; mask < (1u << n_sites); ++mask) {
        int kd = 1, dd = 1;
        for (int i = 0; i < n_sites; ++i) ((mask >> i) & 1u ? kd : dd) *= d;
        MatrixXcd m = MatrixXcd::Zero(kd, dd);
        for (int s = 0; s < dim; ++s) {
            auto [k, o] = detail::mask_split_ordinal(s, n_sites, d, mask);
            m(k, o) = psi[s];
        }
        MatrixXcd rho = m * m.adjoint();
        out.purity[mask] = purity_of(rho);
    }
    return out;
}

/// Local-unitary design moment <P(s)^2> = sum_{A' subseteq A} Tr rho_{A'}^2
/// / prod_l d_l (d_l + 1), evaluated from exact subset purities.
inline double oracle_local_swap_moment(const SubsetPurityOracle& table, int d = 2) {
    double num = 0;
    for (double p : table.purity) num += p;
    double den = 1;
    for (int i = 0; i < table.n_sites; ++i) den *= static_cast<double>(d) * (d + 1);
    return num / den;
}

} // namespace renyiprobe
