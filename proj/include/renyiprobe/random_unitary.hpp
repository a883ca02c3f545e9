#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "renyiprobe/models.hpp"
#include "renyiprobe/rng.hpp"

namespace renyiprobe {

namespace detail {

inline MatrixXcd ginibre(int rows, int cols, RandomStream& rs) {
    MatrixXcd g(rows, cols);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) g(i, j) = cxd(rs.normal(), rs.normal());
    return g;
}

} // namespace detail

/// First `ncols` columns of a CUE (Haar) unitary: QR of a complex Ginibre
/// matrix with the phases of the triangular factor's diagonal divided out
/// (the standard correction that makes the distribution Haar).
inline MatrixXcd sample_cue_columns(int dim, int ncols, RandomStream& rs) {
    if (dim < 1 || ncols < 1 || ncols > dim)
        throw std::invalid_argument("sample_cue_columns: need 1 <= ncols <= dim");
    MatrixXcd g = detail::ginibre(dim, ncols, rs);
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(dim, ncols);
    const auto& r = qr.matrixQR();
    for (int j = 0; j < ncols; ++j) {
        const cxd d = r(j, j);
        q.col(j) *= d / std::abs(d);
    }
    return q;
}

/// Haar-distributed unitary of the given dimension.
inline MatrixXcd sample_cue(int dim, RandomStream& rs) { return sample_cue_columns(dim, dim, rs); }

/// Image of a fixed pure state under a Haar unitary, i.e. a Haar-random unit
/// vector. Equivalent (in distribution) to sample_cue(dim) * psi for any
/// fixed normalized psi.
inline VectorXcd sample_haar_state(int dim, RandomStream& rs) {
    VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = cxd(rs.normal(), rs.normal());
    v.normalize();
    return v;
}

/// Schedule of disordered quenches generating one random unitary
/// (U = e^{-iH_eta T} ... e^{-iH_1 T}).
///
/// fresh_pattern: every quench draws an i.i.d. normal(0, delta^2) offset per
/// site (the spatial-light-modulator is reprogrammed each quench).
/// single_pattern: one fixed pattern, applied on every second quench
/// (delta_i^j = delta_i * mod(j,2)); the pattern is drawn once per run and
/// shared by all unitaries, so the ensemble randomness comes from the quench
/// times, which should then be uniform_random in [0, 2/J].
struct QuenchSchedule {
    enum class PatternMode { fresh_pattern, single_pattern };
    enum class TimeMode { fixed, uniform_random };

    int eta = 0;
    double jt = 1.0;       // quench duration in units of 1/J (fixed mode)
    double delta = 1.0;    // disorder standard deviation in units of J
    PatternMode mode = PatternMode::fresh_pattern;
    TimeMode time_mode = TimeMode::fixed;
    /// Fermi-Hubbard only: draw the per-spin offsets independently
    /// (delta_{i,up}, delta_{i,down} i.i.d.) instead of balanced
    /// (delta_{i,up} = -delta_{i,down} = delta_i/2).
    bool fh_independent_spins = true;

    void validate() const {
        if (eta < 1) throw std::invalid_argument("QuenchSchedule: eta must be >= 1");
        if (jt <= 0 && time_mode == TimeMode::fixed)
            throw std::invalid_argument("QuenchSchedule: quench time must be positive");
        if (delta < 0) throw std::invalid_argument("QuenchSchedule: delta must be >= 0");
    }

    double total_time_scale() const {
        // Expected J*T_tot; uniform_random times have mean 1/J each.
        return time_mode == TimeMode::fixed ? eta * jt : static_cast<double>(eta);
    }
};

namespace detail {

inline DisorderPattern draw_pattern(const QuenchSchedule& s, ModelKind kind, int sites,
                                    RandomStream& rs) {
    DisorderPattern d;
    if (kind == ModelKind::fermi_hubbard) {
        d.offsets.resize(static_cast<std::size_t>(2 * sites));
        if (s.fh_independent_spins) {
            for (auto& x : d.offsets) x = s.delta * rs.normal();
        } else {
            for (int i = 0; i < sites; ++i) {
                const double v = 0.5 * s.delta * rs.normal();
                d.offsets[static_cast<std::size_t>(2 * i)] = v;
                d.offsets[static_cast<std::size_t>(2 * i + 1)] = -v;
            }
        }
    } else {
        d.offsets.resize(static_cast<std::size_t>(sites));
        for (auto& x : d.offsets) x = s.delta * rs.normal();
    }
    return d;
}

inline DisorderPattern scale_pattern(const DisorderPattern& p, double f) {
    DisorderPattern q = p;
    for (auto& x : q.offsets) x *= f;
    return q;
}

} // namespace detail

/// Drives the quench sequence of one unitary: per quench j it yields the
/// disorder pattern and the duration, then `step` receives the quench
/// Hamiltonian spectrum. Shared by the full-matrix sampler and the drivers
/// that evolve state vectors incrementally.
template <typename Step>
void for_each_quench(const ModelParams& clean, const SectorBasis& basis, const QuenchSchedule& s,
                     const RandomStream& unitary_stream, Step&& step,
                     const DisorderPattern* shared_pattern = nullptr) {
    s.validate();
    if (clean.disorder)
        throw std::invalid_argument("sample_quench_unitary: pass static offsets via the pattern, "
                                    "not through ModelParams.disorder");
    DisorderPattern local_shared;
    if (s.mode == QuenchSchedule::PatternMode::single_pattern && !shared_pattern) {
        RandomStream ps = unitary_stream.child(StreamTag::shared_pattern);
        local_shared = detail::draw_pattern(s, clean.kind, basis.lattice().sites(), ps);
        shared_pattern = &local_shared;
    }
    // Quench Hamiltonians differ only in the disorder diagonal.
    const MatrixXd h0 = build_hamiltonian(clean, basis);
    const MatrixXd f = disorder_functional(clean.kind, basis);
    MatrixXd h = h0;
    for (int j = 1; j <= s.eta; ++j) {
        DisorderPattern pat;
        if (s.mode == QuenchSchedule::PatternMode::fresh_pattern) {
            RandomStream ds = unitary_stream.child(StreamTag::quench_pattern, static_cast<std::uint64_t>(j));
            pat = detail::draw_pattern(s, clean.kind, basis.lattice().sites(), ds);
        } else {
            pat = detail::scale_pattern(*shared_pattern, static_cast<double>(j % 2));
        }
        h = h0;
        h.diagonal() += f * Eigen::Map<const VectorXd>(pat.offsets.data(),
                                                       static_cast<Eigen::Index>(pat.offsets.size()));
        double t = s.jt / clean.j;
        if (s.time_mode == QuenchSchedule::TimeMode::uniform_random) {
            RandomStream ts = unitary_stream.child(StreamTag::quench_times, static_cast<std::uint64_t>(j));
            t = ts.uniform(0.0, 2.0 / clean.j);
        }
        step(Spectrum::of(h), t, j);
    }
}

/// Ordered product of eta disordered propagators restricted to one sector.
inline MatrixXcd sample_quench_unitary(const ModelParams& clean, const SectorBasis& basis,
                                       const QuenchSchedule& s, const RandomStream& unitary_stream,
                                       const DisorderPattern* shared_pattern = nullptr) {
    MatrixXcd u = MatrixXcd::Identity(basis.dim(), basis.dim());
    for_each_quench(
        clean, basis, s, unitary_stream,
        [&](const Spectrum& sp, double t, int) { sp.evolve_columns(u, t); }, shared_pattern);
    return u;
}

/// Independent CUE unitaries on the local constituents.
inline std::vector<MatrixXcd> sample_local_unitaries(const std::vector<int>& dims,
                                                     const RandomStream& unitary_stream) {
    std::vector<MatrixXcd> us;
    us.reserve(dims.size());
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] < 2) throw std::invalid_argument("sample_local_unitaries: local dims must be >= 2");
        RandomStream rs = unitary_stream.child(StreamTag::local_unitary, static_cast<std::uint64_t>(i));
        us.push_back(sample_cue(dims[i], rs));
    }
    return us;
}

/// Apply (u_1 (x) ... (x) u_L) to a product-space vector without
/// materializing the d^L x d^L matrix. Site 0 is the slowest index
/// (ordinal = s_0 * d_1...d_{L-1} + ...), matching lexicographic configs.
inline VectorXcd apply_local_unitaries(const std::vector<MatrixXcd>& us, const VectorXcd& psi) {
    Eigen::Index total = 1;
    for (const auto& u : us) total *= u.rows();
    if (total != psi.size())
        throw std::invalid_argument("apply_local_unitaries: dimension mismatch");
    VectorXcd v = psi;
    Eigen::Index left = 1;
    for (const auto& u : us) {
        const Eigen::Index d = u.rows();
        const Eigen::Index right = total / (left * d);
        VectorXcd w(total);
        for (Eigen::Index a = 0; a < left; ++a) {
            // view block of v as (d x right) matrix, multiply by u
            Eigen::Map<const Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                block(v.data() + a * d * right, d, right);
            Eigen::Map<Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> outb(
                w.data() + a * d * right, d, right);
            outb.noalias() = u * block;
        }
        v.swap(w);
        left *= d;
    }
    return v;
}

} // namespace renyiprobe
