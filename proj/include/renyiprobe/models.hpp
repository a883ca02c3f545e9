#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "renyiprobe/basis.hpp"
#include "renyiprobe/lattice.hpp"
#include "renyiprobe/rng.hpp"

namespace renyiprobe {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cxd = std::complex<double>;

enum class ModelKind { heisenberg, bose_hubbard, fermi_hubbard };

inline Species species_for(ModelKind k) {
    switch (k) {
        case ModelKind::heisenberg: return Species::spin_half;
        case ModelKind::bose_hubbard: return Species::boson;
        case ModelKind::fermi_hubbard: return Species::fermion_spinful;
    }
    return Species::spin_half;
}

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::heisenberg: return "heisenberg";
        case ModelKind::bose_hubbard: return "bose-hubbard";
        case ModelKind::fermi_hubbard: return "fermi-hubbard";
    }
    return "?";
}

/// Site-resolved diagonal offsets. One entry per site; spinful fermions use
/// two entries per site in site-then-spin order (up, down).
struct DisorderPattern {
    std::vector<double> offsets;
};

/// Model definition. j is the hopping/exchange energy and sets the unit of
/// time (all times are measured in 1/J); u is the on-site interaction
/// (Bose-/Fermi-Hubbard only).
struct ModelParams {
    ModelKind kind = ModelKind::heisenberg;
    double j = 1.0;
    double u = 0.0;
    std::optional<DisorderPattern> disorder;
};

inline int disorder_len(ModelKind kind, const Lattice& lat) {
    return kind == ModelKind::fermi_hubbard ? 2 * lat.sites() : lat.sites();
}

inline void validate_model(const ModelParams& p, const Lattice& lat) {
    if (p.j <= 0) throw std::invalid_argument("ModelParams: J must be positive");
    if (p.kind != ModelKind::heisenberg && p.u < 0)
        throw std::invalid_argument("ModelParams: U must be nonnegative");
    if (p.disorder &&
        static_cast<int>(p.disorder->offsets.size()) != disorder_len(p.kind, lat))
        throw std::invalid_argument("ModelParams: disorder length does not match lattice");
}

/// Model restricted to a partition: the retained bonds are exactly the parent
/// bonds with both endpoints in `subset`, and the disorder (when present) is
/// restricted to the subset sites.
struct RestrictedModel {
    ModelParams params;
    Lattice lattice;
};

inline RestrictedModel restrict_to_partition(const ModelParams& p, const Lattice& parent,
                                             const std::vector<int>& subset) {
    validate_model(p, parent);
    RestrictedModel r{p, restrict_to_sites(parent, subset)};
    if (p.disorder) {
        DisorderPattern d;
        const int per_site = p.kind == ModelKind::fermi_hubbard ? 2 : 1;
        for (int s : subset)
            for (int k = 0; k < per_site; ++k)
                d.offsets.push_back(p.disorder->offsets[static_cast<std::size_t>(s * per_site + k)]);
        r.params.disorder = std::move(d);
    }
    return r;
}

namespace detail {

inline int fermion_parity_below(const Config& c, int mode) {
    int p = 0;
    for (int m = 0; m < mode; ++m) p += c[static_cast<std::size_t>(m)];
    return p & 1;
}

/// Visit the Hamiltonian column of basis state `a`: calls diag(value) once
/// and off(b, value) for every connected state b != a. Shared by the dense
/// builder and the matrix-free apply.
template <typename FDiag, typename FOff>
void visit_column(const ModelParams& p, const SectorBasis& basis, int a, FDiag&& diag,
                  FOff&& off) {
    const Config& c = basis.state(a);
    const auto& bonds = basis.lattice().bonds;
    const double* delta = p.disorder ? p.disorder->offsets.data() : nullptr;

    switch (p.kind) {
        case ModelKind::heisenberg: {
            double d = 0.0;
            for (auto [i, l] : bonds) {
                const int zi = 2 * c[static_cast<std::size_t>(i)] - 1;
                const int zl = 2 * c[static_cast<std::size_t>(l)] - 1;
                d += p.j * zi * zl;
            }
            if (delta)
                for (std::size_t i = 0; i < c.size(); ++i) d += delta[i] * (2 * c[i] - 1);
            diag(d);
            Config t = c;
            for (auto [i, l] : bonds) {
                if (c[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(l)]) continue;
                std::swap(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(l)]);
                const int b = basis.index_of(t);
                if (b >= 0) off(b, 2.0 * p.j);
                std::swap(t[static_cast<std::size_t>(i)], t[static_cast<std::size_t>(l)]);
            }
            break;
        }
        case ModelKind::bose_hubbard: {
            double d = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) {
                d += 0.5 * p.u * c[i] * (c[i] - 1);
                if (delta) d += delta[i] * c[i];
            }
            diag(d);
            Config t = c;
            auto hop = [&](int src, int dst) {
                if (c[static_cast<std::size_t>(src)] == 0) return;
                t[static_cast<std::size_t>(src)] -= 1;
                t[static_cast<std::size_t>(dst)] += 1;
                const int b = basis.index_of(t);
                if (b >= 0)
                    off(b, -p.j * std::sqrt(static_cast<double>(c[static_cast<std::size_t>(src)]) *
                                            (c[static_cast<std::size_t>(dst)] + 1.0)));
                t[static_cast<std::size_t>(src)] += 1;
                t[static_cast<std::size_t>(dst)] -= 1;
            };
            for (auto [i, l] : bonds) {
                hop(i, l);
                hop(l, i);
            }
            break;
        }
        case ModelKind::fermi_hubbard: {
            double d = 0.0;
            const int L = basis.lattice().sites();
            for (int i = 0; i < L; ++i) {
                const int nu = c[static_cast<std::size_t>(2 * i)];
                const int nd = c[static_cast<std::size_t>(2 * i + 1)];
                d += p.u * nu * nd;
                if (delta) d += delta[2 * i] * nu + delta[2 * i + 1] * nd;
            }
            diag(d);
            Config t = c;
            // -t_F c^dag_{l sigma} c_{i sigma} with Jordan-Wigner signs in
            // site-then-spin mode order; both hop directions emitted.
            auto hop = [&](int site_src, int site_dst, int spin) {
                const int ms = 2 * site_src + spin;
                const int md = 2 * site_dst + spin;
                if (c[static_cast<std::size_t>(ms)] == 0 || c[static_cast<std::size_t>(md)] == 1) return;
                int sgn = fermion_parity_below(c, ms);
                t[static_cast<std::size_t>(ms)] = 0;
                sgn ^= fermion_parity_below(t, md);
                t[static_cast<std::size_t>(md)] = 1;
                const int b = basis.index_of(t);
                if (b >= 0) off(b, -p.j * (sgn ? -1.0 : 1.0));
                t[static_cast<std::size_t>(ms)] = 1;
                t[static_cast<std::size_t>(md)] = 0;
            };
            for (auto [i, l] : bonds)
                for (int spin = 0; spin < 2; ++spin) {
                    hop(i, l, spin);
                    hop(l, i, spin);
                }
            break;
        }
    }
}

} // namespace detail

/// Dense sector-restricted Hamiltonian. Real symmetric by construction; the
/// complex SectorOperator view is obtained by promotion where needed.
inline MatrixXd build_hamiltonian(const ModelParams& p, const SectorBasis& basis) {
    validate_model(p, basis.lattice());
    if (species_for(p.kind) != basis.species())
        throw std::invalid_argument("build_hamiltonian: species of params and basis differ");
    const int n = basis.dim();
    MatrixXd h = MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a)
        detail::visit_column(
            p, basis, a, [&](double v) { h(a, a) = v; },
            [&](int b, double v) { h(b, a) += v; });
    return h;
}

/// Matrix-free y = H x (same matrix elements as build_hamiltonian).
inline void apply_hamiltonian(const ModelParams& p, const SectorBasis& basis, const VectorXd& x,
                              VectorXd& y) {
    const int n = basis.dim();
    y.setZero(n);
    for (int a = 0; a < n; ++a) {
        const double xa = x[a];
        detail::visit_column(
            p, basis, a, [&](double v) { y[a] += v * xa; },
            [&](int b, double v) { y[b] += v * xa; });
    }
}

/// Derivative of the diagonal with respect to the disorder offsets:
/// F(a, i) = d H_aa / d delta_i (sigma^z_i, n_i or n_{i sigma} of state a).
/// H(delta) = H(0) + diag(F delta), reused across quenches.
inline MatrixXd disorder_functional(ModelKind kind, const SectorBasis& basis) {
    const int len = disorder_len(kind, basis.lattice());
    MatrixXd f(basis.dim(), len);
    for (int a = 0; a < basis.dim(); ++a) {
        const Config& c = basis.state(a);
        for (int i = 0; i < len; ++i)
            f(a, i) = kind == ModelKind::heisenberg ? 2.0 * c[static_cast<std::size_t>(i)] - 1.0
                                                    : static_cast<double>(c[static_cast<std::size_t>(i)]);
    }
    return f;
}

inline bool is_symmetric(const MatrixXd& h, double tol = 1e-10) {
    return (h - h.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline bool is_unitary(const MatrixXcd& u, double tol = 1e-8) {
    const int n = static_cast<int>(u.rows());
    return (u.adjoint() * u - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() <= tol;
}

/// Eigendecomposition of a real symmetric Hamiltonian, reusable across
/// quench times: exp(-iHt) = V exp(-i diag t) V^T.
struct Spectrum {
    VectorXd evals;
    MatrixXd evecs;

    static Spectrum of(const MatrixXd& h) {
        if (!is_symmetric(h)) throw std::invalid_argument("Spectrum: Hamiltonian is not Hermitian");
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
        return Spectrum{es.eigenvalues(), es.eigenvectors()};
    }

    MatrixXcd propagator(double t) const {
        MatrixXcd m = MatrixXcd::Identity(evals.size(), evals.size());
        evolve_columns(m, t);
        return m;
    }

    VectorXcd evolve(const VectorXcd& v, double t) const {
        MatrixXcd m = v;
        evolve_columns(m, t);
        return m.col(0);
    }

    /// In-place evolution of every column of m. The eigenbasis is real, so
    /// the rotation splits into real GEMMs on the real and imaginary parts.
    void evolve_columns(MatrixXcd& m, double t) const {
        const MatrixXd re = m.real();
        const MatrixXd im = m.imag();
        MatrixXd wre = evecs.transpose() * re;
        MatrixXd wim = evecs.transpose() * im;
        const Eigen::ArrayXd c = (t * evals.array()).cos();
        const Eigen::ArrayXd s = (t * evals.array()).sin();
        // (c - i s) (wre + i wim) = (c wre + s wim) + i (c wim - s wre)
        for (Eigen::Index j = 0; j < wre.cols(); ++j) {
            const Eigen::ArrayXd a = c * wre.col(j).array() + s * wim.col(j).array();
            const Eigen::ArrayXd b = c * wim.col(j).array() - s * wre.col(j).array();
            wre.col(j) = a;
            wim.col(j) = b;
        }
        m.real() = evecs * wre;
        m.imag() = evecs * wim;
    }
};

inline MatrixXcd propagator(const MatrixXd& h, double t) {
    if (t < 0) throw std::invalid_argument("propagator: t must be nonnegative");
    return Spectrum::of(h).propagator(t);
}

inline VectorXcd evolve(const MatrixXd& h, const VectorXcd& v, double t) {
    if (t < 0) throw std::invalid_argument("evolve: t must be nonnegative");
    return Spectrum::of(h).evolve(v, t);
}

struct GroundState {
    VectorXd vec;
    double energy = 0.0;
    double gap = 0.0;
    bool degenerate = false;
};

struct GroundStateOptions {
    int dense_limit = 2048;     // use full diagonalization up to this dimension
    int max_iterations = 400;   // Lanczos budget
    double tol = 1e-12;
    std::uint64_t seed = 0x5eedULL;
};

namespace detail {

inline void fix_sign(VectorXd& v) {
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-9) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

inline GroundState lanczos_ground_state(const ModelParams& p, const SectorBasis& basis,
                                        const GroundStateOptions& opt) {
    const int n = basis.dim();
    const int m_max = std::min(n, opt.max_iterations);
    RandomStream rs = RandomStream(opt.seed).child(StreamTag::lanczos);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rs.normal();
    v.normalize();

    std::vector<VectorXd> vs;
    vs.push_back(v);
    std::vector<double> alpha, beta;
    VectorXd w(n);
    double e_prev = 0.0;
    GroundState gs;
    for (int k = 0; k < m_max; ++k) {
        apply_hamiltonian(p, basis, vs.back(), w);
        if (k > 0) w -= beta.back() * vs[static_cast<std::size_t>(k - 1)];
        alpha.push_back(vs.back().dot(w));
        w -= alpha.back() * vs.back();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : vs) w -= q.dot(w) * q;
        const double b = w.norm();
        const int m = k + 1;
        MatrixXd tri = MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            tri(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(tri);
        const double e0 = es.eigenvalues()[0];
        // residual bound of the lowest Ritz pair: beta_{m+1} |last component|
        const double res_est = b * std::abs(es.eigenvectors()(m - 1, 0));
        const bool converged =
            k > 8 && (res_est < 1e-8 * std::max(1.0, std::abs(e0)) ||
                      std::abs(e0 - e_prev) < opt.tol * std::max(1.0, std::abs(e0)) * 1e-3);
        if (b < 1e-10 || converged || m == m_max) {
            VectorXd y = es.eigenvectors().col(0);
            gs.vec = VectorXd::Zero(n);
            for (int i = 0; i < m; ++i) gs.vec += y[i] * vs[static_cast<std::size_t>(i)];
            gs.vec.normalize();
            gs.energy = e0;
            gs.gap = m > 1 ? es.eigenvalues()[1] - e0 : 0.0;
            gs.degenerate = m > 1 && gs.gap < 1e-8 * std::max(1.0, std::abs(e0));
            detail::fix_sign(gs.vec);
            return gs;
        }
        beta.push_back(b);
        vs.push_back(w / b);
        e_prev = e0;
    }
    throw std::runtime_error("lanczos_ground_state: did not converge");
}

} // namespace detail

/// Lowest eigenpair of the sector Hamiltonian. Sign convention: the first
/// amplitude above 1e-9 is made positive. `degenerate` is set when the gap
/// to the next (Ritz) value is below 1e-8.
inline GroundState ground_state(const ModelParams& p, const SectorBasis& basis,
                                const GroundStateOptions& opt = {}) {
    validate_model(p, basis.lattice());
    if (basis.empty()) throw std::invalid_argument("ground_state: empty sector");
    if (basis.dim() > opt.dense_limit) return detail::lanczos_ground_state(p, basis, opt);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(build_hamiltonian(p, basis));
    GroundState gs;
    gs.vec = es.eigenvectors().col(0);
    gs.energy = es.eigenvalues()[0];
    gs.gap = basis.dim() > 1 ? es.eigenvalues()[1] - gs.energy : 0.0;
    gs.degenerate = basis.dim() > 1 && gs.gap < 1e-8 * std::max(1.0, std::abs(gs.energy));
    detail::fix_sign(gs.vec);
    return gs;
}

} // namespace renyiprobe
