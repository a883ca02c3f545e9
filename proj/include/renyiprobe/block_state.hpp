#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "renyiprobe/basis.hpp"
#include "renyiprobe/models.hpp"
#include "renyiprobe/subsystem.hpp"

namespace renyiprobe {

/// One symmetry block of a measured state: rho restricted to a sector, with
/// the canonical basis of that sector. Block traces are the sector weights
/// (they sum to one across the BlockState). Pure blocks may carry the state
/// vector instead of the full matrix.
struct StateBlock {
    SectorLabel label;
    SectorBasis basis;
    MatrixXcd rho;                  // used when pure is unset
    std::optional<VectorXcd> pure;  // unnormalized: trace of the block is pure->squaredNorm()

    int dim() const { return basis.dim(); }

    double trace() const {
        if (pure) return pure->squaredNorm();
        return rho.trace().real();
    }

    double purity() const {
        if (pure) {
            const double t = pure->squaredNorm();
            return t * t;
        }
        return (rho * rho).trace().real();
    }

    MatrixXcd dense() const {
        if (pure) return (*pure) * pure->adjoint();
        return rho;
    }
};

/// Block-diagonal state over symmetry sectors (the paper's
/// rho_A = (+) rho_A^{(N,Sz)} decomposition).
struct BlockState {
    Species species = Species::spin_half;
    Lattice lattice;
    std::vector<StateBlock> blocks;

    double total_trace() const {
        double t = 0;
        for (const auto& b : blocks) t += b.trace();
        return t;
    }

    double total_purity() const {
        double p = 0;
        for (const auto& b : blocks) p += b.purity();
        return p;
    }

    /// StateInput invariants: Hermitian PSD blocks, traces summing to 1.
    void validate(double tol = 1e-10) const {
        double t = 0;
        for (const auto& b : blocks) {
            if (!b.pure) {
                if (b.rho.rows() != b.basis.dim() || b.rho.cols() != b.basis.dim())
                    throw std::invalid_argument("BlockState: block dimension mismatch");
                if ((b.rho - b.rho.adjoint()).cwiseAbs().maxCoeff() > tol)
                    throw std::invalid_argument("BlockState: block not Hermitian");
                Eigen::SelfAdjointEigenSolver<MatrixXcd> es(b.rho, Eigen::EigenvaluesOnly);
                if (es.eigenvalues().minCoeff() < -tol)
                    throw std::invalid_argument("BlockState: block not positive semidefinite");
            }
            t += b.trace();
        }
        if (std::abs(t - 1.0) > tol)
            throw std::invalid_argument("BlockState: traces do not sum to one");
    }
};

/// Pure state living in a single already-sector-restricted basis.
inline BlockState block_state_from_pure(const SectorBasis& basis, const VectorXcd& psi) {
    if (psi.size() != basis.dim())
        throw std::invalid_argument("block_state_from_pure: vector/basis dimension mismatch");
    if (basis.empty()) throw std::invalid_argument("block_state_from_pure: empty sector");
    BlockState st;
    st.species = basis.species();
    st.lattice = basis.lattice();
    StateBlock b;
    b.label = basis.label_of(0);
    b.basis = basis;
    b.pure = psi;
    st.blocks.push_back(std::move(b));
    return st;
}

/// Mixture of pure states sharing one sector basis.
inline BlockState block_state_mixture(const SectorBasis& basis,
                                      const std::vector<std::pair<double, VectorXcd>>& parts) {
    if (parts.empty()) throw std::invalid_argument("block_state_mixture: no components");
    BlockState st;
    st.species = basis.species();
    st.lattice = basis.lattice();
    StateBlock b;
    b.label = basis.label_of(0);
    b.basis = basis;
    b.rho = MatrixXcd::Zero(basis.dim(), basis.dim());
    for (const auto& [w, psi] : parts) {
        if (psi.size() != basis.dim())
            throw std::invalid_argument("block_state_mixture: vector/basis dimension mismatch");
        b.rho += w * (psi * psi.adjoint());
    }
    st.blocks.push_back(std::move(b));
    return st;
}

/// Split a density matrix given on the inner space of a SubsystemMap into
/// sector blocks with canonical bases on the induced sublattice. Off-block
/// coherences are dropped; for states reduced from a sector-supported parent
/// they vanish identically (checked against `coherence_tol`).
inline BlockState split_into_blocks(const SectorBasis& parent, const std::vector<int>& subset,
                                    const SubsystemMap& map, const MatrixXcd& rho_inner,
                                    double coherence_tol = 1e-9) {
    BlockState st;
    st.species = parent.species();
    st.lattice = restrict_to_sites(parent.lattice(), subset);

    const auto& inner = map.inner_states();
    std::map<SectorLabel, std::vector<int>> by_label;
    for (std::size_t i = 0; i < inner.size(); ++i)
        by_label[sector_of(parent.species(), inner[i])].push_back(static_cast<int>(i));

    double max_coh = 0.0;
    for (const auto& [lab_a, idx_a] : by_label)
        for (const auto& [lab_b, idx_b] : by_label) {
            if (lab_a == lab_b) continue;
            for (int i : idx_a)
                for (int j : idx_b) max_coh = std::max(max_coh, std::abs(rho_inner(i, j)));
        }
    if (max_coh > coherence_tol)
        throw std::invalid_argument("split_into_blocks: state has coherences between sectors");

    const int parent_cap = parent.constraint().boson_cap;
    for (const auto& [lab, idx] : by_label) {
        StateBlock b;
        b.label = lab;
        b.basis = build_sector(parent.species(), st.lattice,
                               SectorConstraint::from_label(parent.species(), lab, parent_cap));
        b.rho = MatrixXcd::Zero(b.basis.dim(), b.basis.dim());
        double w = 0;
        for (int i : idx) w += rho_inner(i, i).real();
        if (w < 1e-14) continue;
        for (int i : idx) {
            const int bi = b.basis.index_of(inner[static_cast<std::size_t>(i)]);
            for (int j : idx) {
                const int bj = b.basis.index_of(inner[static_cast<std::size_t>(j)]);
                b.rho(bi, bj) = rho_inner(i, j);
            }
        }
        st.blocks.push_back(std::move(b));
    }
    return st;
}

} // namespace renyiprobe
