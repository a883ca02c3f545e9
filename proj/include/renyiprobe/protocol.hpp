#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "renyiprobe/block_state.hpp"
#include "renyiprobe/estimation.hpp"
#include "renyiprobe/measurement.hpp"
#include "renyiprobe/oracle.hpp"
#include "renyiprobe/random_unitary.hpp"

namespace renyiprobe {

/// Parallel map over task indices [0, n). Tasks must write only to their own
/// slots; results are identical for any thread count because all randomness
/// is keyed by the task index.
inline void parallel_for(int n, int threads, const std::function<void(int)>& task) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += threads) task(i);
        });
    for (auto& t : pool) t.join();
}

enum class EnsembleKind {
    cue,       ///< Haar images of the state's eigenbasis (rank-aware columns)
    cue_full,  ///< materialize the full Haar matrix per sector
    quench,    ///< disordered-quench unitaries (Eq. of motion per sector)
};

inline std::string to_string(EnsembleKind k) {
    switch (k) {
        case EnsembleKind::cue: return "cue";
        case EnsembleKind::cue_full: return "cue-full";
        case EnsembleKind::quench: return "quench";
    }
    return "?";
}

struct GlobalProtocolOptions {
    EstimationBudget budget;
    EnsembleKind ensemble = EnsembleKind::cue;
    ModelParams quench_params;  // clean model evolved during quenches
    QuenchSchedule schedule;    // quench ensemble only
    std::uint64_t seed = 1;
    int threads = 1;
    bool keep_records = false;
};

struct GlobalProtocolResult {
    PurityReport report;
    /// Per-unitary per-sector statistics (trace weight, summed 2nd moment).
    std::vector<std::vector<double>> trace_samples;
    std::vector<std::vector<double>> moment_samples;
    std::vector<MeasurementRecord> records;  // only when keep_records
};

namespace detail {

/// Spectral form of a block: orthonormal columns weighted by eigenvalues.
struct BlockSpectral {
    int dim = 0;
    double trace = 0;
    VectorXd weights;  // nonzero eigenvalues of the block (sum = trace)
    MatrixXcd vecs;    // corresponding eigenvectors (dim x rank)
};

inline BlockSpectral spectral_of(const StateBlock& b) {
    BlockSpectral s;
    s.dim = b.dim();
    s.trace = b.trace();
    if (b.pure) {
        s.weights = VectorXd::Constant(1, s.trace);
        s.vecs = *b.pure / b.pure->norm();
        return s;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(b.rho);
    const double tol = 1e-13 * std::max(1.0, s.trace);
    std::vector<int> keep;
    for (int i = 0; i < s.dim; ++i)
        if (es.eigenvalues()[i] > tol) keep.push_back(i);
    s.weights.resize(static_cast<Eigen::Index>(keep.size()));
    s.vecs.resize(s.dim, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
        s.weights[static_cast<Eigen::Index>(k)] = es.eigenvalues()[keep[k]];
        s.vecs.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]);
    }
    return s;
}

} // namespace detail

/// Fold per-unitary statistics (trace weight and summed second moment per
/// sector) into a PurityReport: sector-wise inversion, totals and jackknife
/// standard errors over unitaries.
inline PurityReport aggregate_global(const BlockState& state,
                                     const std::vector<std::vector<double>>& trace_samples,
                                     const std::vector<std::vector<double>>& moment_samples,
                                     const EstimationBudget& budget) {
    const int nb = static_cast<int>(state.blocks.size());
    const int nu = static_cast<int>(trace_samples.size());
    PurityReport rep;
    rep.budget = budget;
    std::vector<double> col(static_cast<std::size_t>(nu));
    std::vector<double> tbar(static_cast<std::size_t>(nb)), mbar(static_cast<std::size_t>(nb));
    for (int k = 0; k < nb; ++k) {
        for (int u = 0; u < nu; ++u)
            col[static_cast<std::size_t>(u)] =
                trace_samples[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
        tbar[static_cast<std::size_t>(k)] = pairwise_mean(col);
        for (int u = 0; u < nu; ++u)
            col[static_cast<std::size_t>(u)] =
                moment_samples[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
        mbar[static_cast<std::size_t>(k)] = pairwise_mean(col);
    }
    double total = 0;
    for (int k = 0; k < nb; ++k) {
        const auto& blk = state.blocks[static_cast<std::size_t>(k)];
        PurityReport::SectorEntry e;
        e.dim = blk.dim();
        e.trace_estimate = tbar[static_cast<std::size_t>(k)];
        e.purity_estimate = invert_global(e.trace_estimate, mbar[static_cast<std::size_t>(k)], e.dim);
        e.exact_purity = blk.purity();
        total += e.purity_estimate;
        rep.per_sector[blk.label] = e;
    }
    rep.total_purity = total;
    rep.exact_total_purity = state.total_purity();

    // per-unitary rows are (trace_0..trace_nb-1, m_0..m_nb-1)
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(nu),
                                          std::vector<double>(2 * static_cast<std::size_t>(nb)));
    for (int u = 0; u < nu; ++u)
        for (int k = 0; k < nb; ++k) {
            rows[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)] =
                trace_samples[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
            rows[static_cast<std::size_t>(u)][static_cast<std::size_t>(nb + k)] =
                moment_samples[static_cast<std::size_t>(u)][static_cast<std::size_t>(k)];
        }
    auto total_from_means = [&](const std::vector<double>& m) {
        double p = 0;
        for (int k = 0; k < nb; ++k)
            p += invert_global(m[static_cast<std::size_t>(k)], m[static_cast<std::size_t>(nb + k)],
                               state.blocks[static_cast<std::size_t>(k)].dim());
        return p;
    };
    rep.std_error = jackknife_std_error(rows, total_from_means);
    rep.renyi2_std_error = jackknife_std_error(rows, [&](const std::vector<double>& m) {
        const double p = total_from_means(m);
        return p > 0 ? -std::log(p) : 0.0;
    });
    rep.finalize();
    return rep;
}

/// Run the global randomized-measurement protocol on a block-diagonal state
/// and invert the design identities into a purity report.
inline GlobalProtocolResult run_global_protocol(const BlockState& state,
                                                const GlobalProtocolOptions& opt) {
    opt.budget.validate();
    if (state.blocks.empty()) throw std::invalid_argument("run_global_protocol: no blocks");
    const int nb = static_cast<int>(state.blocks.size());
    const int nu = opt.budget.n_unitaries;

    std::vector<detail::BlockSpectral> spec;
    spec.reserve(static_cast<std::size_t>(nb));
    for (const auto& b : state.blocks) spec.push_back(detail::spectral_of(b));

    RandomStream run(opt.seed);
    // single_pattern mode: one disorder pattern for the entire run
    DisorderPattern shared;
    const DisorderPattern* shared_ptr = nullptr;
    if (opt.ensemble == EnsembleKind::quench &&
        opt.schedule.mode == QuenchSchedule::PatternMode::single_pattern) {
        RandomStream ps = run.child(StreamTag::shared_pattern);
        shared = detail::draw_pattern(opt.schedule, opt.quench_params.kind, state.lattice.sites(), ps);
        shared_ptr = &shared;
    }

    GlobalProtocolResult res;
    res.trace_samples.assign(static_cast<std::size_t>(nu), std::vector<double>(nb, 0.0));
    res.moment_samples.assign(static_cast<std::size_t>(nu), std::vector<double>(nb, 0.0));
    if (opt.keep_records) res.records.resize(static_cast<std::size_t>(nu));

    parallel_for(nu, opt.threads, [&](int u) {
        RandomStream ustream = run.child(StreamTag::cue, static_cast<std::uint64_t>(u));
        std::vector<VectorXd> probs(static_cast<std::size_t>(nb));
        for (int k = 0; k < nb; ++k) {
            const auto& sp = spec[static_cast<std::size_t>(k)];
            const int rank = static_cast<int>(sp.weights.size());
            switch (opt.ensemble) {
                case EnsembleKind::cue: {
                    RandomStream bs = ustream.child(StreamTag::sector_block, static_cast<std::uint64_t>(k));
                    const MatrixXcd v = sample_cue_columns(sp.dim, rank, bs);
                    probs[static_cast<std::size_t>(k)] = v.cwiseAbs2() * sp.weights;
                    break;
                }
                case EnsembleKind::cue_full: {
                    RandomStream bs = ustream.child(StreamTag::sector_block, static_cast<std::uint64_t>(k));
                    const MatrixXcd uu = sample_cue(sp.dim, bs);
                    probs[static_cast<std::size_t>(k)] =
                        outcome_probabilities(uu, state.blocks[static_cast<std::size_t>(k)]);
                    break;
                }
                case EnsembleKind::quench: {
                    MatrixXcd m = sp.vecs;
                    for_each_quench(
                        opt.quench_params, state.blocks[static_cast<std::size_t>(k)].basis,
                        opt.schedule, ustream,
                        [&](const Spectrum& hsp, double t, int) { hsp.evolve_columns(m, t); },
                        shared_ptr);
                    probs[static_cast<std::size_t>(k)] = m.cwiseAbs2() * sp.weights;
                    break;
                }
            }
        }

        auto& wrow = res.trace_samples[static_cast<std::size_t>(u)];
        auto& mrow = res.moment_samples[static_cast<std::size_t>(u)];
        if (opt.budget.exact()) {
            for (int k = 0; k < nb; ++k) {
                wrow[static_cast<std::size_t>(k)] = probs[static_cast<std::size_t>(k)].sum();
                mrow[static_cast<std::size_t>(k)] = probs[static_cast<std::size_t>(k)].squaredNorm();
            }
        } else {
            Eigen::Index total = 0;
            for (const auto& p : probs) total += p.size();
            VectorXd global(total);
            Eigen::Index off = 0;
            for (const auto& p : probs) {
                global.segment(off, p.size()) = p;
                off += p.size();
            }
            RandomStream ms = ustream.child(StreamTag::measurement);
            const CountMap counts = sample_counts(global, opt.budget.n_measurements, ms);
            off = 0;
            std::size_t ci = 0;
            for (int k = 0; k < nb; ++k) {
                const Eigen::Index dk = probs[static_cast<std::size_t>(k)].size();
                CountMap local;
                while (ci < counts.size() && counts[ci].first < off + dk) {
                    local.emplace_back(counts[ci].first - static_cast<int>(off), counts[ci].second);
                    ++ci;
                }
                wrow[static_cast<std::size_t>(k)] =
                    static_cast<double>(total_counts(local)) / opt.budget.n_measurements;
                mrow[static_cast<std::size_t>(k)] =
                    moment2_from_counts(local, opt.budget.n_measurements);
                if (opt.keep_records)
                    res.records[static_cast<std::size_t>(u)].sectors.push_back(
                        {state.blocks[static_cast<std::size_t>(k)].label, VectorXd(), local});
                off += dk;
            }
        }
        if (opt.keep_records) {
            auto& rec = res.records[static_cast<std::size_t>(u)];
            rec.unitary_index = u;
            rec.exact = opt.budget.exact();
            if (rec.exact)
                for (int k = 0; k < nb; ++k)
                    rec.sectors.push_back({state.blocks[static_cast<std::size_t>(k)].label,
                                           probs[static_cast<std::size_t>(k)], {}});
        }
    });

    res.report = aggregate_global(state, res.trace_samples, res.moment_samples, opt.budget);
    return res;
}

// ---- local-unitary protocol ---------------------------------------------

struct LocalProtocolOptions {
    EstimationBudget budget;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct LocalProtocolResult {
    SubsetPurityTable table;                          // estimates with std errors
    SubsetPurityOracle exact;                         // oracle companion values
    std::vector<std::vector<double>> moment_samples;  // [u][mask] summed marginal moment
};

/// Run the local-unitary protocol on a pure product-space state of `n_sites`
/// constituents with uniform local dimension d, and reconstruct all subset
/// purities recursively.
inline LocalProtocolResult run_local_protocol(const VectorXcd& psi, int n_sites, int d,
                                              const LocalProtocolOptions& opt) {
    opt.budget.validate();
    const unsigned nmask = 1u << n_sites;
    Eigen::Index dim = 1;
    for (int i = 0; i < n_sites; ++i) dim *= d;
    if (psi.size() != dim) throw std::invalid_argument("run_local_protocol: dimension mismatch");
    const int nu = opt.budget.n_unitaries;

    // outcome ordinal -> marginal ordinal per mask
    std::vector<std::vector<int>> keymap(nmask, std::vector<int>(static_cast<std::size_t>(dim)));
    std::vector<int> mask_dim(nmask);
    for (unsigned mask = 0; mask < nmask; ++mask) {
        int kd = 1;
        for (int i = 0; i < n_sites; ++i)
            if ((mask >> i) & 1u) kd *= d;
        mask_dim[mask] = kd;
        for (int s = 0; s < dim; ++s)
            keymap[mask][static_cast<std::size_t>(s)] =
                detail::mask_split_ordinal(s, n_sites, d, mask).first;
    }

    RandomStream run(opt.seed);
    LocalProtocolResult res;
    res.moment_samples.assign(static_cast<std::size_t>(nu), std::vector<double>(nmask, 0.0));
    const std::vector<int> dims(static_cast<std::size_t>(n_sites), d);

    parallel_for(nu, opt.threads, [&](int u) {
        RandomStream ustream = run.child(StreamTag::cue, static_cast<std::uint64_t>(u));
        const auto us = sample_local_unitaries(dims, ustream);
        const VectorXcd v = apply_local_unitaries(us, psi);
        const VectorXd p = v.cwiseAbs2();
        auto& row = res.moment_samples[static_cast<std::size_t>(u)];
        row[0] = 1.0;
        if (opt.budget.exact()) {
            std::vector<double> marg;
            for (unsigned mask = 1; mask < nmask; ++mask) {
                marg.assign(static_cast<std::size_t>(mask_dim[mask]), 0.0);
                for (int s = 0; s < dim; ++s)
                    marg[static_cast<std::size_t>(keymap[mask][static_cast<std::size_t>(s)])] += p[s];
                double m = 0;
                for (double x : marg) m += x * x;
                row[mask] = m;
            }
        } else {
            RandomStream ms = ustream.child(StreamTag::measurement);
            const CountMap counts = sample_counts(p, opt.budget.n_measurements, ms);
            std::vector<double> marg;
            for (unsigned mask = 1; mask < nmask; ++mask) {
                marg.assign(static_cast<std::size_t>(mask_dim[mask]), 0.0);
                for (auto [s, c] : counts)
                    marg[static_cast<std::size_t>(keymap[mask][static_cast<std::size_t>(s)])] += c;
                double num = 0;
                for (double c : marg) num += c * (c - 1.0);
                row[mask] = num / (static_cast<double>(opt.budget.n_measurements) *
                                   (opt.budget.n_measurements - 1.0));
            }
        }
    });

    // M(A') = (d+1)^{|A'|} <sum_{s_A'} P^2>, then the subset recursion
    std::vector<double> weight(nmask, 1.0);
    for (unsigned mask = 1; mask < nmask; ++mask)
        weight[mask] = std::pow(static_cast<double>(d + 1), __builtin_popcount(mask));
    std::vector<double> mom(nmask);
    std::vector<double> col(static_cast<std::size_t>(nu));
    for (unsigned mask = 0; mask < nmask; ++mask) {
        for (int u = 0; u < nu; ++u)
            col[static_cast<std::size_t>(u)] = res.moment_samples[static_cast<std::size_t>(u)][mask];
        mom[mask] = weight[mask] * pairwise_mean(col);
    }
    res.table = invert_local(mom, n_sites);

    // The subset recursion is linear in the moments (Mobius inversion over
    // the subset lattice), so the jackknife error of each purity reduces to
    // the standard error of a per-unitary linear combination.
    res.table.std_error.assign(nmask, 0.0);
    std::vector<double> y(static_cast<std::size_t>(nu));
    for (unsigned mask = 1; mask < nmask; ++mask) {
        for (int u = 0; u < nu; ++u) {
            const auto& row = res.moment_samples[static_cast<std::size_t>(u)];
            double acc = 0;
            unsigned sub = mask;
            while (true) {
                const int par = (__builtin_popcount(mask) - __builtin_popcount(sub)) & 1;
                acc += (par ? -1.0 : 1.0) * weight[sub] * row[sub];
                if (sub == 0) break;
                sub = (sub - 1) & mask;
            }
            y[static_cast<std::size_t>(u)] = acc;
        }
        const double mean = pairwise_mean(y);
        double ss = 0;
        for (double v : y) ss += (v - mean) * (v - mean);
        if (nu > 1) res.table.std_error[mask] = std::sqrt(ss / (static_cast<double>(nu) * (nu - 1)));
    }
    res.exact = oracle_subset_purities(psi, n_sites, d);
    return res;
}

} // namespace renyiprobe
