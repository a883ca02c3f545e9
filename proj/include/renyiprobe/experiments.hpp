#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "renyiprobe/config.hpp"
#include "renyiprobe/csvio.hpp"
#include "renyiprobe/protocol.hpp"
#include "renyiprobe/states.hpp"

namespace renyiprobe {

// ---------------------------------------------------------------------------
// CUE fourth-order correlator check (Fig. 3 style verification)
// ---------------------------------------------------------------------------

struct CueCheckRow {
    int dim = 0;
    std::string tuple;       // "i1 i2 i3 i4"
    double emp_re = 0, emp_im = 0;
    double expected = 0;     // exact design value of the real part
    double se_re = 0, se_im = 0;

    bool within(double n_sigma) const {
        // identically-real classes (all deltas matched) leave only rounding
        // noise in the imaginary part; cover it with an absolute floor
        return std::abs(emp_re - expected) <= n_sigma * se_re + 1e-15 &&
               std::abs(emp_im) <= n_sigma * se_im + 1e-15;
    }
};

/// Empirical <u_{s i1} u*_{s i2} u_{s i3} u*_{s i4}> for the representative
/// index classes of the 2-design identity, at s = 0.
inline std::vector<CueCheckRow> run_cue_check(const std::vector<int>& dims, int samples,
                                              std::uint64_t seed) {
    std::vector<CueCheckRow> rows;
    for (int dim : dims) {
        std::vector<std::array<int, 4>> tuples = {
            {0, 0, 0, 0}, {0, 0, 1, 1}, {0, 1, 1, 0}, {0, 0, 0, 1}, {0, 1, 0, 1}};
        if (dim >= 4) tuples.push_back({0, 1, 2, 3});
        std::vector<double> sum_re(tuples.size(), 0), sum_im(tuples.size(), 0);
        std::vector<double> ss_re(tuples.size(), 0), ss_im(tuples.size(), 0);
        RandomStream run = RandomStream(seed).child(StreamTag::cue, static_cast<std::uint64_t>(dim));
        for (int m = 0; m < samples; ++m) {
            const MatrixXcd u = sample_cue(dim, run);
            for (std::size_t t = 0; t < tuples.size(); ++t) {
                const auto& ix = tuples[t];
                const cxd z = u(0, ix[0]) * std::conj(u(0, ix[1])) * u(0, ix[2]) *
                              std::conj(u(0, ix[3]));
                sum_re[t] += z.real();
                sum_im[t] += z.imag();
                ss_re[t] += z.real() * z.real();
                ss_im[t] += z.imag() * z.imag();
            }
        }
        const double nn = static_cast<double>(dim) * (dim + 1);
        for (std::size_t t = 0; t < tuples.size(); ++t) {
            CueCheckRow r;
            r.dim = dim;
            const auto& ix = tuples[t];
            r.tuple = std::to_string(ix[0]) + " " + std::to_string(ix[1]) + " " +
                      std::to_string(ix[2]) + " " + std::to_string(ix[3]);
            const double d12 = ix[0] == ix[1], d34 = ix[2] == ix[3];
            const double d14 = ix[0] == ix[3], d23 = ix[1] == ix[2];
            r.expected = (d12 * d34 + d14 * d23) / nn;
            r.emp_re = sum_re[t] / samples;
            r.emp_im = sum_im[t] / samples;
            r.se_re = std::sqrt(std::max(ss_re[t] / samples - r.emp_re * r.emp_re, 0.0) / samples);
            r.se_im = std::sqrt(std::max(ss_im[t] / samples - r.emp_im * r.emp_im, 0.0) / samples);
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Quench-convergence engine (Fig. 2 style curves), shared by the converge,
// quench-opt and floquet-style runs
// ---------------------------------------------------------------------------

struct ConvergeSettings {
    ModelParams model{ModelKind::heisenberg, 1.0};
    Lattice lattice = Lattice::chain(8);
    QuenchSchedule schedule;      // jt/delta/mode/time_mode; eta comes from the grid
    std::vector<int> eta_grid{8, 16, 24, 40};
    EstimationBudget budget{500, -1};
    int repetitions = 4;
    std::uint64_t seed = 1;
    int threads = 1;
    int max_dim = 3000;
};

struct ConvergeCurve {
    TestState state = TestState::af;
    double exact_purity = 1.0;
    std::vector<int> eta_grid;
    std::vector<double> jt_tot;          // expected J*T_tot per grid point
    std::vector<double> mean_abs_error;  // per grid point, averaged over repetitions
    double cue_reference = 0;            // same-budget CUE-sampler error (plateau)
};

namespace detail {

inline BlockState converge_test_state(TestState ts, const Lattice& lat, std::uint64_t seed) {
    const Config af = af_config(lat);
    const Config ps = ps_config(lat);
    switch (ts) {
        case TestState::af: {
            const auto basis = build_sector(Species::spin_half, lat,
                                            SectorConstraint::spin_sz(sector_of(Species::spin_half, af).sz));
            return block_state_from_pure(basis, basis_vector(basis, af));
        }
        case TestState::ps: {
            const auto basis = build_sector(Species::spin_half, lat,
                                            SectorConstraint::spin_sz(sector_of(Species::spin_half, ps).sz));
            return block_state_from_pure(basis, basis_vector(basis, ps));
        }
        case TestState::random_sector: {
            const auto basis = build_sector(Species::spin_half, lat,
                                            SectorConstraint::spin_sz(sector_of(Species::spin_half, af).sz));
            return block_state_from_pure(basis, random_sector_state(basis, seed));
        }
        case TestState::af_ps_mixture: {
            const int sza = sector_of(Species::spin_half, af).sz;
            const int szp = sector_of(Species::spin_half, ps).sz;
            if (sza != szp)
                throw std::invalid_argument("AF/PS mixture needs both states in one sector");
            const auto basis = build_sector(Species::spin_half, lat, SectorConstraint::spin_sz(sza));
            return block_state_mixture(basis,
                                       {{0.5, basis_vector(basis, af)}, {0.5, basis_vector(basis, ps)}});
        }
    }
    throw std::logic_error("unreachable");
}

} // namespace detail

/// Mean absolute purity error of the same estimator fed by exact CUE draws,
/// averaged over `repetitions` independent ensembles.
inline double cue_reference_error(const BlockState& state, const EstimationBudget& budget,
                                  int repetitions, std::uint64_t seed, int threads) {
    double acc = 0;
    const double exact = state.total_purity();
    for (int rep = 0; rep < repetitions; ++rep) {
        GlobalProtocolOptions opt;
        opt.budget = budget;
        opt.ensemble = EnsembleKind::cue;
        opt.threads = threads;
        opt.seed = RandomStream(seed).child(StreamTag::trial, static_cast<std::uint64_t>(rep)).key();
        acc += std::abs(run_global_protocol(state, opt).report.total_purity - exact);
    }
    return acc / repetitions;
}

/// Error of the quench-sampled purity estimate as a function of the quench
/// count, evaluated incrementally along each unitary's quench sequence.
inline ConvergeCurve converge_curve(TestState ts, const ConvergeSettings& s) {
    ConvergeCurve out;
    out.state = ts;
    out.eta_grid = s.eta_grid;
    if (s.eta_grid.empty() || !std::is_sorted(s.eta_grid.begin(), s.eta_grid.end()) ||
        s.eta_grid.front() < 1)
        throw std::invalid_argument("converge_curve: eta grid must be ascending and positive");
    s.budget.validate();

    const BlockState state = detail::converge_test_state(ts, s.lattice, s.seed);
    const StateBlock& blk = state.blocks.front();
    if (blk.dim() > s.max_dim)
        throw std::invalid_argument("converge_curve: sector dimension " + std::to_string(blk.dim()) +
                                    " exceeds the cap " + std::to_string(s.max_dim));
    out.exact_purity = state.total_purity();
    const detail::BlockSpectral spectral = detail::spectral_of(blk);

    QuenchSchedule sched = s.schedule;
    sched.eta = s.eta_grid.back();
    const int ng = static_cast<int>(s.eta_grid.size());
    const int nu = s.budget.n_unitaries;
    out.mean_abs_error.assign(static_cast<std::size_t>(ng), 0.0);
    out.jt_tot.resize(static_cast<std::size_t>(ng));
    for (int g = 0; g < ng; ++g) {
        QuenchSchedule tmp = sched;
        tmp.eta = s.eta_grid[static_cast<std::size_t>(g)];
        out.jt_tot[static_cast<std::size_t>(g)] = tmp.total_time_scale() * s.model.j;
    }

    for (int rep = 0; rep < s.repetitions; ++rep) {
        RandomStream rep_stream = RandomStream(s.seed).child(StreamTag::trial, static_cast<std::uint64_t>(rep));
        DisorderPattern shared;
        const DisorderPattern* shared_ptr = nullptr;
        if (sched.mode == QuenchSchedule::PatternMode::single_pattern) {
            RandomStream ps = rep_stream.child(StreamTag::shared_pattern);
            shared = detail::draw_pattern(sched, s.model.kind, s.lattice.sites(), ps);
            shared_ptr = &shared;
        }
        std::vector<std::vector<double>> wrows(static_cast<std::size_t>(nu),
                                               std::vector<double>(static_cast<std::size_t>(ng)));
        std::vector<std::vector<double>> mrows = wrows;
        parallel_for(nu, s.threads, [&](int u) {
            RandomStream ustream = rep_stream.child(StreamTag::cue, static_cast<std::uint64_t>(u));
            MatrixXcd m = spectral.vecs;
            int g = 0;
            for_each_quench(
                s.model, blk.basis, sched, ustream,
                [&](const Spectrum& sp, double t, int j) {
                    sp.evolve_columns(m, t);
                    if (g < ng && j == s.eta_grid[static_cast<std::size_t>(g)]) {
                        const VectorXd p = m.cwiseAbs2() * spectral.weights;
                        if (s.budget.exact()) {
                            wrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)] = p.sum();
                            mrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)] =
                                p.squaredNorm();
                        } else {
                            RandomStream ms = ustream.child(StreamTag::measurement,
                                                            static_cast<std::uint64_t>(g));
                            const CountMap c = sample_counts(p, s.budget.n_measurements, ms);
                            wrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)] = 1.0;
                            mrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)] =
                                moment2_from_counts(c, s.budget.n_measurements);
                        }
                        ++g;
                    }
                },
                shared_ptr);
        });
        for (int g = 0; g < ng; ++g) {
            std::vector<std::vector<double>> w1(static_cast<std::size_t>(nu), std::vector<double>(1));
            std::vector<std::vector<double>> m1 = w1;
            for (int u = 0; u < nu; ++u) {
                w1[static_cast<std::size_t>(u)][0] = wrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)];
                m1[static_cast<std::size_t>(u)][0] = mrows[static_cast<std::size_t>(u)][static_cast<std::size_t>(g)];
            }
            const PurityReport rep_g = aggregate_global(state, w1, m1, s.budget);
            out.mean_abs_error[static_cast<std::size_t>(g)] +=
                std::abs(rep_g.total_purity - out.exact_purity) / s.repetitions;
        }
    }
    out.cue_reference = cue_reference_error(state, s.budget, s.repetitions,
                                            RandomStream(s.seed).child(StreamTag::cue).key(), s.threads);
    return out;
}

// ---------------------------------------------------------------------------
// Statistical-error scaling engine (Fig. 3)
// ---------------------------------------------------------------------------

struct ErrorScalingSettings {
    std::vector<int> na_list{16, 64, 256};   // powers of two (spin chains)
    std::vector<int> nu_list{100, 1000};
    std::vector<int> nm_list{100, -1};       // -1 = exact
    int trials = 24;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ErrorScalingRow {
    int na = 0, nu = 0, nm = 0;  // nm = -1 for exact
    double empirical = 0;
    double predicted = 0;
};

/// Mean |p2_e - p2| of a fixed Haar-random pure state under the exact CUE
/// sampler, across the (N_A, N_U, N_M) grid. The prediction column uses C2
/// fitted from the exact-N_M rows of the same run.
inline std::vector<ErrorScalingRow> run_error_scaling(const ErrorScalingSettings& s) {
    std::vector<ErrorScalingRow> rows;
    for (int na : s.na_list) {
        const int l = static_cast<int>(std::round(std::log2(na)));
        if ((1 << l) != na)
            throw std::invalid_argument("error scaling: N_A must be a power of two");
        const auto basis = build_sector(Species::spin_half, Lattice::chain(l), SectorConstraint::none());
        const BlockState state = block_state_from_pure(
            basis, random_sector_state(basis, RandomStream(s.seed).child(StreamTag::state_init,
                                                                         static_cast<std::uint64_t>(na)).key()));
        for (int nu : s.nu_list)
            for (int nm : s.nm_list) {
                double acc = 0;
                for (int t = 0; t < s.trials; ++t) {
                    GlobalProtocolOptions opt;
                    opt.budget = {nu, nm};
                    opt.ensemble = EnsembleKind::cue;
                    opt.threads = s.threads;
                    opt.seed = RandomStream(s.seed)
                                   .child(StreamTag::trial, static_cast<std::uint64_t>(t),
                                          static_cast<std::uint64_t>(na) * 1000003ULL + static_cast<std::uint64_t>(nu))
                                   .child(StreamTag::measurement, static_cast<std::uint64_t>(nm + 2))
                                   .key();
                    acc += std::abs(run_global_protocol(state, opt).report.total_purity - 1.0);
                }
                rows.push_back({na, nu, nm, acc / s.trials, 0.0});
            }
    }
    // fit C2 on the exact rows, then fill the prediction column
    double c2 = 0;
    int n_exact = 0;
    for (const auto& r : rows)
        if (r.nm < 0) {
            c2 += r.empirical * std::sqrt(static_cast<double>(r.na) * r.nu);
            ++n_exact;
        }
    c2 = n_exact ? c2 / n_exact : 1.0;
    for (auto& r : rows)
        r.predicted = predict_error(ErrorModel{c2, 0.75}, r.na, EstimationBudget{r.nu, r.nm});
    return rows;
}

// ---------------------------------------------------------------------------
// MBL vs Anderson engine (Fig. 1(c), reduced size)
// ---------------------------------------------------------------------------

struct MblSettings {
    int sites = 8;
    int bosons = 4;
    double hopping = 1.0;
    double interaction = 1.0;        // U during the static evolution
    double disorder_width = 10.0;    // static offsets uniform in [-w, w] (units J)
    int realizations = 20;
    std::vector<double> times{1, 3, 10, 30, 100};
    double quench_interaction = 1.0; // U during the random quenches
    QuenchSchedule schedule;         // defaults set in run_mbl_curve
    EstimationBudget budget{100, 100};
    std::uint64_t seed = 1;
    int threads = 1;
    int max_oracle_dim = 13000;
    int max_unitary_dim = 3000;
};

struct MblResult {
    std::vector<double> times;
    std::vector<std::vector<double>> exact_s2;  // [realization][time]
    std::vector<std::vector<double>> est_s2;    // [realization][time]

    double exact_mean(std::size_t t) const {
        double a = 0;
        for (const auto& r : exact_s2) a += r[t];
        return a / static_cast<double>(exact_s2.size());
    }
    double est_mean(std::size_t t) const {
        double a = 0;
        for (const auto& r : est_s2) a += r[t];
        return a / static_cast<double>(est_s2.size());
    }
    double est_se(std::size_t t) const {
        const double m = est_mean(t);
        double ss = 0;
        for (const auto& r : est_s2) ss += (r[t] - m) * (r[t] - m);
        const auto n = static_cast<double>(est_s2.size());
        return std::sqrt(ss / (n * (n - 1)));
    }
    /// Standard error of the mean difference (estimate - exact) across
    /// disorder realizations.
    double diff_se(std::size_t t) const {
        double m = 0;
        for (std::size_t r = 0; r < est_s2.size(); ++r) m += est_s2[r][t] - exact_s2[r][t];
        m /= static_cast<double>(est_s2.size());
        double ss = 0;
        for (std::size_t r = 0; r < est_s2.size(); ++r) {
            const double d = est_s2[r][t] - exact_s2[r][t] - m;
            ss += d * d;
        }
        const auto n = static_cast<double>(est_s2.size());
        return std::sqrt(ss / (n * (n - 1)));
    }
};

/// Half-chain Renyi entropy growth in a disordered Bose-Hubbard chain:
/// exact curves from full dense evolution, estimated curves from the
/// randomized-measurement protocol applied to the reduced state.
inline MblResult run_mbl_curve(const MblSettings& s) {
    MblResult res;
    res.times = s.times;
    const Lattice lat = Lattice::chain(s.sites);
    const auto basis = build_sector(Species::boson, lat, SectorConstraint::boson_n(s.bosons));
    if (basis.dim() > s.max_oracle_dim)
        throw std::invalid_argument("run_mbl_curve: sector dimension " + std::to_string(basis.dim()) +
                                    " too large for dense evolution (cap " +
                                    std::to_string(s.max_oracle_dim) + ")");
    std::vector<int> half;
    for (int i = 0; i < s.sites / 2; ++i) half.push_back(i);
    const auto map = subsystem_map(basis, half);
    const VectorXcd psi0 = basis_vector(basis, density_wave_config(lat, s.bosons));

    QuenchSchedule sched = s.schedule;
    if (sched.eta < 1) {
        sched.eta = 20;
        sched.jt = 1.0;
        sched.delta = 1.0;
    }
    const ModelParams quench_params{ModelKind::bose_hubbard, s.hopping, s.quench_interaction};

    res.exact_s2.assign(static_cast<std::size_t>(s.realizations),
                        std::vector<double>(s.times.size(), 0.0));
    res.est_s2 = res.exact_s2;

    for (int r = 0; r < s.realizations; ++r) {
        RandomStream rs = RandomStream(s.seed).child(StreamTag::trial, static_cast<std::uint64_t>(r));
        ModelParams model{ModelKind::bose_hubbard, s.hopping, s.interaction};
        DisorderPattern pat;
        pat.offsets.resize(static_cast<std::size_t>(s.sites));
        RandomStream ds = rs.child(StreamTag::quench_pattern);
        for (auto& x : pat.offsets) x = ds.uniform(-s.disorder_width, s.disorder_width);
        model.disorder = pat;
        const Spectrum spec = Spectrum::of(build_hamiltonian(model, basis));
        for (std::size_t ti = 0; ti < s.times.size(); ++ti) {
            const VectorXcd psi_t = spec.evolve(psi0, s.times[ti] / s.hopping);
            const MatrixXcd rho = oracle_partial_trace(map, psi_t);
            res.exact_s2[static_cast<std::size_t>(r)][ti] = -std::log(purity_of(rho));
            const BlockState blocks = split_into_blocks(basis, half, map, rho);
            for (const auto& b : blocks.blocks)
                if (b.dim() > s.max_unitary_dim)
                    throw std::invalid_argument("run_mbl_curve: partition sector too large");
            GlobalProtocolOptions opt;
            opt.budget = s.budget;
            opt.ensemble = EnsembleKind::quench;
            opt.quench_params = quench_params;
            opt.schedule = sched;
            opt.threads = s.threads;
            opt.seed = rs.child(StreamTag::measurement, ti).key();
            const auto rep = run_global_protocol(blocks, opt).report;
            res.est_s2[static_cast<std::size_t>(r)][ti] =
                rep.renyi2.defined ? rep.renyi2.value : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Area-law engine (Fig. 1(b), exactly diagonalizable size)
// ---------------------------------------------------------------------------

struct AreaLawSettings {
    Lattice lattice = Lattice::rect(4, 4);
    std::vector<std::pair<int, int>> partitions{{1, 2}, {2, 2}, {2, 3}, {2, 4}, {3, 3}};
    std::vector<int> eta_grid{2, 8, 20, 40};
    QuenchSchedule schedule;  // jt = 1, delta = 1 defaults applied in run
    EstimationBudget budget{100, 100};
    std::uint64_t seed = 1;
    int threads = 1;
    int max_unitary_dim = 3000;
    int max_oracle_dim = 13000;
};

struct AreaLawRow {
    int lx = 0, ly = 0, boundary = 0, eta = 0;
    double est_s2 = 0, std_error = 0, exact_s2 = 0;
};

inline std::vector<AreaLawRow> run_area_law_curve(const AreaLawSettings& s) {
    if (s.eta_grid.empty() || !std::is_sorted(s.eta_grid.begin(), s.eta_grid.end()))
        throw std::invalid_argument("run_area_law_curve: eta grid must be ascending");
    const int sites = s.lattice.sites();
    const int gs_sz = sites % 2;
    const auto basis = build_sector(Species::spin_half, s.lattice, SectorConstraint::spin_sz(gs_sz));
    if (basis.dim() > s.max_oracle_dim)
        throw std::invalid_argument("run_area_law_curve: ground-state sector exceeds the oracle cap");
    const ModelParams model{ModelKind::heisenberg, 1.0};
    const GroundState gs = ground_state(model, basis);
    const VectorXcd psi = gs.vec.cast<cxd>();

    QuenchSchedule sched = s.schedule;
    if (sched.eta < 1) {
        sched.jt = 1.0;
        sched.delta = 1.0;
    }
    sched.eta = s.eta_grid.back();

    std::vector<AreaLawRow> rows;
    const int ng = static_cast<int>(s.eta_grid.size());
    const int nu = s.budget.n_unitaries;
    for (auto [plx, ply] : s.partitions) {
        const auto subset = centered_rect_subset(s.lattice, plx, ply);
        const auto map = subsystem_map(basis, subset);
        const MatrixXcd rho = oracle_partial_trace(map, psi);
        const double exact_s2 = -std::log(purity_of(rho));
        const BlockState blocks = split_into_blocks(basis, subset, map, rho);
        const int nb = static_cast<int>(blocks.blocks.size());
        for (const auto& b : blocks.blocks)
            if (b.dim() > s.max_unitary_dim)
                throw std::invalid_argument("run_area_law_curve: partition sector " +
                                            b.label.str() + " exceeds the unitary cap");
        std::vector<detail::BlockSpectral> spec;
        for (const auto& b : blocks.blocks) spec.push_back(detail::spectral_of(b));

        // per eta grid point: per-unitary (trace, moment) rows per sector
        std::vector<std::vector<std::vector<double>>> wall(
            static_cast<std::size_t>(ng),
            std::vector<std::vector<double>>(static_cast<std::size_t>(nu),
                                             std::vector<double>(static_cast<std::size_t>(nb))));
        auto mall = wall;
        RandomStream run = RandomStream(s.seed).child(StreamTag::trial,
                                                      static_cast<std::uint64_t>(plx * 100 + ply));
        parallel_for(nu, s.threads, [&](int u) {
            RandomStream ustream = run.child(StreamTag::cue, static_cast<std::uint64_t>(u));
            std::vector<std::vector<VectorXd>> probs(static_cast<std::size_t>(ng));
            for (int k = 0; k < nb; ++k) {
                MatrixXcd m = spec[static_cast<std::size_t>(k)].vecs;
                int g = 0;
                for_each_quench(model, blocks.blocks[static_cast<std::size_t>(k)].basis, sched,
                                ustream, [&](const Spectrum& sp, double t, int j) {
                                    sp.evolve_columns(m, t);
                                    if (g < ng && j == s.eta_grid[static_cast<std::size_t>(g)]) {
                                        probs[static_cast<std::size_t>(g)].push_back(
                                            m.cwiseAbs2() * spec[static_cast<std::size_t>(k)].weights);
                                        ++g;
                                    }
                                });
            }
            for (int g = 0; g < ng; ++g) {
                const auto& pg = probs[static_cast<std::size_t>(g)];
                auto& wrow = wall[static_cast<std::size_t>(g)][static_cast<std::size_t>(u)];
                auto& mrow = mall[static_cast<std::size_t>(g)][static_cast<std::size_t>(u)];
                if (s.budget.exact()) {
                    for (int k = 0; k < nb; ++k) {
                        wrow[static_cast<std::size_t>(k)] = pg[static_cast<std::size_t>(k)].sum();
                        mrow[static_cast<std::size_t>(k)] = pg[static_cast<std::size_t>(k)].squaredNorm();
                    }
                } else {
                    Eigen::Index total = 0;
                    for (const auto& p : pg) total += p.size();
                    VectorXd global(total);
                    Eigen::Index off = 0;
                    for (const auto& p : pg) {
                        global.segment(off, p.size()) = p;
                        off += p.size();
                    }
                    RandomStream ms = ustream.child(StreamTag::measurement, static_cast<std::uint64_t>(g));
                    const CountMap counts = sample_counts(global, s.budget.n_measurements, ms);
                    off = 0;
                    std::size_t ci = 0;
                    for (int k = 0; k < nb; ++k) {
                        const Eigen::Index dk = pg[static_cast<std::size_t>(k)].size();
                        CountMap local;
                        while (ci < counts.size() && counts[ci].first < off + dk) {
                            local.emplace_back(counts[ci].first - static_cast<int>(off), counts[ci].second);
                            ++ci;
                        }
                        wrow[static_cast<std::size_t>(k)] =
                            static_cast<double>(total_counts(local)) / s.budget.n_measurements;
                        mrow[static_cast<std::size_t>(k)] =
                            moment2_from_counts(local, s.budget.n_measurements);
                        off += dk;
                    }
                }
            }
        });
        for (int g = 0; g < ng; ++g) {
            const PurityReport rep = aggregate_global(blocks, wall[static_cast<std::size_t>(g)],
                                                      mall[static_cast<std::size_t>(g)], s.budget);
            AreaLawRow row;
            row.lx = plx;
            row.ly = ply;
            row.boundary = 2 * (plx + ply - 2);
            row.eta = s.eta_grid[static_cast<std::size_t>(g)];
            row.est_s2 = rep.renyi2.defined ? rep.renyi2.value : std::numeric_limits<double>::quiet_NaN();
            row.std_error = rep.renyi2_std_error;
            row.exact_s2 = exact_s2;
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace renyiprobe
