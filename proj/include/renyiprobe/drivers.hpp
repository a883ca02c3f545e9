#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "renyiprobe/experiments.hpp"

namespace renyiprobe {

namespace detail {

inline ModelKind model_kind_from(const std::string& s) {
    if (s == "heisenberg") return ModelKind::heisenberg;
    if (s == "bose-hubbard") return ModelKind::bose_hubbard;
    if (s == "fermi-hubbard") return ModelKind::fermi_hubbard;
    throw std::invalid_argument("unknown model kind: " + s);
}

inline QuenchSchedule schedule_from(const RunConfig& cfg) {
    QuenchSchedule s;
    s.eta = static_cast<int>(cfg.get_int("schedule.eta", 20));
    s.jt = cfg.get_double("schedule.jt", 1.0);
    s.delta = cfg.get_double("schedule.delta", 1.0);
    const std::string mode = cfg.get_str("schedule.mode", "fresh");
    if (mode == "fresh")
        s.mode = QuenchSchedule::PatternMode::fresh_pattern;
    else if (mode == "single-pattern")
        s.mode = QuenchSchedule::PatternMode::single_pattern;
    else
        throw std::invalid_argument("schedule.mode must be fresh or single-pattern");
    const std::string tm = cfg.get_str("schedule.time_mode", "fixed");
    if (tm == "fixed")
        s.time_mode = QuenchSchedule::TimeMode::fixed;
    else if (tm == "uniform")
        s.time_mode = QuenchSchedule::TimeMode::uniform_random;
    else
        throw std::invalid_argument("schedule.time_mode must be fixed or uniform");
    s.fh_independent_spins = cfg.get_bool("schedule.fh_independent_spins", true);
    return s;
}

inline EstimationBudget budget_from(const RunConfig& cfg, int default_nu,
                                    const std::string& default_nm) {
    EstimationBudget b;
    b.n_unitaries = static_cast<int>(cfg.get_int("budget.n_unitaries", default_nu));
    b.n_measurements = cfg.get_measurements("budget.n_measurements", default_nm);
    b.validate();
    return b;
}

inline std::vector<int> subset_from(const RunConfig& cfg, const Lattice& lat) {
    if (cfg.has("partition.sites")) {
        auto v = cfg.get_int_list("partition.sites", "");
        std::sort(v.begin(), v.end());
        return v;
    }
    const int plx = static_cast<int>(cfg.get_int("partition.lx", lat.lx));
    const int ply = static_cast<int>(cfg.get_int("partition.ly", lat.ly));
    return centered_rect_subset(lat, plx, ply);
}

} // namespace detail

struct DriverResult {
    std::vector<std::pair<std::string, std::string>> outputs;  // (relative name, content)
};

// ---- individual drivers ---------------------------------------------------

inline DriverResult drive_cue_check(const RunConfig& cfg, std::uint64_t seed, int threads) {
    (void)threads;
    const auto dims = cfg.get_int_list("check.dims", "2,4,8");
    const int samples = static_cast<int>(cfg.get_int("check.samples", 100000));
    const auto rows = run_cue_check(dims, samples, seed);
    CsvTable csv({"dim", "i1_i2_i3_i4", "empirical_re", "empirical_im", "expected", "stderr_re",
                  "stderr_im", "within_5se"});
    for (const auto& r : rows)
        csv.row()
            .cell(r.dim)
            .cell(r.tuple)
            .cell(r.emp_re)
            .cell(r.emp_im)
            .cell(r.expected)
            .cell(r.se_re)
            .cell(r.se_im)
            .cell(r.within(5.0) ? std::string("yes") : std::string("no"));
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_converge(const RunConfig& cfg, std::uint64_t seed, int threads) {
    ConvergeSettings s;
    s.model.kind = detail::model_kind_from(cfg.get_str("model.kind", "heisenberg"));
    s.model.j = cfg.get_double("model.J", 1.0);
    s.model.u = cfg.get_double("model.U", 0.0);
    s.lattice = Lattice::rect(static_cast<int>(cfg.get_int("lattice.lx", 8)),
                              static_cast<int>(cfg.get_int("lattice.ly", 1)));
    s.schedule = detail::schedule_from(cfg);
    const int l = s.lattice.sites();
    s.eta_grid = cfg.get_int_list("sweep.eta_list", std::to_string(std::max(1, l / 2)) + "," +
                                                        std::to_string(l) + "," + std::to_string(2 * l) +
                                                        "," + std::to_string(3 * l) + "," +
                                                        std::to_string(5 * l));
    std::sort(s.eta_grid.begin(), s.eta_grid.end());
    s.budget = detail::budget_from(cfg, 500, "exact");
    s.repetitions = static_cast<int>(cfg.get_int("sweep.repetitions", 4));
    s.max_dim = static_cast<int>(cfg.get_int("run.max_unitary_dim", 3000));
    s.seed = seed;
    s.threads = threads;
    std::vector<TestState> states;
    for (const auto& name : cfg.get_str_list("sweep.states", "AF"))
        states.push_back(test_state_from_string(name));

    CsvTable csv({"state", "eta", "jt_tot", "mean_abs_error", "cue_reference", "exact_purity"});
    for (TestState ts : states) {
        const ConvergeCurve c = converge_curve(ts, s);
        for (std::size_t g = 0; g < c.eta_grid.size(); ++g)
            csv.row()
                .cell(to_string(ts))
                .cell(c.eta_grid[g])
                .cell(c.jt_tot[g])
                .cell(c.mean_abs_error[g])
                .cell(c.cue_reference)
                .cell(c.exact_purity);
    }
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_quench_opt(const RunConfig& cfg, std::uint64_t seed, int threads) {
    ConvergeSettings base;
    base.model.kind = detail::model_kind_from(cfg.get_str("model.kind", "heisenberg"));
    base.model.j = cfg.get_double("model.J", 1.0);
    base.lattice = Lattice::rect(static_cast<int>(cfg.get_int("lattice.lx", 8)),
                                 static_cast<int>(cfg.get_int("lattice.ly", 1)));
    base.schedule = detail::schedule_from(cfg);
    base.budget = detail::budget_from(cfg, 500, "exact");
    base.repetitions = static_cast<int>(cfg.get_int("sweep.repetitions", 4));
    base.max_dim = static_cast<int>(cfg.get_int("run.max_unitary_dim", 3000));
    base.seed = seed;
    base.threads = threads;
    const TestState ts = test_state_from_string(cfg.get_str("sweep.state", "AF"));
    const double jt_tot = cfg.get_double("sweep.jt_tot", 16.0);
    const std::string sweep = cfg.get_str("sweep.parameter", "jt");

    CsvTable csv({"parameter", "value", "eta", "jt", "delta", "mode", "time_mode",
                  "mean_abs_error", "cue_reference"});
    auto emit = [&](const std::string& pname, double value, const ConvergeSettings& s) {
        const ConvergeCurve c = converge_curve(ts, s);
        csv.row()
            .cell(pname)
            .cell(value)
            .cell(s.eta_grid.front())
            .cell(s.schedule.jt)
            .cell(s.schedule.delta)
            .cell(s.schedule.mode == QuenchSchedule::PatternMode::fresh_pattern ? std::string("fresh")
                                                                                : std::string("single-pattern"))
            .cell(s.schedule.time_mode == QuenchSchedule::TimeMode::fixed ? std::string("fixed")
                                                                          : std::string("uniform"))
            .cell(c.mean_abs_error.front())
            .cell(c.cue_reference);
    };
    if (sweep == "jt") {
        for (double jt : cfg.get_double_list("sweep.values", "0.125,0.25,0.5,1,2,4,8")) {
            ConvergeSettings s = base;
            s.schedule.jt = jt;
            s.eta_grid = {std::max(1, static_cast<int>(std::lround(jt_tot / jt)))};
            emit("jt", jt, s);
        }
    } else if (sweep == "delta") {
        for (double d : cfg.get_double_list("sweep.values", "0.1,0.3,1,3,10")) {
            ConvergeSettings s = base;
            s.schedule.delta = d;
            s.eta_grid = {std::max(1, static_cast<int>(std::lround(jt_tot / s.schedule.jt)))};
            emit("delta", d, s);
        }
    } else if (sweep == "floquet") {
        // single-pattern schedules at fixed total time: fixed vs random times
        for (const std::string& tm : {std::string("fixed"), std::string("uniform")}) {
            ConvergeSettings s = base;
            s.schedule.mode = QuenchSchedule::PatternMode::single_pattern;
            s.schedule.time_mode = tm == "fixed" ? QuenchSchedule::TimeMode::fixed
                                                 : QuenchSchedule::TimeMode::uniform_random;
            s.eta_grid = {std::max(1, static_cast<int>(std::lround(jt_tot / s.schedule.jt)))};
            emit("floquet-" + tm, 0.0, s);
        }
    } else {
        throw std::invalid_argument("sweep.parameter must be jt, delta or floquet");
    }
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_error_scaling(const RunConfig& cfg, std::uint64_t seed, int threads) {
    ErrorScalingSettings s;
    s.na_list = cfg.get_int_list("scaling.na_list", "16,64,256");
    s.nu_list = cfg.get_int_list("scaling.nu_list", "100,1000");
    std::vector<int> nms;
    for (const auto& t : cfg.get_str_list("scaling.nm_list", "100,exact"))
        nms.push_back(t == "exact" ? -1 : std::stoi(t));
    s.nm_list = nms;
    s.trials = static_cast<int>(cfg.get_int("scaling.trials", 24));
    s.seed = seed;
    s.threads = threads;
    const auto rows = run_error_scaling(s);
    CsvTable csv({"n_a", "n_u", "n_m", "empirical_error", "predicted_error"});
    for (const auto& r : rows)
        csv.row()
            .cell(r.na)
            .cell(r.nu)
            .cell(r.nm < 0 ? std::string("exact") : std::to_string(r.nm))
            .cell(r.empirical)
            .cell(r.predicted);
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_mbl(const RunConfig& cfg, std::uint64_t seed, int threads) {
    MblSettings s;
    s.sites = static_cast<int>(cfg.get_int("lattice.lx", 8));
    s.bosons = static_cast<int>(cfg.get_int("model.N", s.sites / 2));
    s.hopping = cfg.get_double("model.J", 1.0);
    s.disorder_width = cfg.get_double("model.disorder_width", 10.0);
    s.realizations = static_cast<int>(cfg.get_int("sweep.realizations", 20));
    std::vector<double> times = cfg.get_double_list("sweep.times", "1,3,10,30,100");
    s.times = times;
    s.quench_interaction = cfg.get_double("schedule.quench_U", 1.0);
    s.schedule = detail::schedule_from(cfg);
    s.budget = detail::budget_from(cfg, 100, "100");
    s.seed = seed;
    s.threads = threads;
    s.max_oracle_dim = static_cast<int>(cfg.get_int("run.max_oracle_dim", 13000));
    s.max_unitary_dim = static_cast<int>(cfg.get_int("run.max_unitary_dim", 3000));

    CsvTable csv({"u_over_j", "jt", "exact_s2", "est_s2", "std_error"});
    for (double u : cfg.get_double_list("sweep.u_list", "1,0")) {
        MblSettings su = s;
        su.interaction = u;
        const MblResult r = run_mbl_curve(su);
        for (std::size_t t = 0; t < r.times.size(); ++t)
            csv.row()
                .cell(u)
                .cell(r.times[t])
                .cell(r.exact_mean(t))
                .cell(r.est_mean(t))
                .cell(r.est_se(t));
    }
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_area_law(const RunConfig& cfg, std::uint64_t seed, int threads) {
    AreaLawSettings s;
    s.lattice = Lattice::rect(static_cast<int>(cfg.get_int("lattice.lx", 4)),
                              static_cast<int>(cfg.get_int("lattice.ly", 4)));
    s.partitions.clear();
    for (const auto& p : cfg.get_str_list("sweep.partitions", "1x2,2x2,2x3,2x4,3x3")) {
        const auto x = p.find('x');
        if (x == std::string::npos)
            throw std::invalid_argument("sweep.partitions entries look like 2x3");
        s.partitions.emplace_back(std::stoi(p.substr(0, x)), std::stoi(p.substr(x + 1)));
    }
    s.eta_grid = cfg.get_int_list("sweep.eta_list", "2,8,20,40");
    std::sort(s.eta_grid.begin(), s.eta_grid.end());
    s.schedule = detail::schedule_from(cfg);
    s.budget = detail::budget_from(cfg, 100, "100");
    s.seed = seed;
    s.threads = threads;
    s.max_unitary_dim = static_cast<int>(cfg.get_int("run.max_unitary_dim", 3000));
    s.max_oracle_dim = static_cast<int>(cfg.get_int("run.max_oracle_dim", 13000));
    const auto rows = run_area_law_curve(s);
    CsvTable csv({"lx", "ly", "boundary", "eta", "est_s2", "std_error", "exact_s2"});
    for (const auto& r : rows)
        csv.row()
            .cell(r.lx)
            .cell(r.ly)
            .cell(r.boundary)
            .cell(r.eta)
            .cell(r.est_s2)
            .cell(r.std_error)
            .cell(r.exact_s2);
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_local(const RunConfig& cfg, std::uint64_t seed, int threads) {
    const int l = static_cast<int>(cfg.get_int("state.sites", 4));
    const std::string name = cfg.get_str("state.kind", "w");
    VectorXcd psi;
    if (name == "w")
        psi = w_state(l);
    else if (name == "bell" && l == 2)
        psi = bell_state();
    else if (name == "product") {
        psi = VectorXcd::Zero(Eigen::Index{1} << l);
        psi[0] = 1.0;
    } else {
        throw std::invalid_argument("state.kind must be w, bell (sites=2) or product");
    }
    LocalProtocolOptions opt;
    opt.budget = detail::budget_from(cfg, 100, "50");
    opt.seed = seed;
    opt.threads = threads;
    const auto res = run_local_protocol(psi, l, 2, opt);
    CsvTable csv({"subset", "estimate", "std_error", "exact"});
    for (unsigned m = 0; m < (1u << l); ++m)
        csv.row()
            .cell(SubsetPurityTable::mask_label(m, l))
            .cell(res.table.purity[m])
            .cell(res.table.std_error[m])
            .cell(res.exact[m]);
    return {{{"results.csv", csv.text()}}};
}

inline DriverResult drive_estimate(const RunConfig& cfg, std::uint64_t seed, int threads) {
    ModelParams model;
    model.kind = detail::model_kind_from(cfg.get_str("model.kind", "heisenberg"));
    model.j = cfg.get_double("model.J", 1.0);
    model.u = cfg.get_double("model.U", 0.0);
    const Lattice lat = Lattice::rect(static_cast<int>(cfg.get_int("lattice.lx", 4)),
                                      static_cast<int>(cfg.get_int("lattice.ly", 1)));
    const Species sp = species_for(model.kind);

    SectorConstraint sector;
    switch (sp) {
        case Species::spin_half:
            sector = SectorConstraint::spin_sz(static_cast<int>(cfg.get_int("state.sz", lat.sites() % 2)));
            break;
        case Species::boson:
            sector = SectorConstraint::boson_n(static_cast<int>(cfg.get_int("state.n", lat.sites() / 2)),
                                               static_cast<int>(cfg.get_int("state.cap", -1)));
            break;
        case Species::fermion_spinful:
            sector = SectorConstraint::fermion(static_cast<int>(cfg.get_int("state.n", lat.sites())),
                                               static_cast<int>(cfg.get_int("state.sz", 0)));
            break;
    }
    const auto basis = build_sector(sp, lat, sector);
    const int max_oracle = static_cast<int>(cfg.get_int("run.max_oracle_dim", 13000));
    if (basis.dim() > max_oracle)
        throw std::invalid_argument("estimate: state sector exceeds the oracle cap");
    if (basis.empty()) throw std::invalid_argument("estimate: empty state sector");

    const std::string state_kind = cfg.get_str("state.kind", "ground");
    VectorXcd psi;
    if (state_kind == "ground")
        psi = ground_state(model, basis).vec.cast<cxd>();
    else if (state_kind == "af")
        psi = basis_vector(basis, af_config(lat));
    else if (state_kind == "dw")
        psi = basis_vector(basis, density_wave_config(lat, sector.n.value_or(lat.sites() / 2)));
    else if (state_kind == "random")
        psi = random_sector_state(basis, seed);
    else
        throw std::invalid_argument("state.kind must be ground, af, dw or random");

    const auto subset = detail::subset_from(cfg, lat);
    const auto map = subsystem_map(basis, subset);
    const MatrixXcd rho = oracle_partial_trace(map, psi);
    const BlockState blocks = split_into_blocks(basis, subset, map, rho);
    const int max_unitary = static_cast<int>(cfg.get_int("run.max_unitary_dim", 3000));
    for (const auto& b : blocks.blocks)
        if (b.dim() > max_unitary)
            throw std::invalid_argument("estimate: partition sector " + b.label.str() +
                                        " exceeds the unitary cap");

    GlobalProtocolOptions opt;
    opt.budget = detail::budget_from(cfg, 100, "100");
    const std::string ens = cfg.get_str("protocol.ensemble", "quench");
    if (ens == "quench") {
        opt.ensemble = EnsembleKind::quench;
        opt.quench_params = ModelParams{model.kind, model.j, cfg.get_double("schedule.quench_U", model.u)};
        opt.schedule = detail::schedule_from(cfg);
    } else if (ens == "cue") {
        opt.ensemble = EnsembleKind::cue;
    } else if (ens == "cue-full") {
        opt.ensemble = EnsembleKind::cue_full;
    } else {
        throw std::invalid_argument("protocol.ensemble must be quench, cue or cue-full");
    }
    opt.seed = seed;
    opt.threads = threads;
    opt.keep_records = cfg.get_bool("run.records", false);
    const auto res = run_global_protocol(blocks, opt);

    CsvTable csv({"label", "estimate", "std_error", "exact"});
    for (const auto& blk : blocks.blocks) {
        const auto& e = res.report.per_sector.at(blk.label);
        csv.row()
            .cell("trace " + blk.label.str())
            .cell(e.trace_estimate)
            .cell(std::string(""))
            .cell(blk.trace());
        csv.row()
            .cell("purity " + blk.label.str())
            .cell(e.purity_estimate)
            .cell(std::string(""))
            .cell(e.exact_purity.value());
    }
    csv.row()
        .cell("total_purity")
        .cell(res.report.total_purity)
        .cell(res.report.std_error)
        .cell(res.report.exact_total_purity.value());
    csv.row()
        .cell("renyi2")
        .cell(res.report.renyi2.defined ? res.report.renyi2.value
                                        : std::numeric_limits<double>::quiet_NaN())
        .cell(res.report.renyi2_std_error)
        .cell(-std::log(res.report.exact_total_purity.value()));

    DriverResult out{{{"results.csv", csv.text()}}};
    if (opt.keep_records) {
        std::ostringstream os;
        write_records(os, res.records);
        out.outputs.emplace_back("records/measurements.txt", os.str());
    }
    return out;
}

// ---- dispatcher -----------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"cue-check",     "converge", "quench-opt",
                                                "error-scaling", "estimate", "local",
                                                "mbl",           "area-law"};
    return names;
}

/// Run one experiment and write results.csv, manifest.txt (and optional
/// records/) under out_dir. Returns the manifest.
inline RunManifest run_experiment(const std::string& name, const RunConfig& cfg,
                                  const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 12345));
    const int threads = static_cast<int>(cfg.get_int("run.threads", 1));

    DriverResult result;
    if (name == "cue-check")
        result = drive_cue_check(cfg, seed, threads);
    else if (name == "converge")
        result = drive_converge(cfg, seed, threads);
    else if (name == "quench-opt")
        result = drive_quench_opt(cfg, seed, threads);
    else if (name == "error-scaling")
        result = drive_error_scaling(cfg, seed, threads);
    else if (name == "estimate")
        result = drive_estimate(cfg, seed, threads);
    else if (name == "local")
        result = drive_local(cfg, seed, threads);
    else if (name == "mbl")
        result = drive_mbl(cfg, seed, threads);
    else if (name == "area-law")
        result = drive_area_law(cfg, seed, threads);
    else
        throw std::invalid_argument("unknown experiment: " + name);
    cfg.reject_unknown_keys();

    RunManifest man;
    man.experiment = name;
    man.seed = seed;
    man.resolved_config = cfg.resolved_echo();
    std::filesystem::create_directories(out_dir);
    for (const auto& [rel, content] : result.outputs) {
        const std::filesystem::path p = out_dir / rel;
        std::filesystem::create_directories(p.parent_path());
        write_file(p, content);
        man.checksums.emplace_back(rel, fnv1a64(content));
    }
    man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_file(out_dir / "manifest.txt", man.text());
    return man;
}

} // namespace renyiprobe
