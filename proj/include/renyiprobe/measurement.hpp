#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "renyiprobe/basis.hpp"
#include "renyiprobe/block_state.hpp"
#include "renyiprobe/rng.hpp"

namespace renyiprobe {

/// Sparse outcome counts, sorted by outcome ordinal.
using CountMap = std::vector<std::pair<int, int>>;

/// Measurement outcomes of one random unitary: per sector either the exact
/// probability vector or finite-sample counts.
struct MeasurementRecord {
    struct SectorPayload {
        SectorLabel label;
        VectorXd probs;   // exact mode (empty otherwise)
        CountMap counts;  // count mode
    };
    int unitary_index = 0;
    bool exact = false;
    std::vector<SectorPayload> sectors;
};

/// P(s) = diag(U rho U^dagger) for one sector block. Probabilities sum to the
/// block trace (blocks of a normalized state are subnormalized).
inline VectorXd outcome_probabilities(const MatrixXcd& u, const StateBlock& block) {
    if (u.rows() != block.dim() || u.cols() != block.dim())
        throw std::invalid_argument("outcome_probabilities: unitary/state dimension mismatch");
    if (block.pure) return ((u * (*block.pure)).cwiseAbs2()).eval();
    return (u * block.rho * u.adjoint()).diagonal().real().cwiseMax(0.0);
}

/// Multinomial draw of n_m outcomes from a probability vector (normalized to
/// the measured set). Inverse-CDF with binary search; deterministic given the
/// stream.
inline CountMap sample_counts(const VectorXd& probs, int n_m, RandomStream& rs) {
    if (n_m < 1) throw std::invalid_argument("sample_counts: n_m must be >= 1");
    const double total = probs.sum();
    if (total <= 0) throw std::invalid_argument("sample_counts: probabilities sum to zero");
    std::vector<double> cdf(static_cast<std::size_t>(probs.size()));
    double acc = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        acc += std::max(probs[i], 0.0);
        cdf[static_cast<std::size_t>(i)] = acc;
    }
    std::vector<int> dense(static_cast<std::size_t>(probs.size()), 0);
    for (int k = 0; k < n_m; ++k) {
        const double x = rs.uniform() * acc;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), x);
        dense[static_cast<std::size_t>(it - cdf.begin())]++;
    }
    CountMap out;
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i] > 0) out.emplace_back(static_cast<int>(i), dense[i]);
    return out;
}

// ---- unbiased moment estimators ---------------------------------------

/// Exact mode: sum_s P(s)^n within the payload.
inline double moment_exact(const VectorXd& probs, int n) {
    double m = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) m += std::pow(probs[i], n);
    return m;
}

/// Count mode: unbiased falling-factorial U-statistic
///   sum_s c_s (c_s-1) ... (c_s-n+1) / (N_M (N_M-1) ... (N_M-n+1)).
/// Its expectation over multinomial sampling is exactly sum_s P(s)^n.
inline double moment_from_counts(const CountMap& counts, int n_m, int n) {
    if (n_m < n) throw std::invalid_argument("moment_from_counts: need N_M >= n");
    double num = 0;
    for (auto [s, c] : counts) {
        (void)s;
        double f = 1;
        for (int k = 0; k < n; ++k) f *= static_cast<double>(c - k);
        if (c >= n) num += f;
    }
    double den = 1;
    for (int k = 0; k < n; ++k) den *= static_cast<double>(n_m - k);
    return num / den;
}

inline double moment2_from_counts(const CountMap& counts, int n_m) {
    return moment_from_counts(counts, n_m, 2);
}

inline int total_counts(const CountMap& counts) {
    int t = 0;
    for (auto [s, c] : counts) {
        (void)s;
        t += c;
    }
    return t;
}

/// n-th moment of one record sector: dispatches on the payload mode.
inline double momentn_estimator(const MeasurementRecord& rec, std::size_t sector, int n,
                                int n_m = 0) {
    const auto& pl = rec.sectors.at(sector);
    if (rec.exact) return moment_exact(pl.probs, n);
    return moment_from_counts(pl.counts, n_m, n);
}

/// Per-sector trace estimates: the summed exact probabilities, or the
/// fraction of all outcomes landing in the sector. `n_m` is the total number
/// of measurements of the record (across sectors).
inline double sector_trace_estimate(const MeasurementRecord& rec, std::size_t sector, int n_m = 0) {
    const auto& pl = rec.sectors.at(sector);
    if (rec.exact) return pl.probs.sum();
    return static_cast<double>(total_counts(pl.counts)) / n_m;
}

// ---- line-oriented serialization ---------------------------------------
//
// Count mode:  unitary_index, sector_label, outcome_ordinal, count
// Exact mode:  unitary_index, sector_label, outcome_ordinal, probability
// A header line "# mode=counts|exact" declares the payload type.

inline void write_records(std::ostream& os, const std::vector<MeasurementRecord>& recs) {
    if (recs.empty()) {
        os << "# mode=counts\n";
        return;
    }
    os << "# mode=" << (recs.front().exact ? "exact" : "counts") << "\n";
    for (const auto& r : recs)
        for (const auto& pl : r.sectors) {
            if (r.exact) {
                for (Eigen::Index i = 0; i < pl.probs.size(); ++i) {
                    std::ostringstream v;
                    v.precision(17);
                    v << pl.probs[i];
                    os << r.unitary_index << ", " << pl.label.str() << ", " << i << ", " << v.str()
                       << "\n";
                }
            } else {
                for (auto [s, c] : pl.counts)
                    os << r.unitary_index << ", " << pl.label.str() << ", " << s << ", " << c << "\n";
            }
        }
}

inline std::vector<MeasurementRecord> read_records(std::istream& is) {
    std::string line;
    bool exact = false;
    if (std::getline(is, line)) {
        if (line.rfind("# mode=", 0) != 0)
            throw std::invalid_argument("read_records: missing mode header");
        exact = line.substr(7) == "exact";
    }
    std::vector<MeasurementRecord> recs;
    auto parse_label = [](const std::string& s) {
        const auto colon = s.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("read_records: bad sector label");
        SectorLabel lab;
        lab.n = std::stoi(s.substr(0, colon));
        lab.sz = std::stoi(s.substr(colon + 1));
        return lab;
    };
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<std::string> parts;
        while (std::getline(ls, tok, ',')) {
            const auto b = tok.find_first_not_of(" \t");
            const auto e = tok.find_last_not_of(" \t");
            parts.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
        }
        if (parts.size() != 4) throw std::invalid_argument("read_records: malformed line: " + line);
        const int u = std::stoi(parts[0]);
        const SectorLabel lab = parse_label(parts[1]);
        const int s = std::stoi(parts[2]);
        if (recs.empty() || recs.back().unitary_index != u) {
            recs.push_back(MeasurementRecord{u, exact, {}});
        }
        auto& sectors = recs.back().sectors;
        if (sectors.empty() || !(sectors.back().label == lab)) {
            sectors.push_back({lab, VectorXd(), {}});
        }
        auto& pl = sectors.back();
        if (exact) {
            if (pl.probs.size() <= s) {
                VectorXd grown = VectorXd::Zero(s + 1);
                grown.head(pl.probs.size()) = pl.probs;
                pl.probs = grown;
            }
            pl.probs[s] = std::stod(parts[3]);
        } else {
            pl.counts.emplace_back(s, std::stoi(parts[3]));
        }
    }
    return recs;
}

} // namespace renyiprobe
