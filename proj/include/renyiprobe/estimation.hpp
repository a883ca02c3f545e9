#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "renyiprobe/basis.hpp"

namespace renyiprobe {

/// Measurement budget: number of unitaries and measurements per unitary.
/// n_measurements < 0 encodes the exact (N_M = infinity) mode.
struct EstimationBudget {
    int n_unitaries = 1;
    int n_measurements = -1;

    bool exact() const { return n_measurements < 0; }

    void validate() const {
        if (n_unitaries < 1) throw std::invalid_argument("EstimationBudget: N_U must be >= 1");
        if (!exact() && n_measurements < 2)
            throw std::invalid_argument("EstimationBudget: finite N_M must be >= 2");
    }

    std::string str() const {
        return "N_U=" + std::to_string(n_unitaries) +
               (exact() ? std::string(", N_M=exact") : ", N_M=" + std::to_string(n_measurements));
    }
};

/// Invert the global 2-design identity for one sector:
///   <sum_{s in sec} P(s)^2> = ((Tr rho)^2 + Tr rho^2) / (N + 1)
/// so  Tr rho^2 = (N + 1) <sum_s P(s)^2> - (Tr rho)^2.
inline double invert_global(double trace_estimate, double summed_moment2, int sector_dim) {
    if (sector_dim < 1) throw std::invalid_argument("invert_global: sector_dim must be >= 1");
    return (sector_dim + 1) * summed_moment2 - trace_estimate * trace_estimate;
}

/// Purities of every subsystem A' of a local-unitary measurement, indexed by
/// site bitmask; entry 0 is the empty subsystem, fixed to 1 by convention.
struct SubsetPurityTable {
    int n_sites = 0;
    std::vector<double> purity;      // 2^n entries
    std::vector<double> std_error;   // optional, same indexing (empty if unset)

    static std::string mask_label(unsigned mask, int n_sites) {
        std::string s;
        for (int i = 0; i < n_sites; ++i) s += ((mask >> i) & 1u) ? '1' : '0';
        return s;
    }
};

/// Recursive inversion of the local-unitary moment identity. Input: for
/// every subset A' (bitmask), M(A') = (d+1)^{|A'|} <sum_{s_A'} P_A'(s_A')^2>,
/// with M(empty) = 1. Output: purity(A') = M(A') - sum_{A'' proper subset} purity(A'').
inline SubsetPurityTable invert_local(const std::vector<double>& moment_by_mask, int n_sites) {
    const std::size_t n = std::size_t{1} << n_sites;
    if (moment_by_mask.size() != n)
        throw std::invalid_argument("invert_local: need one moment per subset");
    SubsetPurityTable t;
    t.n_sites = n_sites;
    t.purity.assign(n, 0.0);
    t.purity[0] = 1.0;
    // iterate masks in increasing popcount so proper subsets are done first
    std::vector<unsigned> order(n);
    for (unsigned m = 0; m < n; ++m) order[m] = m;
    std::stable_sort(order.begin(), order.end(),
                     [](unsigned a, unsigned b) { return __builtin_popcount(a) < __builtin_popcount(b); });
    for (unsigned m : order) {
        if (m == 0) continue;
        double sub_sum = 0;
        for (unsigned s = (m - 1) & m;; s = (s - 1) & m) {
            sub_sum += t.purity[s];
            if (s == 0) break;
        }
        t.purity[m] = moment_by_mask[m] - sub_sum;
    }
    return t;
}

/// Second Renyi entropy S^(2) = -log p2 (natural log). Nonpositive purity
/// estimates yield an undefined result rather than NaN surprises downstream.
struct Renyi2 {
    double value = std::numeric_limits<double>::quiet_NaN();
    bool defined = false;
};

inline Renyi2 renyi_entropy(double purity) {
    if (purity <= 0) return {};
    return {-std::log(purity), true};
}

/// Statistical error model of the global protocol:
///   |p2_e - p2| ~ (C2 + N_A / N_M) / sqrt(N_A N_U),
/// with the N_M term dropped in exact mode. The local protocol analogue
/// scales as N_A^kappa / N_M with kappa ~ 0.75.
struct ErrorModel {
    double c2 = 1.0;
    double local_exponent = 0.75;
};

inline double predict_error(const ErrorModel& m, int sector_dim, const EstimationBudget& budget) {
    budget.validate();
    if (sector_dim < 1) throw std::invalid_argument("predict_error: sector_dim must be >= 1");
    const double nm_term =
        budget.exact() ? 0.0 : static_cast<double>(sector_dim) / budget.n_measurements;
    return (m.c2 + nm_term) / std::sqrt(static_cast<double>(sector_dim) * budget.n_unitaries);
}

/// Result of a global-protocol estimation run.
struct PurityReport {
    struct SectorEntry {
        int dim = 0;
        double trace_estimate = 0;
        double purity_estimate = 0;
        std::optional<double> exact_purity;
    };
    std::map<SectorLabel, SectorEntry> per_sector;
    double total_purity = 0;
    double std_error = 0;           // jackknife over unitaries
    Renyi2 renyi2;
    double renyi2_std_error = 0;
    std::optional<double> exact_total_purity;
    bool out_of_range = false;      // estimate escaped (0, 1]; reported unclamped
    EstimationBudget budget;
    std::string metadata;           // schedule / ensemble / seed echo

    void finalize() {
        out_of_range = !(total_purity > 0.0 && total_purity <= 1.0 + 1e-12);
        renyi2 = renyi_entropy(total_purity);
    }
};

/// Pairwise (fixed-tree-order) summation; reductions use this so results do
/// not depend on the number of worker threads.
inline double pairwise_sum(const std::vector<double>& xs, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 8) {
        double s = 0;
        for (std::size_t i = lo; i < hi; ++i) s += xs[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(xs, lo, mid) + pairwise_sum(xs, mid, hi);
}

inline double pairwise_mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("pairwise_mean: empty");
    return pairwise_sum(xs, 0, xs.size()) / static_cast<double>(xs.size());
}

/// Leave-one-out jackknife standard error of f(mean of columns), where
/// `samples[u]` is the per-unitary vector of statistics and f maps the
/// column means to the estimate.
template <typename F>
double jackknife_std_error(const std::vector<std::vector<double>>& samples, F&& f) {
    const std::size_t n = samples.size();
    if (n < 2) return 0.0;
    const std::size_t k = samples.front().size();
    std::vector<double> sums(k, 0.0);
    for (const auto& row : samples)
        for (std::size_t j = 0; j < k; ++j) sums[j] += row[j];
    std::vector<double> loo(k);
    std::vector<double> est(n);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 0; j < k; ++j)
            loo[j] = (sums[j] - samples[u][j]) / static_cast<double>(n - 1);
        est[u] = f(loo);
    }
    const double mean = pairwise_mean(est);
    double ss = 0;
    for (double e : est) ss += (e - mean) * (e - mean);
    return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

} // namespace renyiprobe
