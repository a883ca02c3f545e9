#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "renyiprobe/lattice.hpp"

namespace renyiprobe {

enum class Species { spin_half, boson, fermion_spinful };

inline std::string to_string(Species s) {
    switch (s) {
        case Species::spin_half: return "spin-half";
        case Species::boson: return "boson";
        case Species::fermion_spinful: return "fermion-spinful";
    }
    return "?";
}

/// Site occupations. Spin-1/2: one entry per site in {0,1} = down/up.
/// Bosons: one entry per site, n >= 0. Spinful fermions: two entries per
/// site in site-then-spin order (n_up, n_down), each in {0,1}.
using Config = std::vector<int>;

/// Conserved quantum numbers of a configuration. Meaning depends on species:
/// spin-half uses sz only (n_up - n_down), bosons n only, fermions both.
struct SectorLabel {
    int n = 0;
    int sz = 0;

    bool operator==(const SectorLabel&) const = default;
    auto operator<=>(const SectorLabel&) const = default;

    std::string str() const { return std::to_string(n) + ":" + std::to_string(sz); }
};

inline SectorLabel sector_of(Species species, const Config& config) {
    SectorLabel lab;
    switch (species) {
        case Species::spin_half: {
            int up = 0;
            for (int s : config) up += s;
            lab.sz = 2 * up - static_cast<int>(config.size());
            break;
        }
        case Species::boson: {
            for (int n : config) lab.n += n;
            break;
        }
        case Species::fermion_spinful: {
            for (std::size_t k = 0; k < config.size(); k += 2) {
                lab.n += config[k] + config[k + 1];
                lab.sz += config[k] - config[k + 1];
            }
            break;
        }
    }
    return lab;
}

/// Sector selection for build_sector. Unset fields are unconstrained.
/// boson_cap is the per-site occupation cap; a negative value means
/// "uncapped", i.e. the cap defaults to the total particle number n
/// (which requires n to be set).
struct SectorConstraint {
    std::optional<int> n;
    std::optional<int> sz;
    int boson_cap = -1;

    static SectorConstraint none() { return {}; }
    static SectorConstraint spin_sz(int sz) {
        SectorConstraint c;
        c.sz = sz;
        return c;
    }
    static SectorConstraint boson_n(int n, int cap = -1) {
        SectorConstraint c;
        c.n = n;
        c.boson_cap = cap;
        return c;
    }
    static SectorConstraint fermion(int n, int sz) {
        SectorConstraint c;
        c.n = n;
        c.sz = sz;
        return c;
    }
    static SectorConstraint from_label(Species sp, const SectorLabel& lab, int cap = -1) {
        SectorConstraint c;
        switch (sp) {
            case Species::spin_half: c.sz = lab.sz; break;
            case Species::boson:
                c.n = lab.n;
                c.boson_cap = cap;
                break;
            case Species::fermion_spinful:
                c.n = lab.n;
                c.sz = lab.sz;
                break;
        }
        return c;
    }

    bool matches(Species sp, const SectorLabel& lab) const {
        if (n && lab.n != *n) return false;
        if (sz && lab.sz != *sz) return false;
        (void)sp;
        return true;
    }
};

/// Enumerated basis of one symmetry sector, lexicographically sorted on the
/// occupation vector. The ordering is part of the contract: ordinals are
/// stable across runs and platforms, which makes every seeded Monte Carlo
/// run reproducible.
class SectorBasis {
public:
    SectorBasis() = default;
    SectorBasis(Species species, Lattice lattice, SectorConstraint constraint,
                std::vector<Config> states)
        : species_(species),
          lattice_(std::move(lattice)),
          constraint_(constraint),
          states_(std::move(states)) {}

    Species species() const { return species_; }
    const Lattice& lattice() const { return lattice_; }
    const SectorConstraint& constraint() const { return constraint_; }
    const std::vector<Config>& states() const { return states_; }
    const Config& state(int i) const { return states_[static_cast<std::size_t>(i)]; }
    int dim() const { return static_cast<int>(states_.size()); }
    bool empty() const { return states_.empty(); }

    /// Entries per configuration vector (2 per site for spinful fermions).
    int config_len() const {
        return species_ == Species::fermion_spinful ? 2 * lattice_.sites() : lattice_.sites();
    }

    /// Ordinal of a configuration, or -1 if it is not in the sector.
    int index_of(const Config& c) const {
        auto it = std::lower_bound(states_.begin(), states_.end(), c);
        if (it == states_.end() || *it != c) return -1;
        return static_cast<int>(it - states_.begin());
    }

    SectorLabel label_of(int i) const { return sector_of(species_, state(i)); }

private:
    Species species_ = Species::spin_half;
    Lattice lattice_;
    SectorConstraint constraint_;
    std::vector<Config> states_;
};

namespace detail {

inline void enumerate_spin(const SectorConstraint& c, int sites, std::vector<Config>& out) {
    // sz = 2*n_up - sites
    Config cur(static_cast<std::size_t>(sites), 0);
    auto rec = [&](auto&& self, int site, int ups) -> void {
        if (site == sites) {
            if (!c.sz || 2 * ups - sites == *c.sz) out.push_back(cur);
            return;
        }
        const int remaining = sites - site;
        if (c.sz) {
            const int need = (*c.sz + sites) / 2;  // target n_up
            if ((*c.sz + sites) % 2 != 0) return;  // impossible parity
            if (ups > need || ups + remaining < need) return;
        }
        for (int s = 0; s <= 1; ++s) {
            cur[static_cast<std::size_t>(site)] = s;
            self(self, site + 1, ups + s);
        }
        cur[static_cast<std::size_t>(site)] = 0;
    };
    rec(rec, 0, 0);
}

inline void enumerate_boson(const SectorConstraint& c, int sites, std::vector<Config>& out) {
    if (!c.n && c.boson_cap < 0)
        throw std::invalid_argument("build_sector: bosonic basis needs a particle number or a site cap");
    const int cap = c.boson_cap >= 0 ? c.boson_cap : *c.n;
    Config cur(static_cast<std::size_t>(sites), 0);
    auto rec = [&](auto&& self, int site, int total) -> void {
        if (site == sites) {
            if (!c.n || total == *c.n) out.push_back(cur);
            return;
        }
        const int remaining = sites - site;
        for (int n = 0; n <= cap; ++n) {
            const int t = total + n;
            if (c.n && (t > *c.n || t + (remaining - 1) * cap < *c.n)) continue;
            cur[static_cast<std::size_t>(site)] = n;
            self(self, site + 1, t);
        }
        cur[static_cast<std::size_t>(site)] = 0;
    };
    rec(rec, 0, 0);
}

inline void enumerate_fermion(const SectorConstraint& c, int sites, std::vector<Config>& out) {
    Config cur(static_cast<std::size_t>(2 * sites), 0);
    auto rec = [&](auto&& self, int slot, int n, int sz) -> void {
        if (slot == 2 * sites) {
            if ((!c.n || n == *c.n) && (!c.sz || sz == *c.sz)) out.push_back(cur);
            return;
        }
        const int slots_left = 2 * sites - slot;
        if (c.n && (n > *c.n || n + slots_left < *c.n)) return;
        if (c.sz && std::abs(*c.sz - sz) > slots_left) return;
        const bool is_up = (slot % 2 == 0);
        for (int occ = 0; occ <= 1; ++occ) {
            cur[static_cast<std::size_t>(slot)] = occ;
            self(self, slot + 1, n + occ, sz + (is_up ? occ : -occ));
        }
        cur[static_cast<std::size_t>(slot)] = 0;
    };
    rec(rec, 0, 0, 0);
}

} // namespace detail

/// Enumerate the canonical basis of one symmetry sector. An unsatisfiable
/// constraint (e.g. sz > L) yields an empty basis, not an error.
inline SectorBasis build_sector(Species species, const Lattice& lattice,
                                const SectorConstraint& constraint) {
    if (lattice.sites() < 1) throw std::invalid_argument("build_sector: empty lattice");
    if (species == Species::spin_half && constraint.n)
        throw std::invalid_argument("build_sector: spin-half sectors are labeled by sz only");
    if (species == Species::boson && constraint.sz)
        throw std::invalid_argument("build_sector: bosonic sectors are labeled by n only");
    std::vector<Config> states;
    switch (species) {
        case Species::spin_half: detail::enumerate_spin(constraint, lattice.sites(), states); break;
        case Species::boson: detail::enumerate_boson(constraint, lattice.sites(), states); break;
        case Species::fermion_spinful: detail::enumerate_fermion(constraint, lattice.sites(), states); break;
    }
    // Recursion emits in lexicographic order already; keep the sort as a
    // cheap guarantee of the documented invariant.
    std::sort(states.begin(), states.end());
    return SectorBasis(species, lattice, constraint, std::move(states));
}

/// Local Hilbert-space dimension per configuration entry.
inline int local_dim(const SectorBasis& b) {
    switch (b.species()) {
        case Species::spin_half:
        case Species::fermion_spinful: return 2;
        case Species::boson: {
            const auto& c = b.constraint();
            const int cap = c.boson_cap >= 0 ? c.boson_cap : (c.n ? *c.n : 0);
            return cap + 1;
        }
    }
    return 2;
}

} // namespace renyiprobe
