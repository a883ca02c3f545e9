#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "renyiprobe/basis.hpp"

namespace renyiprobe {

/// Bijective factorization of a parent basis into (subsystem, complement)
/// configurations. Inner and outer configurations keep the parent's
/// lexicographic order; only combinations that actually occur in the parent
/// get a parent ordinal (a sector-restricted parent does not factorize into
/// the full product of inner and outer spaces).
///
/// For spinful fermions the factorization additionally carries the fermionic
/// reordering sign: |c_parent> = sign * |c_inner> (x) |c_outer> after moving
/// all subsystem modes in front of the complement modes in Jordan-Wigner
/// order. Spin and boson species have sign +1 throughout.
class SubsystemMap {
public:
    SubsystemMap(Species species, std::vector<int> subset, std::vector<Config> inner,
                 std::vector<Config> outer, std::vector<std::pair<int, int>> factor,
                 std::vector<std::int8_t> sign)
        : species_(species),
          subset_(std::move(subset)),
          inner_(std::move(inner)),
          outer_(std::move(outer)),
          factor_(std::move(factor)),
          sign_(std::move(sign)),
          table_(inner_.size() * outer_.size(), -1) {
        for (std::size_t p = 0; p < factor_.size(); ++p) {
            auto [i, o] = factor_[p];
            table_[static_cast<std::size_t>(i) * outer_.size() + static_cast<std::size_t>(o)] =
                static_cast<int>(p);
        }
    }

    Species species() const { return species_; }
    const std::vector<int>& subset() const { return subset_; }
    int parent_dim() const { return static_cast<int>(factor_.size()); }
    int inner_dim() const { return static_cast<int>(inner_.size()); }
    int outer_dim() const { return static_cast<int>(outer_.size()); }
    const std::vector<Config>& inner_states() const { return inner_; }
    const std::vector<Config>& outer_states() const { return outer_; }

    /// (inner ordinal, outer ordinal) of a parent ordinal.
    std::pair<int, int> split(int parent) const { return factor_[static_cast<std::size_t>(parent)]; }

    /// Parent ordinal of an (inner, outer) pair, or -1 if the combination
    /// does not occur in the parent sector.
    int recompose(int inner, int outer) const {
        return table_[static_cast<std::size_t>(inner) * outer_.size() + static_cast<std::size_t>(outer)];
    }

    double sign(int parent) const { return static_cast<double>(sign_[static_cast<std::size_t>(parent)]); }

private:
    Species species_;
    std::vector<int> subset_;
    std::vector<Config> inner_, outer_;
    std::vector<std::pair<int, int>> factor_;
    std::vector<std::int8_t> sign_;
    std::vector<int> table_;
};

namespace detail {

/// Parity of crossings when moving the occupied subsystem modes in front of
/// the occupied complement modes, preserving relative order within each group.
inline std::int8_t fermion_reorder_sign(const Config& cfg, const std::vector<bool>& mode_in_subset) {
    int crossings = 0;
    int inner_occupied_seen = 0;
    // Walk modes in Jordan-Wigner order; an occupied outer mode must commute
    // past every occupied inner mode that comes after it.
    int inner_total = 0;
    for (std::size_t m = 0; m < cfg.size(); ++m)
        if (mode_in_subset[m] && cfg[m]) ++inner_total;
    for (std::size_t m = 0; m < cfg.size(); ++m) {
        if (!cfg[m]) continue;
        if (mode_in_subset[m]) {
            ++inner_occupied_seen;
        } else {
            crossings += inner_total - inner_occupied_seen;
        }
    }
    return (crossings % 2 == 0) ? std::int8_t{1} : std::int8_t{-1};
}

} // namespace detail

/// Build the factorization of `parent` onto the sites in `subset`
/// (strictly increasing parent site indices).
inline SubsystemMap subsystem_map(const SectorBasis& parent, const std::vector<int>& subset) {
    const int sites = parent.lattice().sites();
    std::vector<bool> in_subset(static_cast<std::size_t>(sites), false);
    int prev = -1;
    for (int s : subset) {
        if (s < 0 || s >= sites)
            throw std::invalid_argument("subsystem_map: subset site not in parent lattice");
        if (s <= prev) throw std::invalid_argument("subsystem_map: subset must be strictly increasing");
        prev = s;
        in_subset[static_cast<std::size_t>(s)] = true;
    }

    const bool fermion = parent.species() == Species::fermion_spinful;
    const int per_site = fermion ? 2 : 1;
    std::vector<bool> mode_in_subset(static_cast<std::size_t>(sites * per_site), false);
    for (int s = 0; s < sites; ++s)
        for (int k = 0; k < per_site; ++k)
            mode_in_subset[static_cast<std::size_t>(s * per_site + k)] = in_subset[static_cast<std::size_t>(s)];

    auto split_cfg = [&](const Config& c) {
        Config in, out;
        in.reserve(subset.size() * static_cast<std::size_t>(per_site));
        for (std::size_t m = 0; m < c.size(); ++m)
            (mode_in_subset[m] ? in : out).push_back(c[m]);
        return std::make_pair(in, out);
    };

    std::map<Config, int> inner_ord, outer_ord;
    for (const auto& c : parent.states()) {
        auto [in, out] = split_cfg(c);
        inner_ord.emplace(std::move(in), 0);
        outer_ord.emplace(std::move(out), 0);
    }
    std::vector<Config> inner, outer;
    inner.reserve(inner_ord.size());
    outer.reserve(outer_ord.size());
    for (auto& [cfg, ord] : inner_ord) {
        ord = static_cast<int>(inner.size());
        inner.push_back(cfg);
    }
    for (auto& [cfg, ord] : outer_ord) {
        ord = static_cast<int>(outer.size());
        outer.push_back(cfg);
    }

    std::vector<std::pair<int, int>> factor;
    std::vector<std::int8_t> sign;
    factor.reserve(parent.states().size());
    sign.reserve(parent.states().size());
    for (const auto& c : parent.states()) {
        auto [in, out] = split_cfg(c);
        factor.emplace_back(inner_ord.at(in), outer_ord.at(out));
        sign.push_back(fermion ? detail::fermion_reorder_sign(c, mode_in_subset) : std::int8_t{1});
    }
    return SubsystemMap(parent.species(), subset, std::move(inner), std::move(outer),
                        std::move(factor), std::move(sign));
}

} // namespace renyiprobe
