#pragma once

#include <algorithm>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace renyiprobe {

/// Open-boundary lattice: a site count, optional rectangular dims and an
/// explicit undirected bond list (each pair once, ordered i < j).
/// Sites of an (lx, ly) rectangle are flattened row-major: i = ix + lx*iy.
struct Lattice {
    int lx = 0;
    int ly = 1;
    std::vector<std::pair<int, int>> bonds;

    int sites() const { return lx * ly; }

    static Lattice chain(int l) { return rect(l, 1); }

    static Lattice rect(int lx, int ly) {
        if (lx < 1 || ly < 1) throw std::invalid_argument("Lattice::rect: dims must be positive");
        Lattice lat;
        lat.lx = lx;
        lat.ly = ly;
        for (int y = 0; y < ly; ++y) {
            for (int x = 0; x < lx; ++x) {
                const int i = x + lx * y;
                if (x + 1 < lx) lat.bonds.emplace_back(i, i + 1);
                if (y + 1 < ly) lat.bonds.emplace_back(i, i + lx);
            }
        }
        lat.validate();
        return lat;
    }

    /// Invariants: bonds link distinct nearest-neighbor sites, each pair once.
    void validate() const {
        std::vector<std::pair<int, int>> seen;
        for (auto [a, b] : bonds) {
            if (a == b || a < 0 || b < 0 || a >= sites() || b >= sites())
                throw std::invalid_argument("Lattice: bond endpoints out of range or equal");
            const int ax = a % lx, ay = a / lx, bx = b % lx, by = b / lx;
            if (std::abs(ax - bx) + std::abs(ay - by) != 1)
                throw std::invalid_argument("Lattice: bond is not nearest-neighbor");
            auto key = std::minmax(a, b);
            seen.emplace_back(key.first, key.second);
        }
        std::sort(seen.begin(), seen.end());
        if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
            throw std::invalid_argument("Lattice: duplicate bond");
    }

    bool operator==(const Lattice&) const = default;
};

/// Sublattice induced by `subset` (parent site indices, strictly increasing):
/// sites are relabeled 0..|subset|-1 in subset order, and exactly the parent
/// bonds with both endpoints inside the subset are kept. Geometry of the
/// parent is not preserved (the result is a generic bond graph), so the dims
/// of the returned lattice are (|subset|, 1) and validate() is skipped.
inline Lattice restrict_to_sites(const Lattice& parent, const std::vector<int>& subset) {
    if (subset.empty()) throw std::invalid_argument("restrict_to_sites: empty subset");
    std::vector<int> pos(static_cast<std::size_t>(parent.sites()), -1);
    int prev = -1;
    for (std::size_t k = 0; k < subset.size(); ++k) {
        const int s = subset[k];
        if (s < 0 || s >= parent.sites())
            throw std::invalid_argument("restrict_to_sites: site " + std::to_string(s) + " not in parent");
        if (s <= prev)
            throw std::invalid_argument("restrict_to_sites: subset must be strictly increasing");
        prev = s;
        pos[static_cast<std::size_t>(s)] = static_cast<int>(k);
    }
    Lattice sub;
    sub.lx = static_cast<int>(subset.size());
    sub.ly = 1;
    for (auto [a, b] : parent.bonds) {
        const int ka = pos[static_cast<std::size_t>(a)];
        const int kb = pos[static_cast<std::size_t>(b)];
        if (ka >= 0 && kb >= 0) sub.bonds.emplace_back(std::min(ka, kb), std::max(ka, kb));
    }
    return sub;
}

/// Site indices of an (ax..bx) x (ay..by) rectangle (inclusive corners) of a
/// parent lattice, row-major order.
inline std::vector<int> rect_subset(const Lattice& parent, int ax, int ay, int bx, int by) {
    if (ax < 0 || ay < 0 || bx >= parent.lx || by >= parent.ly || ax > bx || ay > by)
        throw std::invalid_argument("rect_subset: rectangle out of range");
    std::vector<int> out;
    for (int y = ay; y <= by; ++y)
        for (int x = ax; x <= bx; ++x) out.push_back(x + parent.lx * y);
    return out;
}

/// Centered rectangular partition of the given size (offsets round down).
inline std::vector<int> centered_rect_subset(const Lattice& parent, int lx, int ly) {
    const int ax = (parent.lx - lx) / 2;
    const int ay = (parent.ly - ly) / 2;
    return rect_subset(parent, ax, ay, ax + lx - 1, ay + ly - 1);
}

} // namespace renyiprobe
