#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "renyiprobe/basis.hpp"
#include "renyiprobe/block_state.hpp"
#include "renyiprobe/random_unitary.hpp"
#include "renyiprobe/rng.hpp"

namespace renyiprobe {

/// Antiferromagnetic (checkerboard) configuration: up on even-parity sites.
inline Config af_config(const Lattice& lat) {
    Config c(static_cast<std::size_t>(lat.sites()));
    for (int y = 0; y < lat.ly; ++y)
        for (int x = 0; x < lat.lx; ++x) c[static_cast<std::size_t>(x + lat.lx * y)] = (x + y) % 2 == 0;
    return c;
}

/// Phase-separated configuration: down for x < lx/2, up on the right half.
inline Config ps_config(const Lattice& lat) {
    Config c(static_cast<std::size_t>(lat.sites()));
    for (int y = 0; y < lat.ly; ++y)
        for (int x = 0; x < lat.lx; ++x) c[static_cast<std::size_t>(x + lat.lx * y)] = x >= lat.lx / 2;
    return c;
}

/// Alternating (1,0,1,0,...) bosonic density wave with n particles.
inline Config density_wave_config(const Lattice& lat, int n) {
    Config c(static_cast<std::size_t>(lat.sites()), 0);
    int placed = 0;
    for (int i = 0; i < lat.sites() && placed < n; i += 2) {
        c[static_cast<std::size_t>(i)] = 1;
        ++placed;
    }
    if (placed < n) throw std::invalid_argument("density_wave_config: lattice too small");
    return c;
}

inline VectorXcd basis_vector(const SectorBasis& basis, const Config& c) {
    const int i = basis.index_of(c);
    if (i < 0) throw std::invalid_argument("basis_vector: configuration not in sector");
    VectorXcd v = VectorXcd::Zero(basis.dim());
    v[i] = 1.0;
    return v;
}

/// Haar-random pure state within a sector (seeded).
inline VectorXcd random_sector_state(const SectorBasis& basis, std::uint64_t seed) {
    RandomStream rs = RandomStream(seed).child(StreamTag::state_init);
    return sample_haar_state(basis.dim(), rs);
}

/// W state of n qubits: one excitation shared symmetrically,
/// (|10...0> + |01...0> + ... + |0...01>)/sqrt(n). Ordinals are product-space
/// with site 0 as the slowest digit.
inline VectorXcd w_state(int n) {
    if (n < 1) throw std::invalid_argument("w_state: need at least one qubit");
    VectorXcd v = VectorXcd::Zero(Eigen::Index{1} << n);
    for (int i = 0; i < n; ++i) v[Eigen::Index{1} << (n - 1 - i)] = 1.0 / std::sqrt(double(n));
    return v;
}

/// Bell pair (|00> + |11>)/sqrt(2).
inline VectorXcd bell_state() {
    VectorXcd v = VectorXcd::Zero(4);
    v[0] = v[3] = 1.0 / std::sqrt(2.0);
    return v;
}

/// Named test states of Fig.-2-style convergence runs on a spin lattice.
enum class TestState { af, ps, random_sector, af_ps_mixture };

inline std::string to_string(TestState s) {
    switch (s) {
        case TestState::af: return "AF";
        case TestState::ps: return "PS";
        case TestState::random_sector: return "random";
        case TestState::af_ps_mixture: return "AF+PS";
    }
    return "?";
}

inline TestState test_state_from_string(const std::string& s) {
    if (s == "AF" || s == "af") return TestState::af;
    if (s == "PS" || s == "ps") return TestState::ps;
    if (s == "random" || s == "rand") return TestState::random_sector;
    if (s == "AF+PS" || s == "mixture" || s == "af+ps") return TestState::af_ps_mixture;
    throw std::invalid_argument("unknown test state: " + s);
}

} // namespace renyiprobe
