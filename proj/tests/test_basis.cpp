#include <catch2/catch_amalgamated.hpp>

#include "renyiprobe/basis.hpp"
#include "renyiprobe/lattice.hpp"
#include "renyiprobe/subsystem.hpp"

using namespace renyiprobe;

namespace {

long long binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

TEST_CASE("chain and rectangle bond construction") {
    const Lattice chain = Lattice::chain(8);
    REQUIRE(chain.sites() == 8);
    REQUIRE(chain.bonds.size() == 7);

    const Lattice sq = Lattice::rect(4, 4);
    REQUIRE(sq.sites() == 16);
    REQUIRE(sq.bonds.size() == 24);  // 2 * 4 * 3

    const Lattice plaq = Lattice::rect(2, 2);
    REQUIRE(plaq.bonds.size() == 4);
}

TEST_CASE("restrict_to_sites keeps interior bonds only") {
    const Lattice sq = Lattice::rect(4, 4);
    // 2x2 corner
    const Lattice corner = restrict_to_sites(sq, {0, 1, 4, 5});
    REQUIRE(corner.bonds.size() == 4);
    // single site
    const Lattice single = restrict_to_sites(sq, {5});
    REQUIRE(single.bonds.empty());
    // chain prefix
    const Lattice pre = restrict_to_sites(Lattice::chain(8), {0, 1, 2, 3});
    REQUIRE(pre.bonds.size() == 3);
    REQUIRE_THROWS_AS(restrict_to_sites(sq, {}), std::invalid_argument);
    REQUIRE_THROWS_AS(restrict_to_sites(sq, {3, 99}), std::invalid_argument);
}

TEST_CASE("spin sector dimensions") {
    const Lattice chain = Lattice::chain(8);
    REQUIRE(build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(0)).dim() == 70);
    REQUIRE(build_sector(Species::spin_half, chain, SectorConstraint::none()).dim() == 256);
    // empty sector is a result, not an error
    REQUIRE(build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(12)).dim() == 0);
    REQUIRE(build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(1)).dim() == 0);  // parity
    // sector dimensions sum to the full space
    long long sum = 0;
    for (int sz = -8; sz <= 8; ++sz)
        sum += build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(sz)).dim();
    REQUIRE(sum == 256);
}

TEST_CASE("boson sector dimensions and caps") {
    const Lattice chain = Lattice::chain(10);
    REQUIRE(build_sector(Species::boson, chain, SectorConstraint::boson_n(5)).dim() == 2002);
    // capped spaces: sum over N of capped sectors = (cap+1)^L
    const Lattice small = Lattice::chain(3);
    long long sum = 0;
    for (int n = 0; n <= 6; ++n) {
        SectorConstraint c = SectorConstraint::boson_n(n, 2);
        sum += build_sector(Species::boson, small, c).dim();
    }
    REQUIRE(sum == 27);
    // uncapped full space is rejected
    REQUIRE_THROWS_AS(build_sector(Species::boson, chain, SectorConstraint::none()),
                      std::invalid_argument);
}

TEST_CASE("fermion sector dimensions") {
    const Lattice chain = Lattice::chain(4);
    // dim = C(L, n_up) C(L, n_dn)
    for (int n = 0; n <= 8; ++n)
        for (int sz = -4; sz <= 4; ++sz) {
            if ((n + sz) % 2 != 0) continue;
            const int nu = (n + sz) / 2, nd = (n - sz) / 2;
            const auto b = build_sector(Species::fermion_spinful, chain,
                                        SectorConstraint::fermion(n, sz));
            REQUIRE(b.dim() == binom(4, nu) * binom(4, nd));
        }
    REQUIRE(build_sector(Species::fermion_spinful, chain, SectorConstraint::none()).dim() == 256);
}

TEST_CASE("sector_of computes conserved quantum numbers") {
    REQUIRE(sector_of(Species::fermion_spinful, {1, 1, 1, 1}) == SectorLabel{4, 0});
    REQUIRE(sector_of(Species::spin_half, {1, 0, 1, 0}).sz == 0);
    REQUIRE(sector_of(Species::spin_half, {1, 1, 1, 0}).sz == 2);
    REQUIRE(sector_of(Species::boson, {2, 0, 3}).n == 5);
}

TEST_CASE("basis ordering is lexicographic and rebuild-stable") {
    const Lattice chain = Lattice::chain(6);
    const auto a = build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(0));
    const auto b = build_sector(Species::spin_half, chain, SectorConstraint::spin_sz(0));
    REQUIRE(a.states() == b.states());
    REQUIRE(std::is_sorted(a.states().begin(), a.states().end()));
    for (int i = 0; i < a.dim(); ++i) REQUIRE(a.index_of(a.state(i)) == i);
}

TEST_CASE("subsystem map splits and recomposes") {
    SECTION("two-site spin chain, subset {1}") {
        const auto basis = build_sector(Species::spin_half, Lattice::chain(2), SectorConstraint::none());
        const auto map = subsystem_map(basis, {1});
        // parent |up down> = (1,0): inner = occupation of site 1 = 0 (down),
        // outer = site 0 = 1 (up)
        const int p = basis.index_of({1, 0});
        auto [in, out] = map.split(p);
        REQUIRE(map.inner_states()[static_cast<std::size_t>(in)] == Config{0});
        REQUIRE(map.outer_states()[static_cast<std::size_t>(out)] == Config{1});
    }
    SECTION("subset = all sites has trivial outer space") {
        const auto basis = build_sector(Species::spin_half, Lattice::chain(3), SectorConstraint::none());
        const auto map = subsystem_map(basis, {0, 1, 2});
        REQUIRE(map.outer_dim() == 1);
        REQUIRE(map.inner_dim() == 8);
    }
    SECTION("round trip is exhaustive for L=4, subset {2,3}") {
        const auto basis = build_sector(Species::spin_half, Lattice::chain(4), SectorConstraint::none());
        const auto map = subsystem_map(basis, {2, 3});
        for (int p = 0; p < basis.dim(); ++p) {
            auto [i, o] = map.split(p);
            REQUIRE(map.recompose(i, o) == p);
        }
    }
    SECTION("round trip for every species and subset, L <= 8 product spaces") {
        struct CaseDef {
            Species sp;
            SectorConstraint c;
            int sites;
            std::vector<int> subset;
        };
        const CaseDef cases[] = {
            {Species::spin_half, SectorConstraint::none(), 8, {1, 2, 4}},
            {Species::spin_half, SectorConstraint::spin_sz(0), 8, {1, 2, 4}},
            {Species::boson, SectorConstraint::boson_n(4, 2), 6, {1, 2, 4}},
            {Species::fermion_spinful, SectorConstraint::fermion(3, 1), 3, {0, 2}},
        };
        for (const auto& cs : cases) {
            const auto basis = build_sector(cs.sp, Lattice::chain(cs.sites), cs.c);
            const auto map = subsystem_map(basis, cs.subset);
            for (int p = 0; p < basis.dim(); ++p) {
                auto [i, o] = map.split(p);
                REQUIRE(map.recompose(i, o) == p);
            }
        }
    }
    SECTION("subset site outside parent is an error") {
        const auto basis = build_sector(Species::spin_half, Lattice::chain(2), SectorConstraint::none());
        REQUIRE_THROWS_AS(subsystem_map(basis, {2}), std::invalid_argument);
    }
}

TEST_CASE("fermionic factorization signs flip on mode crossings") {
    // state c^dag_{0u} c^dag_{1u} |vac> on 2 sites: config (1,0,1,0).
    // Splitting off site 1 moves mode 1u past mode 0u: both occupied -> sign -1... only
    // crossings between *inner* and *outer* occupied modes count: inner = site1 modes.
    const auto basis =
        build_sector(Species::fermion_spinful, Lattice::chain(2), SectorConstraint::none());
    const auto map = subsystem_map(basis, {1});
    const int p = basis.index_of({1, 0, 1, 0});
    REQUIRE(map.sign(p) == -1.0);  // one occupied outer mode (0u) precedes one occupied inner mode
    const int q = basis.index_of({0, 0, 1, 0});
    REQUIRE(map.sign(q) == 1.0);  // no crossings
}
