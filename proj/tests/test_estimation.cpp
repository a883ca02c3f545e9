#include <catch2/catch_amalgamated.hpp>

#include "renyiprobe/estimation.hpp"
#include "renyiprobe/oracle.hpp"
#include "renyiprobe/random_unitary.hpp"
#include "renyiprobe/states.hpp"

using namespace renyiprobe;
using Catch::Approx;

TEST_CASE("global inversion") {
    SECTION("pure single-sector state inverts to purity one") {
        for (int n : {1, 2, 7, 64}) {
            const double m = oracle_swap_moment_summed(1.0, 1.0, n);
            REQUIRE(m == Approx(2.0 / (n + 1)));
            REQUIRE(invert_global(1.0, m, n) == Approx(1.0).margin(1e-14));
        }
    }
    SECTION("maximally mixed sector inverts to 1/N") {
        for (int n : {2, 5, 16}) {
            // <P(s)^2> = 1/N^2 per outcome, summed over the sector: 1/N
            const double m = oracle_swap_moment_summed(1.0, 1.0 / n, n);
            REQUIRE(m == Approx(1.0 / n));
            REQUIRE(invert_global(1.0, m, n) == Approx(1.0 / n).margin(1e-14));
        }
    }
    SECTION("two equal-weight maximally mixed sectors sum to 5/24") {
        double total = 0;
        for (int dim : {2, 3}) {
            const double trace = 0.5;
            const double purity = trace * trace / dim;  // (1/2 * I/dim) squared
            total += invert_global(trace, oracle_swap_moment_summed(trace, purity, dim), dim);
        }
        REQUIRE(total == Approx(5.0 / 24).margin(1e-14));
        // and the direct matrix route agrees
        MatrixXcd rho = MatrixXcd::Zero(5, 5);
        rho.topLeftCorner(2, 2) = 0.5 * MatrixXcd::Identity(2, 2) / 2;
        rho.bottomRightCorner(3, 3) = 0.5 * MatrixXcd::Identity(3, 3) / 3;
        REQUIRE(purity_of(rho) == Approx(5.0 / 24).margin(1e-14));
    }
    SECTION("round trip on random density matrices") {
        RandomStream rs(91);
        for (int trial = 0; trial < 25; ++trial) {
            const int dim = 2 + static_cast<int>(rs.below(40));
            MatrixXcd g(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) g(i, j) = cxd(rs.normal(), rs.normal());
            MatrixXcd rho = g * g.adjoint();
            rho /= rho.trace().real();
            const double p = purity_of(rho);
            const double m = oracle_swap_moment_summed(1.0, p, dim);
            REQUIRE(invert_global(1.0, m, dim) == Approx(p).margin(1e-12));
        }
    }
}

TEST_CASE("oracle partial trace") {
    SECTION("pure product state reduces to a rank-one state") {
        const auto basis =
            build_sector(Species::spin_half, Lattice::chain(4), SectorConstraint::none());
        const VectorXcd psi = basis_vector(basis, {1, 0, 0, 1});
        const auto map = subsystem_map(basis, {1, 2});
        const MatrixXcd rho = oracle_partial_trace(map, psi);
        REQUIRE(purity_of(rho) == Approx(1.0).margin(1e-12));
    }
    SECTION("Bell pair reduces to the maximally mixed qubit") {
        const auto basis =
            build_sector(Species::spin_half, Lattice::chain(2), SectorConstraint::none());
        const auto map = subsystem_map(basis, {0});
        const MatrixXcd rho = oracle_partial_trace(map, bell_state());
        REQUIRE((rho - MatrixXcd::Identity(2, 2) / 2).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("two sites of the four-qubit W state: (1/2)|00><00| + (1/2)|psi+><psi+|") {
        const auto basis =
            build_sector(Species::spin_half, Lattice::chain(4), SectorConstraint::none());
        const auto map = subsystem_map(basis, {0, 1});
        const MatrixXcd rho = oracle_partial_trace(map, w_state(4));
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
        REQUIRE(es.eigenvalues()[2] == Approx(0.5).margin(1e-12));
        REQUIRE(es.eigenvalues()[3] == Approx(0.5).margin(1e-12));
        REQUIRE(purity_of(rho) == Approx(0.5).margin(1e-12));
    }
    SECTION("density-matrix input agrees with the pure-state path") {
        const auto basis =
            build_sector(Species::spin_half, Lattice::chain(4), SectorConstraint::spin_sz(0));
        RandomStream rs(17);
        const VectorXcd psi = sample_haar_state(basis.dim(), rs);
        const auto map = subsystem_map(basis, {0, 3});
        const MatrixXcd a = oracle_partial_trace(map, psi);
        const MatrixXcd b = oracle_partial_trace(map, MatrixXcd(psi * psi.adjoint()));
        REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("pure-state complement symmetry, including fermions") {
        struct CaseDef {
            Species sp;
            SectorConstraint c;
            int sites;
            std::vector<int> subset, complement;
        };
        const CaseDef cases[] = {
            {Species::spin_half, SectorConstraint::spin_sz(0), 6, {0, 1, 2}, {3, 4, 5}},
            {Species::spin_half, SectorConstraint::none(), 5, {1, 3}, {0, 2, 4}},
            {Species::boson, SectorConstraint::boson_n(3, 3), 5, {0, 1}, {2, 3, 4}},
            {Species::fermion_spinful, SectorConstraint::fermion(3, 1), 4, {1, 2}, {0, 3}},
        };
        for (const auto& cs : cases) {
            const auto basis = build_sector(cs.sp, Lattice::chain(cs.sites), cs.c);
            const VectorXcd psi = random_sector_state(basis, 1234);
            const double pa =
                purity_of(oracle_partial_trace(subsystem_map(basis, cs.subset), psi));
            const double pb =
                purity_of(oracle_partial_trace(subsystem_map(basis, cs.complement), psi));
            REQUIRE(pa == Approx(pb).margin(1e-12));
        }
    }
}

TEST_CASE("subset purity oracle and local inversion") {
    SECTION("product states have unit purity on every subset") {
        const int L = 3;
        VectorXcd psi = VectorXcd::Zero(8);
        psi[5] = 1.0;  // |101>
        const auto table = oracle_subset_purities(psi, L);
        std::vector<double> mom(8);
        for (unsigned m = 0; m < 8; ++m) {
            REQUIRE(table[m] == Approx(1.0).margin(1e-12));
            mom[m] = std::pow(2.0, __builtin_popcount(m));  // M(A') = 2^|A'|
        }
        const auto inv = invert_local(mom, L);
        for (unsigned m = 0; m < 8; ++m) REQUIRE(inv.purity[m] == Approx(1.0).margin(1e-12));
    }
    SECTION("W4 purities: singles 5/8, pairs 1/2, triples 5/8, full 1") {
        const auto table = oracle_subset_purities(w_state(4), 4);
        for (unsigned m = 1; m < 16; ++m) {
            const int k = __builtin_popcount(m);
            const double expect = (k == 1 || k == 3) ? 5.0 / 8 : (k == 2 ? 0.5 : 1.0);
            REQUIRE(table[m] == Approx(expect).margin(1e-12));
        }
        // inversion of the design-exact moments reproduces the oracle table
        std::vector<double> mom(16);
        for (unsigned m = 0; m < 16; ++m) {
            double sum = 0;
            unsigned sub = m;
            while (true) {
                sum += table[sub];
                if (sub == 0) break;
                sub = (sub - 1) & m;
            }
            mom[m] = sum;  // M(A') = sum of subset purities
        }
        const auto inv = invert_local(mom, 4);
        for (unsigned m = 0; m < 16; ++m) REQUIRE(inv.purity[m] == Approx(table[m]).margin(1e-10));
    }
    SECTION("Bell pair: {1, 1/2, 1/2, 1}") {
        const auto table = oracle_subset_purities(bell_state(), 2);
        REQUIRE(table[0] == Approx(1.0));
        REQUIRE(table[1] == Approx(0.5).margin(1e-12));
        REQUIRE(table[2] == Approx(0.5).margin(1e-12));
        REQUIRE(table[3] == Approx(1.0).margin(1e-12));
        // <P(s)^2> for the Bell state under local unitaries: 3/36
        REQUIRE(oracle_local_swap_moment(table) == Approx(3.0 / 36).margin(1e-12));
    }
    SECTION("local swap moment of two maximally mixed qubits is 0.0625") {
        SubsetPurityOracle t;
        t.n_sites = 2;
        t.purity = {1.0, 0.5, 0.5, 0.25};
        REQUIRE(oracle_local_swap_moment(t) == Approx(0.0625).margin(1e-14));
    }
    SECTION("global and local swap moments coincide for L = 1") {
        RandomStream rs(23);
        const VectorXcd psi = sample_haar_state(2, rs);
        const auto t = oracle_subset_purities(psi, 1);
        REQUIRE(oracle_local_swap_moment(t) ==
                Approx(oracle_swap_moment(1.0, t[1], 2)).margin(1e-14));
    }
    SECTION("missing subset entries are rejected") {
        REQUIRE_THROWS_AS(invert_local(std::vector<double>(7, 1.0), 3), std::invalid_argument);
    }
}

TEST_CASE("Renyi entropy") {
    REQUIRE(renyi_entropy(1.0).value == Approx(0.0));
    REQUIRE(renyi_entropy(0.5).value == Approx(std::log(2.0)));
    REQUIRE(renyi_entropy(0.5).defined);
    REQUIRE(!renyi_entropy(0.0).defined);
    REQUIRE(!renyi_entropy(-0.3).defined);
    // W4 half partition
    const auto table = oracle_subset_purities(w_state(4), 4);
    REQUIRE(renyi_entropy(table[0b0011]).value == Approx(std::log(2.0)).margin(1e-12));
}

TEST_CASE("error model predictions") {
    SECTION("paper-scale example: L = 14 spins at 5% accuracy") {
        ErrorModel m{1.0, 0.75};
        EstimationBudget b{100, 500};
        const double e = predict_error(m, 16384, b);
        REQUIRE(e == Approx(0.0264).margin(0.001));
    }
    SECTION("exact measurements remove the N_M term; error vanishes as N_U grows") {
        ErrorModel m{1.0, 0.75};
        const double e1 = predict_error(m, 256, EstimationBudget{100, -1});
        const double e2 = predict_error(m, 256, EstimationBudget{10000, -1});
        REQUIRE(e1 == Approx(1.0 / std::sqrt(256.0 * 100)));
        REQUIRE(e2 < e1 / 9);
        REQUIRE(predict_error(m, 256, EstimationBudget{1000000000, -1}) ==
                Approx(1.0 / std::sqrt(256.0e9)).margin(1e-12));
    }
    SECTION("monotone decreasing in N_U and N_M") {
        ErrorModel m{1.3, 0.75};
        REQUIRE(predict_error(m, 64, EstimationBudget{100, 50}) >
                predict_error(m, 64, EstimationBudget{100, 100}));
        REQUIRE(predict_error(m, 64, EstimationBudget{100, 50}) >
                predict_error(m, 64, EstimationBudget{200, 50}));
    }
}

TEST_CASE("pairwise reductions and jackknife") {
    std::vector<double> xs(1000);
    RandomStream rs(3);
    for (auto& x : xs) x = rs.uniform();
    double naive = 0;
    for (double x : xs) naive += x;
    REQUIRE(pairwise_mean(xs) == Approx(naive / xs.size()).margin(1e-13));

    // jackknife of the mean equals s/sqrt(n)
    std::vector<std::vector<double>> samples;
    for (double x : xs) samples.push_back({x});
    const double jk = jackknife_std_error(samples, [](const std::vector<double>& m) { return m[0]; });
    const double mean = naive / xs.size();
    double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double direct = std::sqrt(ss / (xs.size() * (xs.size() - 1.0)));
    REQUIRE(jk == Approx(direct).margin(1e-12));
}
