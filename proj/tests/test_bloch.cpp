#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cslat/bloch.hpp"
#include "oracles.hpp"

using namespace cslat;
using std::numbers::pi;

namespace {
double acos_clamped(double x) { return std::acos(std::clamp(x, -1.0, 1.0)); }
}  // namespace

TEST_CASE("bloch_hamiltonian matches direct substitution") {
    LatticeParams p{1.0, 1.0, 0.0, 0.0};
    auto h = bloch_hamiltonian(0.0, p);
    CHECK(h(0, 0) == Complex(-2.0, 0.0));
    CHECK(h(0, 1) == Complex(-3.0, 0.0));
    CHECK(h(1, 0) == Complex(-3.0, 0.0));
    CHECK(h(1, 1) == Complex(-2.0, 0.0));

    h = bloch_hamiltonian(pi, LatticeParams{1.0, 1.0, 0.0, 1.0});
    CHECK(std::abs(h(0, 0) - Complex(2.0, 0.5)) < 1e-14);
    CHECK(std::abs(h(0, 1) - Complex(1.0, 0.0)) < 1e-14);
    CHECK(std::abs(h(1, 1) - Complex(2.0, -0.5)) < 1e-14);

    h = bloch_hamiltonian(pi / 2.0, LatticeParams{1.0, 1.0, 1.0, 0.0});
    CHECK(std::abs(h(0, 0) - Complex(0.5, 0.0)) < 1e-14);
    CHECK(std::abs(h(0, 1) - Complex(-1.0, 0.0)) < 1e-14);
    CHECK(std::abs(h(1, 1) - Complex(-0.5, 0.0)) < 1e-14);
}

TEST_CASE("band_energies closed form") {
    SUBCASE("flat and dispersive branches at k = 0") {
        auto [ep, em] = band_energies(0.0, LatticeParams{1.0, 1.0, 0.0, 0.0});
        CHECK(std::abs(ep - Complex(1.0, 0.0)) < 1e-14);   // flat band at t
        CHECK(std::abs(em - Complex(-5.0, 0.0)) < 1e-14);  // dispersive -t - 4d
    }
    SUBCASE("broken phase pairs into 1D-chain real part") {
        const double k = acos_clamped(-0.5);
        auto [ep, em] = band_energies(k, LatticeParams{1.0, 1.0, 0.0, 1.0});
        CHECK(std::abs(ep - Complex(1.0, 0.5)) < 1e-13);
        CHECK(std::abs(em - Complex(1.0, -0.5)) < 1e-13);
    }
    SUBCASE("coalesced pair at the zone boundary for gamma = 2") {
        auto [ep, em] = band_energies(pi, LatticeParams{1.0, 1.0, 0.0, 2.0});
        CHECK(std::abs(ep - Complex(2.0, 0.0)) < 1e-13);
        CHECK(std::abs(em - Complex(2.0, 0.0)) < 1e-13);
    }
}

TEST_CASE("band_energies agrees with 2x2 diagonalization over random draws") {
    std::mt19937 rng(20240521);
    std::uniform_real_distribution<double> uk(-pi, pi);
    std::uniform_real_distribution<double> up(-3.0, 3.0);
    double worst = 0.0;
    for (int n = 0; n < 10000; ++n) {
        double d = up(rng);
        if (std::abs(d) < 1e-3) d = 1e-3;
        LatticeParams p{up(rng), d, up(rng), up(rng)};
        const double k = uk(rng);
        auto [ep, em] = band_energies(k, p);
        Eigen::ComplexEigenSolver<Eigen::Matrix2cd> solver(bloch_hamiltonian(k, p), false);
        const Complex l0 = solver.eigenvalues()(0), l1 = solver.eigenvalues()(1);
        const double direct = std::abs(ep - l0) + std::abs(em - l1);
        const double crossed = std::abs(ep - l1) + std::abs(em - l0);
        worst = std::max(worst, std::min(direct, crossed));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("trace identity holds exactly for all parameters") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uk(-pi, pi);
    std::uniform_real_distribution<double> up(-3.0, 3.0);
    for (int n = 0; n < 2000; ++n) {
        double d = up(rng);
        if (std::abs(d) < 1e-3) d = 1e-3;
        LatticeParams p{up(rng), d, up(rng), up(rng)};
        const double k = uk(rng);
        auto [ep, em] = band_energies(k, p);
        const Complex sum = ep + em;
        CHECK(std::abs(sum - Complex(-4.0 * p.d * std::cos(k), 0.0)) <= 1e-12);
    }
}

TEST_CASE("PT reality dichotomy for delta = 0") {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uk(-pi, pi);
    std::uniform_real_distribution<double> up(0.1, 3.0);
    for (int n = 0; n < 2000; ++n) {
        LatticeParams p{up(rng), up(rng), 0.0, up(rng)};
        const double k = uk(rng);
        const double disc = pt_discriminant(k, p);
        auto [ep, em] = band_energies(k, p);
        if (disc > 1e-6) {
            CHECK(std::abs(ep.imag()) <= 1e-12);
            CHECK(std::abs(em.imag()) <= 1e-12);
        } else if (disc < -1e-6) {
            CHECK(std::abs(ep - std::conj(em)) <= 1e-12);
            CHECK(std::abs(ep.real() - (-2.0 * p.d * std::cos(k))) <= 1e-12);
        }
    }
}

TEST_CASE("classify_phase against direct discriminant evaluation") {
    LatticeParams p{1.0, 1.0, 0.0, 1.0};
    CHECK(classify_phase(pi, p) == Phase::Unbroken);                    // D = 0.75
    CHECK(classify_phase(acos_clamped(-0.5), p) == Phase::Broken);      // D = -0.25
    CHECK(classify_phase(acos_clamped(-0.25), p) ==
          Phase::ExceptionalPoint);                                     // D = 0, eps = 0.5
    CHECK_THROWS_AS(classify_phase(0.0, LatticeParams{1, 1, 0.5, 1}, 1e-9),
                    std::invalid_argument);
}

TEST_CASE("numerically detected EP momenta map to t -+ gamma/2") {
    const LatticeParams base{1.0, 1.0, 0.0, 0.0};
    for (double gamma : {0.5, 1.0, 1.5}) {
        LatticeParams p = base;
        p.gamma = gamma;
        // Bracket sign changes of D on a fine momentum grid, then bisect.
        const int nk = 20000;
        std::vector<double> ep_energies;
        for (int i = 1; i <= nk; ++i) {
            double lo = pi * (i - 1) / nk, hi = pi * i / nk;
            if (pt_discriminant(lo, p) * pt_discriminant(hi, p) > 0.0) continue;
            for (int iter = 0; iter < 100; ++iter) {
                const double mid = 0.5 * (lo + hi);
                if (pt_discriminant(lo, p) * pt_discriminant(mid, p) <= 0.0) hi = mid;
                else lo = mid;
            }
            ep_energies.push_back(-2.0 * p.d * std::cos(0.5 * (lo + hi)));
        }
        REQUIRE(ep_energies.size() == 2);
        std::sort(ep_energies.begin(), ep_energies.end());
        CHECK(std::abs(ep_energies[0] - (p.t - gamma / 2.0)) <= 1e-9);
        CHECK(std::abs(ep_energies[1] - (p.t + gamma / 2.0)) <= 1e-9);
    }
}

TEST_CASE("band_edges formula vs momentum-scan oracle") {
    const LatticeParams p{1.0, 1.0, 0.0, 0.0};
    SUBCASE("gamma = 0: gap closes at the Hermitian degeneracy") {
        auto edges = band_edges(0.0, p);
        REQUIRE(edges.upper.has_value());
        REQUIRE(edges.lower.has_value());
        CHECK(*edges.upper == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*edges.lower == doctest::Approx(1.0).epsilon(1e-12));
        const auto coverage = oracle::scan_unbroken_coverage(1.0, 1.0, 0.0);
        REQUIRE(coverage.size() == 1);  // no gap: one covered interval
        CHECK(std::abs(oracle::min_splitting_energy(1.0, 1.0, 0.0) - 1.0) <= 1e-6);
    }
    SUBCASE("gamma = 1") {
        auto edges = band_edges(1.0, p);
        REQUIRE(edges.upper.has_value());
        REQUIRE(edges.lower.has_value());
        // Frozen from the 1e6-point scan oracle.
        CHECK(std::abs(*edges.upper - 1.133974596216) <= 1e-9);
        CHECK(std::abs(*edges.lower - 0.958039891550) <= 1e-9);
        const auto coverage = oracle::scan_unbroken_coverage(1.0, 1.0, 1.0);
        REQUIRE(coverage.size() == 2);
        CHECK(std::abs(*edges.lower - coverage[0].second) <= 1e-6);
        CHECK(std::abs(*edges.upper - coverage[1].first) <= 1e-6);
    }
    SUBCASE("gamma = 3: upper band evaporated") {
        auto edges = band_edges(3.0, p);
        CHECK_FALSE(edges.upper.has_value());
        REQUIRE(edges.lower.has_value());
        // Frozen from the scan oracle: -2 + sqrt(6.75).
        CHECK(std::abs(*edges.lower - 0.598076211353) <= 1e-9);
        const auto coverage = oracle::scan_unbroken_coverage(1.0, 1.0, 3.0);
        REQUIRE(coverage.size() == 1);  // a single surviving band
        CHECK(std::abs(*edges.lower - coverage[0].second) <= 1e-6);
    }
}

TEST_CASE("ep_lines energies and existence flags") {
    const LatticeParams p{1.0, 1.0, 0.0, 0.0};
    auto l0 = ep_lines(0.0, p);
    CHECK(l0.e1 == 1.0);
    CHECK(l0.e2 == 1.0);
    CHECK(l0.e1_present);
    CHECK(l0.e2_present);

    auto l1 = ep_lines(1.0, p);
    CHECK(l1.e1 == 0.5);
    CHECK(l1.e2 == 1.5);
    CHECK(l1.e1_present);
    CHECK(l1.e2_present);

    auto l25 = ep_lines(2.5, p);
    CHECK(l25.e1_present);
    CHECK_FALSE(l25.e2_present);  // pair annihilated at the zone boundary, gamma > gamma_c
}

TEST_CASE("critical_constants") {
    auto c = critical_constants(LatticeParams{1.0, 1.0, 0.0, 0.0});
    CHECK(c.gamma_c == 2.0);
    CHECK(c.eps_c == 2.0);
    c = critical_constants(LatticeParams{2.0, 1.0, 0.0, 0.0});
    CHECK(c.gamma_c == 0.0);
    CHECK(c.eps_c == 2.0);
    c = critical_constants(LatticeParams{1.0, 2.0, 0.0, 0.0});
    CHECK(c.gamma_c == 6.0);
    CHECK(c.eps_c == 4.0);
}

TEST_CASE("sample_bands re-pairs branches into continuous tracks") {
    SUBCASE("flat band is the eps_plus track for the Hermitian chain") {
        const auto bs = sample_bands(LatticeParams{1.0, 1.0, 0.0, 0.0}, 257);
        for (const auto& pt : bs.points) {
            CHECK(std::abs(pt.eps_plus - Complex(1.0, 0.0)) <= 1e-12);
            CHECK(std::abs(pt.eps_minus -
                           Complex(-1.0 - 4.0 * std::cos(pt.k), 0.0)) <= 1e-12);
        }
    }
    SUBCASE("broken set at gamma = 1 is -0.75 < cos k < -0.25") {
        const int nk = 4096;
        const auto bs = sample_bands(LatticeParams{1.0, 1.0, 0.0, 1.0}, nk);
        const double dk = 2.0 * pi / nk;
        for (const auto& pt : bs.points) {
            const double c = std::cos(pt.k);
            const bool inside = c > -0.75 && c < -0.25;
            if (pt.label == Phase::Broken) {
                CHECK(c > -0.75 - 2.0 * dk);
                CHECK(c < -0.25 + 2.0 * dk);
            } else if (inside && pt.label == Phase::Unbroken) {
                // Unbroken labels may only appear within grid resolution of the edge.
                const bool near_edge =
                    std::min(std::abs(c + 0.75), std::abs(c + 0.25)) <= 2.0 * dk;
                CHECK(near_edge);
            }
        }
    }
    SUBCASE("trace identity at minimal grid") {
        const auto bs = sample_bands(LatticeParams{1.0, 1.0, 0.0, 1.0}, 2);
        REQUIRE(bs.points.size() == 2);
        for (const auto& pt : bs.points) {
            const Complex sum = pt.eps_plus + pt.eps_minus;
            CHECK(std::abs(sum - Complex(-4.0 * std::cos(pt.k), 0.0)) <= 1e-12);
        }
    }
    SUBCASE("tracks are continuous through exceptional points") {
        // Near an EP adjacent samples differ by ~sqrt(|D'| dk) from the
        // square-root branch; 0.06 bounds that for this grid.
        const int nk = 8192;
        const auto bs = sample_bands(LatticeParams{1.0, 1.0, 0.0, 1.0}, nk);
        for (std::size_t i = 1; i < bs.points.size(); ++i) {
            CHECK(std::abs(bs.points[i].eps_plus - bs.points[i - 1].eps_plus) < 0.06);
            CHECK(std::abs(bs.points[i].eps_minus - bs.points[i - 1].eps_minus) < 0.06);
        }
    }
}

TEST_CASE("hermitian imbalance: real spectrum and monotone gap growth") {
    double previous_gap = -1.0;
    for (double delta : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        const auto bs = sample_bands(LatticeParams{1.0, 1.0, delta, 0.0}, 1024);
        double upper_min = 1e300, lower_max = -1e300;
        for (const auto& pt : bs.points) {
            CHECK(std::abs(pt.eps_plus.imag()) <= 1e-12);
            CHECK(std::abs(pt.eps_minus.imag()) <= 1e-12);
            upper_min = std::min(upper_min, pt.eps_plus.real());
            lower_max = std::max(lower_max, pt.eps_minus.real());
        }
        const double gap = upper_min - lower_max;
        CHECK(gap > previous_gap);
        previous_gap = gap;
    }
}

TEST_CASE("phase_diagram region labels") {
    const LatticeParams p{1.0, 1.0, 0.0, 0.0};
    SUBCASE("gamma = 1 cross-section") {
        // Inside the unbroken gap (0.958, 1.134) only the broken phase remains;
        // between the EP lines and the gap edges the phases coexist.  Energies
        // are checked one at a time so the half-grid-spacing pad stays zero.
        auto region_at = [&p](double er) {
            return phase_diagram(p, {1.0}, {er}, 8192).at(0, 0);
        };
        CHECK(region_at(0.70) == Region::Coexistent);  // (0.5, 0.958)
        CHECK(region_at(1.00) == Region::BrokenOnly);  // inside the gap
        CHECK(region_at(1.30) == Region::Coexistent);  // (1.134, 1.5)
        CHECK(region_at(1.45) == Region::Coexistent);
        CHECK(region_at(2.00) == Region::UnbrokenOnly);  // upper band, beyond EP2
        CHECK(region_at(3.50) == Region::NoBand);
    }
    SUBCASE("no-band region above the critical energy at gamma = 3") {
        const auto pd = phase_diagram(p, {3.0}, {3.0}, 4096);
        CHECK(pd.at(0, 0) == Region::NoBand);
    }
    SUBCASE("dispersive band bottom is unbroken-only at gamma = 0") {
        const auto pd = phase_diagram(p, {0.0}, {-5.0}, 4096);
        CHECK(pd.at(0, 0) == Region::UnbrokenOnly);
    }
    SUBCASE("rejects delta != 0") {
        CHECK_THROWS_AS(phase_diagram(LatticeParams{1, 1, 0.5, 0}, {0.0}, {0.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("grid operations are invariant under the worker count") {
    const LatticeParams p{1.0, 1.0, 0.0, 1.3};
    const auto serial = sample_bands(p, 513, kEpTolerance, 1);
    const auto threaded = sample_bands(p, 513, kEpTolerance, 3);
    REQUIRE(serial.points.size() == threaded.points.size());
    for (std::size_t i = 0; i < serial.points.size(); ++i) {
        CHECK(serial.points[i].eps_plus == threaded.points[i].eps_plus);
        CHECK(serial.points[i].eps_minus == threaded.points[i].eps_minus);
        CHECK(serial.points[i].label == threaded.points[i].label);
    }

    const std::vector<double> gammas{0.0, 0.7, 1.4, 2.1};
    const std::vector<double> energies{-5.0, -1.0, 0.7, 1.0, 2.5};
    const auto pd1 = phase_diagram(p, gammas, energies, 1024, 1);
    const auto pd3 = phase_diagram(p, gammas, energies, 1024, 3);
    CHECK(pd1.cells == pd3.cells);
}

TEST_CASE("sampled momentum grid is strictly increasing over [-pi, pi)") {
    const auto bs = sample_bands(LatticeParams{}, 97);
    CHECK(bs.points.front().k == -pi);
    CHECK(bs.points.back().k < pi);
    for (std::size_t i = 1; i < bs.points.size(); ++i) {
        CHECK(bs.points[i].k > bs.points[i - 1].k);
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(LatticeParams(1.0, 0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(LatticeParams(std::nan(""), 1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sample_bands(LatticeParams{}, 1), std::invalid_argument);
    CHECK_THROWS_AS(band_energies(std::nan(""), LatticeParams{}), std::invalid_argument);
}
