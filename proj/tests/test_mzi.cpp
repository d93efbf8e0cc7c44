#include <catch2/catch_amalgamated.hpp>

#include "mzmesh/linalg.hpp"
#include "mzmesh/mzi.hpp"
#include "test_util.hpp"

using namespace mzmesh;
using numeric::pi;

TEST_CASE("ideal transfer matches the closed form") {
    rng::Sequence rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const double th = (rng.uniform() - 0.5) * 8 * pi;
        const double ph = (rng.uniform() - 0.5) * 8 * pi;
        const CMatrix m = mzi_transfer({th, ph});
        const Complex g = std::polar(1.0, th / 2);
        const double s = std::sin(th / 2), c = std::cos(th / 2);
        const Complex ep = std::polar(1.0, ph);
        REQUIRE(std::abs(m(0, 0) - g * ep * s) < 1e-12);
        REQUIRE(std::abs(m(0, 1) - g * ep * c) < 1e-12);
        REQUIRE(std::abs(m(1, 0) - g * c) < 1e-12);
        REQUIRE(std::abs(m(1, 1) + g * s) < 1e-12);
    }
}

TEST_CASE("cross and bar states") {
    const CMatrix cross = mzi_transfer(cross_state());
    REQUIRE(std::abs(cross(0, 0)) < 1e-15);
    REQUIRE(std::abs(std::abs(cross(0, 1)) - 1.0) < 1e-15);

    const CMatrix bar = mzi_transfer(bar_state());
    REQUIRE(std::abs(std::abs(bar(0, 0)) - 1.0) < 1e-12);
    REQUIRE(std::abs(std::abs(bar(1, 1)) - 1.0) < 1e-12);
    REQUIRE(std::abs(bar(0, 1)) < 1e-12);
    REQUIRE(std::abs(bar(1, 0)) < 1e-12);

    // cross routes (1,0) fully to the second port, bar keeps it on the first
    const CVector in{1.0, 0.0};
    REQUIRE(std::abs(std::norm(matvec(cross, in)[1]) - 1.0) < 1e-12);
    REQUIRE(std::abs(std::norm(matvec(bar, in)[0]) - 1.0) < 1e-12);
    const CVector back = matvec(cross, matvec(cross, in));
    REQUIRE(std::abs(std::norm(back[0]) - 1.0) < 1e-12);
}

TEST_CASE("half split at theta = pi/2") {
    const CMatrix m = mzi_transfer({pi / 2, 0.0});
    REQUIRE(std::abs(std::norm(m(0, 0)) - 0.5) < 1e-12);
}

TEST_CASE("top-to-top power follows sin^2(theta/2)") {
    rng::Sequence rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const double th = (rng.uniform() - 0.5) * 4 * pi;
        const CMatrix m = mzi_transfer({th, rng.uniform() * 2 * pi});
        const double s2 = std::sin(th / 2) * std::sin(th / 2);
        REQUIRE(std::abs(std::norm(m(0, 0)) - s2) < 1e-12);
    }
}

TEST_CASE("ideal transfer is unitary over random phases") {
    rng::Sequence rng(29);
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const double th = (rng.uniform() - 0.5) * 8 * pi;
        const double ph = (rng.uniform() - 0.5) * 8 * pi;
        worst = std::max(worst, unitarity_defect(mzi_transfer({th, ph})));
    }
    REQUIRE(worst < 1e-12);
}

TEST_CASE("loss scales both singular values equally") {
    for (double loss : {0.1, 0.5, 2.0}) {
        const CMatrix m = mzi_transfer({1.3, 0.4}, {loss, 0.0});
        const double expected = std::pow(10.0, -loss / 20.0);
        const auto svs = singular_values(m);
        REQUIRE(svs.size() == 2);
        REQUIRE(std::abs(svs[0] - expected) < 1e-12);
        REQUIRE(std::abs(svs[1] - expected) < 1e-12);
    }
}

TEST_CASE("splitting imperfection") {
    // zero delta reproduces the ideal block exactly
    REQUIRE(max_abs_diff(mzi_transfer({0.9, 1.7}, {0.0, 0.0}), mzi_transfer({0.9, 1.7})) < 1e-15);

    // imbalanced couplers break the perfect cross extinction but stay unitary
    const CMatrix m = mzi_transfer({0.0, 0.0}, {0.0, 0.05});
    REQUIRE(std::norm(m(0, 0)) > 1e-6);
    REQUIRE(unitarity_defect(m) < 1e-12);

    REQUIRE_THROWS_AS(mzi_transfer({0, 0}, {-0.1, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(mzi_transfer({0, 0}, {0.0, 0.5}), std::invalid_argument);
    REQUIRE_THROWS_AS(mzi_transfer({0, 0}, {0.0, -0.7}), std::invalid_argument);
}

TEST_CASE("voltage to phase law") {
    const VoltagePhaseModel m{};
    REQUIRE(phase_from_voltage(0.0, m) == 0.0);
    REQUIRE(std::abs(phase_from_voltage(m.v_pi, m) - pi) < 1e-15);
    REQUIRE(std::abs(phase_from_voltage(m.v_pi / std::sqrt(2.0), m) - pi / 2) < 1e-14);
    REQUIRE_THROWS_AS(phase_from_voltage(-0.1, m), std::invalid_argument);
    REQUIRE_THROWS_AS(voltage_from_phase(-0.1, m), std::invalid_argument);

    // round trip over [0, 4pi]
    for (int i = 0; i <= 64; ++i) {
        const double phase = 4 * pi * i / 64.0;
        REQUIRE(std::abs(phase_from_voltage(voltage_from_phase(phase, m), m) - phase) < 1e-12);
    }
}

TEST_CASE("thermal phase error") {
    const ThermalParams p{100e-6, 1550e-9, 1.8e-4};
    const double dtheta = thermal_phase_error(2.7, p);
    REQUIRE(std::abs(dtheta - 0.197) < 0.002);
    REQUIRE(thermal_phase_error(0.0, p) == 0.0);

    // temperature swing for a pi shift
    const double k = thermal_phase_error(1.0, p);
    REQUIRE(std::abs(pi / k - 43.06) < 0.01);

    // linear in dT and in L
    REQUIRE(std::abs(thermal_phase_error(5.4, p) - 2.0 * dtheta) < 1e-12);
    const ThermalParams p2{200e-6, 1550e-9, 1.8e-4};
    REQUIRE(std::abs(thermal_phase_error(2.7, p2) - 2.0 * dtheta) < 1e-12);
}
