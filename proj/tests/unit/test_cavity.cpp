// Cavity mean-field model: arithmetic helpers, phase matching, steady state.
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "tpsh/cavity.hpp"

using namespace tpsh;

namespace {

constexpr double pi = std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double incident_balance_residual(const CavityParams& p, const SteadyState& ss) {
    const double out = reflected_power(p, ss) + p.roundtrip_loss * ss.circulating_power +
                       ss.harmonic_power_port1 + ss.harmonic_power_port2;
    return rel(out, p.pump_power);
}

} // namespace

TEST(RoundtripLoss, FinesseOneTwentyGivesAboutOnePercent) {
    const double l = roundtrip_loss_from_finesse(120.0, 0.04);
    EXPECT_NEAR(l, 2.0 * pi / 120.0 - 0.04, 1e-15);
    EXPECT_NEAR(l, 0.01236, 1e-5);
    EXPECT_GE(l, 0.010);
    EXPECT_LE(l, 0.014);
}

TEST(RoundtripLoss, InvertsDefinitionWithoutCoupler) {
    EXPECT_NEAR(roundtrip_loss_from_finesse(2.0 * pi / 0.05, 0.0), 0.05, 1e-15);
}

TEST(RoundtripLoss, ComposesWithFinesseFromLoss) {
    EXPECT_NEAR(roundtrip_loss_from_finesse(finesse_from_loss(0.1), 0.06), 0.04, 1e-12);
    EXPECT_NEAR(finesse_from_loss(0.1), 62.83, 1e-2);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(0.0, 0.2), l(1e-4, 0.2);
    for (int i = 0; i < 1000; ++i) {
        const double tt = t(rng), ll = l(rng);
        EXPECT_NEAR(roundtrip_loss_from_finesse(finesse_from_loss(tt + ll), tt), ll, 1e-12);
    }
}

TEST(RoundtripLoss, RejectsInconsistentMeasurement) {
    EXPECT_THROW(roundtrip_loss_from_finesse(2.0 * pi / 0.04, 0.04), Error);
    EXPECT_THROW(roundtrip_loss_from_finesse(200.0, 0.04), Error);
    EXPECT_THROW(roundtrip_loss_from_finesse(0.0, 0.04), Error);
    EXPECT_THROW(roundtrip_loss_from_finesse(120.0, 1.0), Error);
}

TEST(Linewidth, ExperimentalGeometry) {
    CavityParams p;
    // Optical path 5.6 mm + 2.28 × 10 mm = 28.4 mm.
    EXPECT_NEAR(optical_path_length(p), 0.0284, 1e-12);
    EXPECT_NEAR(free_spectral_range(p), 5278036232.394367, 1e-3);
    EXPECT_NEAR(cavity_linewidth(p), 42841303.366388045, 1e-4);
    EXPECT_NEAR(cavity_linewidth(p) / 1e6, 42.5, 0.5);
}

TEST(Linewidth, EmptyCavity) {
    CavityParams p;
    p.crystal_index = 1.0;
    p.crystal_length = 0.0;
    p.mirror_separation = 15e-3;
    p.input_transmission = 0.04;
    p.roundtrip_loss = 2.0 * pi / 100.0 - 0.04;
    EXPECT_NEAR(free_spectral_range(p), speed_of_light / 0.03, 1e-3);
    EXPECT_NEAR(free_spectral_range(p) / 1e9, 9.993, 1e-3);
    EXPECT_NEAR(cavity_linewidth(p), free_spectral_range(p) / 100.0, 1e-6);
}

TEST(Linewidth, DoublingPathHalvesFsrAndLinewidth) {
    CavityParams p, q;
    q.mirror_separation *= 2.0;
    q.crystal_length *= 2.0;
    EXPECT_NEAR(free_spectral_range(q) / free_spectral_range(p), 0.5, 1e-14);
    EXPECT_NEAR(cavity_linewidth(q) / cavity_linewidth(p), 0.5, 1e-14);
}

TEST(Linewidth, RejectsNonPositivePath) {
    CavityParams p;
    p.crystal_index = 0.0;
    p.crystal_length = p.mirror_separation;
    EXPECT_THROW(optical_path_length(p), Error);
}

TEST(PhaseMatch, ClosedFormValues) {
    EXPECT_EQ(phase_match_efficiency(0.0), 1.0);
    EXPECT_NEAR(phase_match_efficiency(pi), std::pow(2.0 / pi, 2), 1e-12);
    EXPECT_NEAR(phase_match_efficiency(2.0 * pi), 0.0, 1e-30);
}

TEST(PhaseMatch, EvenBoundedAndPeakedAtZero) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    for (int i = 0; i < 10000; ++i) {
        const double x = u(rng);
        const double e = phase_match_efficiency(x);
        EXPECT_EQ(e, phase_match_efficiency(-x));
        EXPECT_LE(e, 1.0);
        EXPECT_GE(e, 0.0);
        if (x != 0.0) {
            EXPECT_LT(e, 1.0);
        }
    }
    // Small-argument branch stays continuous with the direct formula.
    const double x = 2.0e-8;
    const double direct = std::pow(std::sin(x / 2) / (x / 2), 2);
    EXPECT_NEAR(phase_match_efficiency(x), direct, 1e-15);
    EXPECT_LT(phase_match_efficiency(1e-6), 1.0);
}

TEST(Temperature, LinearMap) {
    EXPECT_NEAR(temperature_to_mismatch(0.25), pi, 1e-15);
    EXPECT_EQ(temperature_to_mismatch(0.0), 0.0);
    EXPECT_NEAR(temperature_to_mismatch(-0.5), -2.0 * pi, 1e-15);
}

TEST(Params, ValidationNamesField) {
    CavityParams p;
    EXPECT_NO_THROW(p.validate());
    auto expect_field = [](CavityParams q, const std::string& field) {
        try {
            q.validate();
            ADD_FAILURE() << "accepted invalid " << field;
        } catch (const Error& e) {
            EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
            EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
        }
    };
    p = {}; p.input_transmission = 1.5; expect_field(p, "cavity.input_transmission");
    p = {}; p.input_transmission = 0.0; expect_field(p, "cavity.input_transmission");
    p = {}; p.roundtrip_loss = -0.1; expect_field(p, "cavity.roundtrip_loss");
    p = {}; p.conversion_efficiency = -1; expect_field(p, "cavity.conversion_efficiency");
    p = {}; p.pump_power = -1e-3; expect_field(p, "cavity.pump_power");
    p = {}; p.detector_efficiency = 0.0; expect_field(p, "cavity.detector_efficiency");
    p = {}; p.path_efficiency = 1.2; expect_field(p, "cavity.path_efficiency");
    p = {}; p.harmonic_wavelength = 430e-9; expect_field(p, "cavity.harmonic_wavelength");
}

TEST(SteadyState, OperatingPointMatchesIndependentSolve) {
    CavityParams p;  // 34 mW, T = 4 %, L = 1.1 %, E_NL = 0.0059 /W
    const auto ss = steady_state(p);
    EXPECT_NEAR(ss.circulating_power, 1.255766607485931, 1e-10);
    EXPECT_NEAR(ss.harmonic_power_port1, 0.009304003657612674, 1e-12);
    EXPECT_EQ(ss.harmonic_power_port1, ss.harmonic_power_port2);
    EXPECT_NEAR(ss.circulating_power, 1.25, 0.01);
    EXPECT_NEAR(ss.harmonic_power_port1 * 1e3, 9.2, 0.15);
    // Within 25 % of the measured 8 mW per port.
    EXPECT_LT(std::abs(ss.harmonic_power_port1 - 8e-3) / 8e-3, 0.25);
}

TEST(SteadyState, TwentyThreeMilliwattPoint) {
    CavityParams p;
    p.pump_power = 23e-3;
    const auto ss = steady_state(p);
    EXPECT_NEAR(ss.circulating_power, 0.9506494850461725, 1e-10);
    EXPECT_NEAR(ss.harmonic_power_port1, 0.0053320332161694625, 1e-12);
}

TEST(SteadyState, RatesAreFractionsTimesHalfFsr) {
    CavityParams p;
    const auto ss = steady_state(p);
    const double half = 0.5 * free_spectral_range(p);
    EXPECT_NEAR(ss.rate_input, p.input_transmission * half, 1e-6);
    EXPECT_NEAR(ss.rate_loss, p.roundtrip_loss * half, 1e-6);
    EXPECT_NEAR(ss.rate_nl_port1, p.conversion_efficiency * ss.circulating_power * half, 1e-6);
    EXPECT_NEAR(ss.linewidth_fwhm, cavity_linewidth(p), 1e-6);
}

TEST(SteadyState, ZeroPump) {
    CavityParams p;
    p.pump_power = 0.0;
    const auto ss = steady_state(p);
    EXPECT_EQ(ss.circulating_power, 0.0);
    EXPECT_EQ(ss.harmonic_power_port1, 0.0);
    EXPECT_EQ(ss.harmonic_power_port2, 0.0);
    EXPECT_EQ(ss.rate_nonlinear(), 0.0);
}

TEST(SteadyState, LinearBuildupWithoutConversion) {
    for (double pump : {1e-3, 34e-3, 0.5, 3.0}) {
        CavityParams p;
        p.conversion_efficiency = 0.0;
        p.pump_power = pump;
        const auto ss = steady_state(p);
        const double tl = p.input_transmission + p.roundtrip_loss;
        EXPECT_LE(rel(ss.circulating_power, 4.0 * p.input_transmission * pump / (tl * tl)), 1e-12);
        EXPECT_EQ(ss.harmonic_power_port1, 0.0);
        EXPECT_EQ(ss.harmonic_power_port2, 0.0);
    }
}

TEST(SteadyState, MonotoneInPump) {
    CavityParams p;
    double prev_pc = -1.0, prev_pk = -1.0;
    for (int i = 1; i <= 50; ++i) {
        p.pump_power = 0.5 * i / 50.0;
        const auto ss = steady_state(p);
        EXPECT_GT(ss.circulating_power, prev_pc);
        EXPECT_GT(ss.harmonic_power_port1, prev_pk);
        prev_pc = ss.circulating_power;
        prev_pk = ss.harmonic_power_port1;
    }
}

TEST(SteadyState, EnergyBalanceOverRandomParameters) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> pump(0.0, 2.0), t(0.005, 0.3), l(0.0, 0.1), e(0.0, 0.5),
        dk(-8.0, 8.0), ratio(0.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
        CavityParams p;
        p.pump_power = pump(rng);
        p.input_transmission = t(rng);
        p.roundtrip_loss = l(rng);
        p.conversion_efficiency = e(rng);
        p.mismatch = dk(rng);
        p.port2_conversion_ratio = ratio(rng);
        const auto ss = steady_state(p);
        if (p.pump_power > 0.0) {
            EXPECT_LE(incident_balance_residual(p, ss), 1e-9) << i;
        }
        EXPECT_GE(ss.circulating_power, 0.0);
        EXPECT_GE(ss.harmonic_power_port1, 0.0);
        EXPECT_GE(ss.harmonic_power_port2, 0.0);
    }
}

TEST(SteadyState, UnequalPortsAndMismatch) {
    CavityParams p;
    p.pump_power = 0.05;
    p.port2_conversion_ratio = 0.6;
    const auto ss = steady_state(p);
    EXPECT_NEAR(ss.circulating_power, 1.753213935980801, 1e-10);
    EXPECT_NEAR(ss.harmonic_power_port2 / ss.harmonic_power_port1, 0.6, 1e-12);

    CavityParams q;
    q.mismatch = pi;
    const auto sq = steady_state(q);
    const auto s0 = steady_state(CavityParams{});
    EXPECT_GT(sq.circulating_power, s0.circulating_power);  // less conversion loss
    EXPECT_LT(sq.harmonic_power_port1, s0.harmonic_power_port1);
    EXPECT_LE(incident_balance_residual(q, sq), 1e-9);
}

TEST(SteadyState, StrongConversionStillConverges) {
    CavityParams p;
    p.conversion_efficiency = 50.0;
    p.pump_power = 10.0;
    const auto ss = steady_state(p);
    EXPECT_LE(incident_balance_residual(p, ss), 1e-9);
    EXPECT_GT(ss.harmonic_power_port1, 0.0);
}
