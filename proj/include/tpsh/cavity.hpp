/*
 * cavity.hpp — mean-field model of a singly resonant, dual-ported SHG cavity.
 *
 * Only the fundamental is resonant. Each roundtrip passes the crystal twice;
 * the forward pass feeds harmonic port 1 (co-propagating with the pump) and
 * the backward pass feeds port 2. Losses are tracked as fractions of
 * circulating power per roundtrip, converted to amplitude decay rates
 * through FSR/2.
 *
 * Steady state (amplitude picture, half-roundtrip losses):
 *
 *   P_c · [(T + L + (E_1 + E_2)·P_c) / 2]² = T · P_pump
 *   P_k = E_k · P_c²
 *
 * with E_k = E_NL · sinc²(ΔkL/2) · (1 for port 1, ratio for port 2).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "tpsh/error.hpp"

namespace tpsh {

inline constexpr double speed_of_light = 299'792'458.0;

/// Static parameters of the resonator and detection. Defaults are the
/// experimental values (857 nm Ti:Sa, a-cut KNbO3, 4% input coupler).
struct CavityParams {
    double pump_power = 34e-3;           // W, incident on input coupler
    double input_transmission = 0.04;    // T, per roundtrip
    double roundtrip_loss = 0.011;       // L, per roundtrip, excluding T and conversion
    double conversion_efficiency = 0.0059;  // E_NL, 1/W, single pass, per port
    double port2_conversion_ratio = 1.0; // E_2 / E_1
    double mismatch = 0.0;               // ΔkL
    double mirror_separation = 15.6e-3;  // m
    double crystal_length = 10e-3;       // m
    double crystal_index = 2.28;
    double fundamental_wavelength = 857e-9;  // m
    double harmonic_wavelength = 428.5e-9;   // m
    double detector_efficiency = 0.96;
    double path_efficiency = 0.95;

    double detection_efficiency() const { return detector_efficiency * path_efficiency; }

    /// Throws Error{invalid_argument} naming the first offending field.
    void validate() const {
        auto fail = [](const char* field, const std::string& why) {
            throw Error(ErrorKind::invalid_argument, "cavity_core",
                        std::string("cavity.") + field + ": " + why);
        };
        if (!(pump_power >= 0.0)) fail("pump_power", "must be >= 0");
        if (!(input_transmission > 0.0 && input_transmission < 1.0))
            fail("input_transmission", "must lie in (0, 1)");
        if (!(roundtrip_loss >= 0.0 && roundtrip_loss < 1.0))
            fail("roundtrip_loss", "must lie in [0, 1)");
        if (!(conversion_efficiency >= 0.0)) fail("conversion_efficiency", "must be >= 0");
        if (!(port2_conversion_ratio >= 0.0)) fail("port2_conversion_ratio", "must be >= 0");
        if (!std::isfinite(mismatch)) fail("mismatch", "must be finite");
        if (!(mirror_separation > 0.0)) fail("mirror_separation", "must be > 0");
        if (!(crystal_length >= 0.0 && crystal_length <= mirror_separation))
            fail("crystal_length", "must lie in [0, mirror_separation]");
        if (!(crystal_index >= 1.0)) fail("crystal_index", "must be >= 1");
        if (!(fundamental_wavelength > 0.0)) fail("fundamental_wavelength", "must be > 0");
        if (!(std::abs(harmonic_wavelength - fundamental_wavelength / 2.0) <=
              1e-6 * fundamental_wavelength / 2.0))
            fail("harmonic_wavelength", "must equal fundamental_wavelength / 2 within 1e-6");
        if (!(detector_efficiency > 0.0 && detector_efficiency <= 1.0))
            fail("detector_efficiency", "must lie in (0, 1]");
        if (!(path_efficiency > 0.0 && path_efficiency <= 1.0))
            fail("path_efficiency", "must lie in (0, 1]");
    }
};

/// Classical operating point. Rates are amplitude decay rates in 1/s, so
/// they combine directly with angular analysis frequencies in rad/s.
struct SteadyState {
    double circulating_power = 0.0;     // W
    double harmonic_power_port1 = 0.0;  // W
    double harmonic_power_port2 = 0.0;  // W
    double rate_input = 0.0;
    double rate_loss = 0.0;
    double rate_nl_port1 = 0.0;
    double rate_nl_port2 = 0.0;
    double linewidth_fwhm = 0.0;        // Hz, low power
    double free_spectral_range = 0.0;   // Hz
    int iterations = 0;                 // solver iterations used

    double rate_linear() const { return rate_input + rate_loss; }
    double rate_nonlinear() const { return rate_nl_port1 + rate_nl_port2; }
};

/// L = 2π/F − T. Rejects inputs that would leave no room for residual loss.
inline double roundtrip_loss_from_finesse(double finesse, double input_transmission) {
    if (!(finesse > 0.0))
        throw Error(ErrorKind::invalid_argument, "cavity_core", "finesse must be > 0");
    if (!(input_transmission >= 0.0 && input_transmission < 1.0))
        throw Error(ErrorKind::invalid_argument, "cavity_core",
                    "input_transmission must lie in [0, 1)");
    const double total = 2.0 * std::numbers::pi / finesse;
    if (!(total > input_transmission)) {
        std::ostringstream os;
        os << "finesse " << finesse << " implies total loss " << total
           << " <= input transmission " << input_transmission;
        throw Error(ErrorKind::invalid_argument, "cavity_core", os.str());
    }
    return total - input_transmission;
}

/// Low-loss finesse for a total roundtrip loss fraction.
inline double finesse_from_loss(double total_roundtrip_loss) {
    if (!(total_roundtrip_loss > 0.0))
        throw Error(ErrorKind::invalid_argument, "cavity_core", "total loss must be > 0");
    return 2.0 * std::numbers::pi / total_roundtrip_loss;
}

inline double optical_path_length(const CavityParams& p) {
    const double path = (p.mirror_separation - p.crystal_length) + p.crystal_index * p.crystal_length;
    if (!(path > 0.0))
        throw Error(ErrorKind::invalid_argument, "cavity_core", "optical path length must be > 0");
    return path;
}

inline double free_spectral_range(const CavityParams& p) {
    return speed_of_light / (2.0 * optical_path_length(p));
}

/// Low-power FWHM linewidth, FSR / finesse with finesse = 2π/(T + L).
inline double cavity_linewidth(const CavityParams& p) {
    return free_spectral_range(p) / finesse_from_loss(p.input_transmission + p.roundtrip_loss);
}

/// sinc²(ΔkL/2); even in ΔkL, equal to 1 only at 0.
inline double phase_match_efficiency(double mismatch) {
    const double x = 0.5 * mismatch;
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 3.0;
    const double s = std::sin(x) / x;
    return s * s;
}

/// Temperature offset from the phase-matching point to ΔkL (π per 0.25 K).
inline double temperature_to_mismatch(double delta_kelvin) {
    constexpr double kelvin_per_pi = 0.25;
    return std::numbers::pi * delta_kelvin / kelvin_per_pi;
}

/// Power reflected from the input coupler: (√(T·P_c) − √P_pump)².
inline double reflected_power(const CavityParams& p, const SteadyState& ss) {
    const double d = std::sqrt(p.input_transmission * ss.circulating_power) - std::sqrt(p.pump_power);
    return d * d;
}

namespace detail {

struct BuildupEquation {
    double t, l, e_total, pump;

    // P·[(T + L + E·P)/2]² − T·P_pump; strictly increasing in P ≥ 0.
    double residual(double pc) const {
        const double h = 0.5 * (t + l + e_total * pc);
        return pc * h * h - t * pump;
    }
    double update(double pc) const {
        const double s = t + l + e_total * pc;
        return 4.0 * t * pump / (s * s);
    }
};

} // namespace detail

/// Solves the buildup equation for the unique positive circulating power.
inline SteadyState steady_state(const CavityParams& p) {
    p.validate();
    SteadyState ss;
    ss.free_spectral_range = free_spectral_range(p);
    ss.linewidth_fwhm = cavity_linewidth(p);
    const double half_fsr = 0.5 * ss.free_spectral_range;
    ss.rate_input = p.input_transmission * half_fsr;
    ss.rate_loss = p.roundtrip_loss * half_fsr;

    const double e1 = p.conversion_efficiency * phase_match_efficiency(p.mismatch);
    const double e2 = e1 * p.port2_conversion_ratio;
    const detail::BuildupEquation eq{p.input_transmission, p.roundtrip_loss, e1 + e2, p.pump_power};
    const double linear_buildup = eq.update(0.0);
    if (p.pump_power == 0.0) return ss;

    constexpr double rel_tol = 1e-12;
    constexpr int max_iter = 1000;
    constexpr double damping = 0.5;

    // |f'| < 2 at the fixed point, so the half-step map contracts.
    double pc = linear_buildup;
    bool converged = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        const double next = (1.0 - damping) * pc + damping * eq.update(pc);
        const bool done = std::abs(next - pc) <= rel_tol * next;
        pc = next;
        if (done) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        double lo = 0.0, hi = linear_buildup;
        for (it = 0; it < 2000 && hi - lo > rel_tol * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (eq.residual(mid) > 0.0 ? hi : lo) = mid;
        }
        pc = 0.5 * (lo + hi);
        const double res = eq.residual(pc);
        if (!(std::abs(res) <= 1e-9 * eq.t * eq.pump)) {
            std::ostringstream os;
            os << "steady state did not converge, residual " << res;
            throw Error(ErrorKind::convergence, "cavity_core", os.str());
        }
    }

    ss.iterations = it + 1;
    ss.circulating_power = pc;
    ss.harmonic_power_port1 = e1 * pc * pc;
    ss.harmonic_power_port2 = e2 * pc * pc;
    ss.rate_nl_port1 = e1 * pc * half_fsr;
    ss.rate_nl_port2 = e2 * pc * half_fsr;
    return ss;
}

} // namespace tpsh
