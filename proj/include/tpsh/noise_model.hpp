/*
 * noise_model.hpp — linearized quantum noise of the two harmonic outputs.
 *
 * The harmonic modes are not resonant and are eliminated adiabatically, so
 * each port contributes an amplitude decay channel r_k of the fundamental
 * and one vacuum input. With a real mean field the fundamental's amplitude
 * and phase quadratures decouple:
 *
 *   dX/dt = −(γ + 3R)·X + Σ_k 2√r_k·X_bk + √(2γ_in)·X_in + √(2γ_l)·X_l
 *   dY/dt = −(γ +  R)·Y + Σ_k 2√r_k·Y_bk + √(2γ_in)·Y_in + √(2γ_l)·Y_l
 *   X_k,out = 2√r_k·X − X_bk     (likewise for Y)
 *
 * where γ = γ_in + γ_l and R = r_1 + r_2. The shared intracavity term is the
 * source of the cross-correlations C_X, C_Y. All spectra are in shot-noise
 * units (coherent = 1); C is twice the symmetrized cross spectrum, so that
 * the g = 1 sum variance reads S_X + C_X/2.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "tpsh/cavity.hpp"
#include "tpsh/error.hpp"

namespace tpsh {

/// Spectra of both ports at a single analysis frequency.
struct QuadPoint {
    double s_x1 = 1.0, s_x2 = 1.0;
    double s_y1 = 1.0, s_y2 = 1.0;
    double c_x = 0.0, c_y = 0.0;
};

struct QuadSpectra {
    std::vector<double> frequencies;  // Hz, strictly increasing
    std::vector<double> s_x1, s_x2, s_y1, s_y2, c_x, c_y;

    std::size_t size() const { return frequencies.size(); }

    QuadPoint point(std::size_t i) const {
        return {s_x1[i], s_x2[i], s_y1[i], s_y2[i], c_x[i], c_y[i]};
    }

    void push_back(double f, const QuadPoint& q) {
        frequencies.push_back(f);
        s_x1.push_back(q.s_x1);
        s_x2.push_back(q.s_x2);
        s_y1.push_back(q.s_y1);
        s_y2.push_back(q.s_y2);
        c_x.push_back(q.c_x);
        c_y.push_back(q.c_y);
    }

    bool is_symmetric(double tol = 1e-9) const {
        for (std::size_t i = 0; i < size(); ++i)
            if (std::abs(s_x1[i] - s_x2[i]) > tol || std::abs(s_y1[i] - s_y2[i]) > tol) return false;
        return true;
    }

    /// Linear interpolation; outside the grid the end values are held when
    /// `clamp` is set, otherwise the call is rejected.
    QuadPoint at(double freq, bool clamp = false) const {
        if (frequencies.empty())
            throw Error(ErrorKind::invalid_argument, "noise_model", "empty spectra");
        if (freq <= frequencies.front() || freq >= frequencies.back()) {
            const bool below = freq <= frequencies.front();
            const double edge = below ? frequencies.front() : frequencies.back();
            if (!clamp && freq != edge) {
                std::ostringstream os;
                os << "frequency " << freq << " Hz outside spectra range [" << frequencies.front()
                   << ", " << frequencies.back() << "]";
                throw Error(ErrorKind::invalid_argument, "noise_model", os.str());
            }
            return point(below ? 0 : size() - 1);
        }
        const auto hi = static_cast<std::size_t>(
            std::upper_bound(frequencies.begin(), frequencies.end(), freq) - frequencies.begin());
        const std::size_t lo = hi - 1;
        const double w = (freq - frequencies[lo]) / (frequencies[hi] - frequencies[lo]);
        auto mix = [w](double a, double b) { return a + w * (b - a); };
        return {mix(s_x1[lo], s_x1[hi]), mix(s_x2[lo], s_x2[hi]), mix(s_y1[lo], s_y1[hi]),
                mix(s_y2[lo], s_y2[hi]),  mix(c_x[lo], c_x[hi]),   mix(c_y[lo], c_y[hi])};
    }
};

/// n log-spaced frequencies in [lo, hi]; defaults span 0.5–20 MHz.
inline std::vector<double> log_frequency_grid(double lo = 0.5e6, double hi = 20e6, std::size_t n = 256) {
    if (!(lo > 0.0 && hi > lo && n >= 2))
        throw Error(ErrorKind::invalid_argument, "noise_model", "invalid frequency grid");
    std::vector<double> f(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) f[i] = lo * std::exp(step * static_cast<double>(i));
    f.back() = hi;
    return f;
}

/// FWHM (Hz) of the amplitude-quadrature response, (γ + 3R)/π. Spectra
/// relax to the coherent values well beyond this bandwidth.
inline double amplitude_bandwidth(const SteadyState& ss) {
    return (ss.rate_linear() + 3.0 * ss.rate_nonlinear()) / std::numbers::pi;
}

inline QuadPoint quadrature_point(const SteadyState& ss, double freq) {
    const double omega2 = std::pow(2.0 * std::numbers::pi * freq, 2);
    const double gamma = ss.rate_linear();
    const double r1 = ss.rate_nl_port1, r2 = ss.rate_nl_port2;
    const double big_r = r1 + r2;
    const double dx2 = std::pow(gamma + 3.0 * big_r, 2) + omega2;
    const double dy2 = std::pow(gamma + big_r, 2) + omega2;
    const double shared = std::sqrt(r1 * r2);
    QuadPoint q;
    q.s_x1 = 1.0 - 8.0 * big_r * r1 / dx2;
    q.s_x2 = 1.0 - 8.0 * big_r * r2 / dx2;
    q.s_y1 = 1.0 + 8.0 * big_r * r1 / dy2;
    q.s_y2 = 1.0 + 8.0 * big_r * r2 / dy2;
    q.c_x = -16.0 * big_r * shared / dx2;
    q.c_y = 16.0 * big_r * shared / dy2;
    return q;
}

inline QuadSpectra quadrature_spectra(const SteadyState& ss, std::span<const double> frequencies) {
    QuadSpectra out;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        const double f = frequencies[i];
        if (!(f > 0.0) || (i > 0 && !(f > frequencies[i - 1])))
            throw Error(ErrorKind::invalid_argument, "noise_model",
                        "frequencies must be positive and strictly increasing");
        out.push_back(f, quadrature_point(ss, f));
    }
    return out;
}

/// Beamsplitter loss with vacuum admixture: S' = ηS + 1 − η, C' = ηC.
inline QuadPoint apply_detection_loss(const QuadPoint& q, double efficiency) {
    const double e = efficiency, v = 1.0 - efficiency;
    return {e * q.s_x1 + v, e * q.s_x2 + v, e * q.s_y1 + v, e * q.s_y2 + v, e * q.c_x, e * q.c_y};
}

inline QuadSpectra apply_detection_loss(const QuadSpectra& spec, double efficiency) {
    if (!(efficiency > 0.0 && efficiency <= 1.0))
        throw Error(ErrorKind::invalid_argument, "noise_model", "efficiency must lie in (0, 1]");
    QuadSpectra out;
    for (std::size_t i = 0; i < spec.size(); ++i)
        out.push_back(spec.frequencies[i], apply_detection_loss(spec.point(i), efficiency));
    return out;
}

/// Normalized variances of I_1 − g·I_2 (difference) and I_1 + g·I_2 (sum);
/// a coherent input gives 1 for both.
struct SumDiff {
    double var_diff, var_sum;
};

inline SumDiff sumdiff_variance(const QuadPoint& q, double gain) {
    const double norm = 1.0 + gain * gain;
    const double base = q.s_x1 + gain * gain * q.s_x2;
    return {(base - gain * q.c_x) / norm, (base + gain * q.c_x) / norm};
}

struct SumDiffSpectra {
    std::vector<double> var_diff, var_sum;
};

inline SumDiffSpectra sumdiff_variance(const QuadSpectra& spec, double gain) {
    if (!(gain > 0.0))
        throw Error(ErrorKind::invalid_argument, "noise_model", "gain must be > 0");
    SumDiffSpectra out;
    out.var_diff.reserve(spec.size());
    out.var_sum.reserve(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto sd = sumdiff_variance(spec.point(i), gain);
        out.var_diff.push_back(sd.var_diff);
        out.var_sum.push_back(sd.var_sum);
    }
    return out;
}

struct GainChoice {
    double gain = 1.0;
    bool degenerate = false;  // no interior minimum on g > 0
};

inline constexpr double max_search_gain = 10.0;

/// Minimizes the sum variance over g ∈ (0, max_search_gain]. The stationary
/// condition is C·g² − 2(S_2 − S_1)·g − C = 0; an interior minimum exists
/// only for C < 0. Otherwise the best value sits on a boundary of the range
/// (g → 0 gives S_1) and the choice is flagged degenerate.
inline GainChoice optimal_gain(const QuadPoint& q) {
    if (q.c_x < 0.0) {
        const double d = q.s_x2 - q.s_x1;
        const double g = -q.c_x / (d + std::hypot(d, q.c_x));
        if (g <= max_search_gain) return {g, false};
        return {max_search_gain, true};
    }
    const double at_max = sumdiff_variance(q, max_search_gain).var_sum;
    return {q.s_x1 <= at_max ? 0.0 : max_search_gain, true};
}

inline GainChoice optimal_gain(const QuadSpectra& spec, double freq) { return optimal_gain(spec.at(freq)); }

/// Post-beamsplitter witness variances, coherent baseline 2 each.
struct WitnessPair {
    double var_plus, var_minus;
};

inline WitnessPair witness_pair(const QuadPoint& q, double tol = 1e-9) {
    if (std::abs(q.s_x1 - q.s_x2) > tol || std::abs(q.s_y1 - q.s_y2) > tol)
        throw Error(ErrorKind::invalid_argument, "noise_model",
                    "witness relations require identical port spectra");
    return {2.0 * q.s_x1 + q.c_x, 2.0 * q.s_y1 - q.c_y};
}

struct WitnessPairSpectra {
    std::vector<double> var_plus, var_minus;
};

inline WitnessPairSpectra witness_pair(const QuadSpectra& spec) {
    WitnessPairSpectra out;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const auto w = witness_pair(spec.point(i));
        out.var_plus.push_back(w.var_plus);
        out.var_minus.push_back(w.var_minus);
    }
    return out;
}

struct DuanResult {
    double duan_sum, v, db;
    bool entangled;
};

inline DuanResult duan_sum(double var_plus, double var_minus) {
    if (!(var_plus >= 0.0 && var_minus >= 0.0))
        throw Error(ErrorKind::invalid_argument, "noise_model", "witness variances must be >= 0");
    const double s = var_plus + var_minus;
    return {s, s / 4.0, 10.0 * std::log10(s / 4.0), s < 4.0};
}

/// Derived scalars at one frequency. Field names follow the report format:
/// var_sum/var_diff are the witness variances (Δ|i₊|)², (Δ|i₋|)².
struct WitnessReport {
    double freq = 0.0;
    double var_sum = 2.0;
    double var_diff = 2.0;
    double duan_sum = 4.0;
    double v = 1.0;
    double db = 0.0;
    double intensity_sum_db = 0.0;
    double intensity_diff_db = 0.0;
    double optimal_gain = 1.0;
    bool entangled = false;

    struct Sigma {
        double var_sum = 0.0, var_diff = 0.0, duan_sum = 0.0, v = 0.0, db = 0.0;
        double intensity_sum_db = 0.0, intensity_diff_db = 0.0;
    } uncertainty;
};

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Model-derived report (zero uncertainty). Intensity figures use g = 1.
inline WitnessReport model_witness_report(const QuadPoint& q, double freq) {
    WitnessReport r;
    r.freq = freq;
    const auto w = witness_pair(q);
    const auto d = duan_sum(w.var_plus, w.var_minus);
    r.var_sum = w.var_plus;
    r.var_diff = w.var_minus;
    r.duan_sum = d.duan_sum;
    r.v = d.v;
    r.db = d.db;
    r.entangled = d.entangled;
    const auto sd = sumdiff_variance(q, 1.0);
    r.intensity_sum_db = to_db(sd.var_sum);
    r.intensity_diff_db = to_db(sd.var_diff);
    r.optimal_gain = optimal_gain(q).gain;
    return r;
}

inline WitnessReport model_witness_report(const QuadSpectra& spec, double freq) {
    return model_witness_report(spec.at(freq), freq);
}

/// Pump power → detected spectra at one frequency, with detection loss.
inline QuadPoint detected_point(const CavityParams& p, double freq) {
    return apply_detection_loss(quadrature_point(steady_state(p), freq), p.detection_efficiency());
}

} // namespace tpsh
