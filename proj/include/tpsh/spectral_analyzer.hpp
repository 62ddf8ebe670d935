/*
 * spectral_analyzer.hpp — noise spectra from two-channel records.
 *
 * Welch averaging with a root-Hann (sine) window and 50% overlap. The
 * squared window of overlapping segments sums to one, so the estimate obeys
 * Parseval against the record variance. One-sided PSDs are in units²/Hz;
 * RBW is sample_rate / segment_length.
 *
 * Statistical errors account for both correlations the window introduces:
 * between overlapping segments (which inflates the per-bin variance above
 * power²/K) and between neighbouring frequency bins (which matters when
 * band-averaging). Both are computed from the window itself.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "tpsh/error.hpp"
#include "tpsh/fft.hpp"
#include "tpsh/noise_model.hpp"
#include "tpsh/trace_synth.hpp"

namespace tpsh {

inline constexpr std::size_t max_bin_lag = 3;

struct NoiseSpectrum {
    std::vector<double> frequencies;  // Hz
    std::vector<double> power;
    std::vector<double> sigma;        // one-sigma per bin
    double rbw = 0.0;
    std::size_t n_averages = 0;
    /// Correlation between bins i and i+lag of the estimate, lag = 0..3.
    std::array<double, max_bin_lag + 1> bin_correlation{1.0, 0.0, 0.0, 0.0};

    std::size_t size() const { return frequencies.size(); }
};

enum class Combine { sum, difference };

/// Welch cross-spectral matrix of two channels.
struct CrossSpectrum {
    double sample_rate = 0.0;
    double rbw = 0.0;
    std::size_t segment_length = 0;
    std::size_t n_averages = 0;
    double relative_sigma = 0.0;  // sigma/power of every bin
    std::array<double, max_bin_lag + 1> bin_correlation{1.0, 0.0, 0.0, 0.0};
    std::vector<double> frequencies;
    std::vector<double> p11, p22;
    std::vector<std::complex<double>> p12;

    /// PSD of x1 ± g·x2.
    NoiseSpectrum combine(double gain, Combine mode) const {
        const double s = mode == Combine::sum ? 1.0 : -1.0;
        NoiseSpectrum out = skeleton();
        for (std::size_t j = 0; j < frequencies.size(); ++j) {
            const double p = p11[j] + gain * gain * p22[j] + s * 2.0 * gain * p12[j].real();
            out.power[j] = std::max(0.0, p);
            out.sigma[j] = out.power[j] * relative_sigma;
        }
        return out;
    }

    NoiseSpectrum channel(int k) const {
        NoiseSpectrum out = skeleton();
        const auto& p = k == 1 ? p11 : p22;
        for (std::size_t j = 0; j < frequencies.size(); ++j) {
            out.power[j] = p[j];
            out.sigma[j] = p[j] * relative_sigma;
        }
        return out;
    }

private:
    NoiseSpectrum skeleton() const {
        NoiseSpectrum out;
        out.frequencies = frequencies;
        out.power.resize(frequencies.size());
        out.sigma.resize(frequencies.size());
        out.rbw = rbw;
        out.n_averages = n_averages;
        out.bin_correlation = bin_correlation;
        return out;
    }
};

/// Even segment length whose RBW is closest to the request.
inline std::size_t segment_length_for(double sample_rate, double rbw) {
    if (!(rbw > 0.0 && sample_rate > 0.0))
        throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "rbw and sample rate must be > 0");
    const auto half = static_cast<std::size_t>(std::llround(sample_rate / (2.0 * rbw)));
    if (half < 2) throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "rbw too coarse for sample rate");
    return 2 * half;
}

/// Streaming Welch estimator. Feed chunks of any size; segments of length
/// L advance by L/2. Offsets are subtracted from every sample (DC removal).
class WelchAccumulator {
public:
    WelchAccumulator(double sample_rate, std::size_t segment_length, bool two_channels = true,
                     double offset_1 = 0.0, double offset_2 = 0.0)
        : fs_(sample_rate), len_(segment_length), two_(two_channels), off1_(offset_1), off2_(offset_2),
          fwd1_(segment_length), fwd2_(two_channels ? segment_length : 2), window_(segment_length),
          a11_(segment_length / 2 + 1, 0.0), a22_(segment_length / 2 + 1, 0.0),
          a12_(segment_length / 2 + 1, 0.0) {
        if (len_ < 4 || len_ % 2 != 0)
            throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "segment length must be even and >= 4");
        for (std::size_t n = 0; n < len_; ++n)
            window_[n] = std::sin(std::numbers::pi * (static_cast<double>(n) + 0.5) / static_cast<double>(len_));
    }

    template <class T>
    void feed(std::span<const T> x1, std::span<const T> x2 = {}) {
        if (two_ && x1.size() != x2.size())
            throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "channel lengths differ");
        const std::size_t hop = len_ / 2;
        // Whole segments straight from the input when nothing is pending.
        std::size_t pos = 0;
        if (pending1_.empty()) {
            for (; pos + len_ <= x1.size(); pos += hop)
                process(x1.subspan(pos, len_), two_ ? x2.subspan(pos, len_) : std::span<const T>{});
        }
        for (std::size_t i = pos; i < x1.size(); ++i) {
            pending1_.push_back(static_cast<double>(x1[i]));
            if (two_) pending2_.push_back(static_cast<double>(x2[i]));
            if (pending1_.size() == len_) {
                process(std::span<const double>(pending1_),
                        two_ ? std::span<const double>(pending2_) : std::span<const double>{});
                pending1_.erase(pending1_.begin(), pending1_.begin() + static_cast<std::ptrdiff_t>(hop));
                if (two_) pending2_.erase(pending2_.begin(), pending2_.begin() + static_cast<std::ptrdiff_t>(hop));
            }
        }
    }

    std::size_t segments() const { return segments_; }

    CrossSpectrum result() const {
        if (segments_ == 0) throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "no complete segment");
        CrossSpectrum cs;
        cs.sample_rate = fs_;
        cs.segment_length = len_;
        cs.rbw = fs_ / static_cast<double>(len_);
        cs.n_averages = segments_;
        const double w2 = std::inner_product(window_.begin(), window_.end(), window_.begin(), 0.0);
        const std::size_t bins = len_ / 2 + 1;
        const double norm = 1.0 / (fs_ * w2 * static_cast<double>(segments_));
        cs.frequencies.resize(bins);
        cs.p11.resize(bins);
        cs.p22.resize(bins);
        cs.p12.resize(bins);
        for (std::size_t j = 0; j < bins; ++j) {
            const double one_sided = (j == 0 || j == bins - 1) ? 1.0 : 2.0;
            cs.frequencies[j] = fs_ * static_cast<double>(j) / static_cast<double>(len_);
            cs.p11[j] = one_sided * norm * a11_[j];
            cs.p22[j] = one_sided * norm * a22_[j];
            cs.p12[j] = one_sided * norm * a12_[j];
        }

        // Correlation of overlapping segment periodograms for white noise.
        double cross = 0.0;
        for (std::size_t n = 0; n < len_ / 2; ++n) cross += window_[n] * window_[n + len_ / 2];
        const double rho = (cross / w2) * (cross / w2);
        const double k = static_cast<double>(segments_);
        cs.relative_sigma = std::sqrt((1.0 + 2.0 * rho * (k - 1.0) / k) / k);

        // Correlation between bins j and j+lag: |Σ w² e^{−2πi·lag·n/L}|² / (Σ w²)².
        for (std::size_t lag = 0; lag <= max_bin_lag; ++lag) {
            std::complex<double> acc = 0.0;
            for (std::size_t n = 0; n < len_; ++n)
                acc += window_[n] * window_[n] *
                       std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(lag * n) / static_cast<double>(len_));
            cs.bin_correlation[lag] = std::norm(acc) / (w2 * w2);
        }
        return cs;
    }

private:
    template <class T>
    void process(std::span<const T> s1, std::span<const T> s2) {
        auto r1 = fwd1_.real();
        for (std::size_t n = 0; n < len_; ++n) r1[n] = (static_cast<double>(s1[n]) - off1_) * window_[n];
        fwd1_.execute();
        const auto f1 = fwd1_.spectrum();
        if (two_) {
            auto r2 = fwd2_.real();
            for (std::size_t n = 0; n < len_; ++n) r2[n] = (static_cast<double>(s2[n]) - off2_) * window_[n];
            fwd2_.execute();
            const auto f2 = fwd2_.spectrum();
            for (std::size_t j = 0; j < f1.size(); ++j) {
                a11_[j] += std::norm(f1[j]);
                a22_[j] += std::norm(f2[j]);
                a12_[j] += f1[j] * std::conj(f2[j]);
            }
        } else {
            for (std::size_t j = 0; j < f1.size(); ++j) a11_[j] += std::norm(f1[j]);
        }
        ++segments_;
    }

    double fs_;
    std::size_t len_;
    bool two_;
    double off1_, off2_;
    fft::RealForward fwd1_, fwd2_;
    std::vector<double> window_;
    std::vector<double> a11_, a22_;
    std::vector<std::complex<double>> a12_;
    std::vector<double> pending1_, pending2_;
    std::size_t segments_ = 0;
};

inline constexpr std::size_t min_welch_averages = 10;

namespace analyzer_detail {

template <class T>
double mean(std::span<const T> x) {
    long double acc = 0.0L;
    for (const auto& v : x) acc += static_cast<long double>(v);
    return x.empty() ? 0.0 : static_cast<double>(acc / static_cast<long double>(x.size()));
}

inline void require_length(std::size_t n, std::size_t segment_length) {
    const std::size_t needed = (min_welch_averages + 1) * segment_length / 2;
    if (n < needed) {
        std::ostringstream os;
        os << "trace too short for requested rbw: " << n << " samples, need " << needed << " for "
           << min_welch_averages << " averages";
        throw Error(ErrorKind::invalid_argument, "spectral_analyzer", os.str());
    }
}

} // namespace analyzer_detail

/// Cross-spectral matrix of two equal-length channels after DC removal.
template <class T>
CrossSpectrum cross_spectrum(std::span<const T> x1, std::span<const T> x2, double sample_rate, double rbw) {
    const std::size_t len = segment_length_for(sample_rate, rbw);
    analyzer_detail::require_length(x1.size(), len);
    WelchAccumulator acc(sample_rate, len, true, analyzer_detail::mean(x1), analyzer_detail::mean(x2));
    acc.feed(x1, x2);
    return acc.result();
}

inline CrossSpectrum cross_spectrum(const TwoChannelTrace& t, double rbw) {
    return cross_spectrum(std::span<const std::int32_t>(t.samples_1), std::span<const std::int32_t>(t.samples_2),
                          t.chain.sample_rate, rbw);
}

template <class T>
NoiseSpectrum welch_spectrum(std::span<const T> x, double sample_rate, double rbw) {
    const std::size_t len = segment_length_for(sample_rate, rbw);
    analyzer_detail::require_length(x.size(), len);
    WelchAccumulator acc(sample_rate, len, false, analyzer_detail::mean(x));
    acc.feed(x);
    return acc.result().channel(1);
}

inline NoiseSpectrum welch_spectrum(const std::vector<double>& x, double sample_rate, double rbw) {
    return welch_spectrum(std::span<const double>(x), sample_rate, rbw);
}

/// PSD of samples_1 ∓ g·samples_2.
inline NoiseSpectrum combined_spectrum(const TwoChannelTrace& t, double gain, Combine mode, double rbw) {
    return cross_spectrum(t, rbw).combine(gain, mode);
}

inline constexpr double default_reference_gain = 0.95;

/// Shot-noise level from the difference of two uncorrelated channels,
/// (Δ|i_1 − g·i_2|)². A gain below one lowers the reference, which can only
/// understate non-classical effects.
inline NoiseSpectrum shot_noise_reference(const TwoChannelTrace& t, double gain = default_reference_gain,
                                          double rbw = 100e3) {
    return combined_spectrum(t, gain, Combine::difference, rbw);
}

namespace analyzer_detail {

inline void require_same_grid(const NoiseSpectrum& a, const NoiseSpectrum& b) {
    if (a.size() != b.size() || a.rbw != b.rbw || a.frequencies != b.frequencies)
        throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "spectra on different frequency grids");
}

} // namespace analyzer_detail

/// Power subtraction of the dark (electronic) spectrum, floored at zero.
inline NoiseSpectrum correct_electronic_noise(const NoiseSpectrum& signal, const NoiseSpectrum& dark) {
    analyzer_detail::require_same_grid(signal, dark);
    NoiseSpectrum out = signal;
    for (std::size_t j = 0; j < signal.size(); ++j) {
        out.power[j] = std::max(0.0, signal.power[j] - dark.power[j]);
        out.sigma[j] = std::hypot(signal.sigma[j], dark.sigma[j]);
    }
    return out;
}

/// scale × signal / reference per bin, with independent relative errors.
inline NoiseSpectrum normalize(const NoiseSpectrum& signal, const NoiseSpectrum& reference, double scale = 1.0) {
    analyzer_detail::require_same_grid(signal, reference);
    NoiseSpectrum out = signal;
    for (std::size_t j = 0; j < signal.size(); ++j) {
        const double q = reference.power[j];
        if (!(q > 0.0)) {
            out.power[j] = std::numeric_limits<double>::quiet_NaN();
            out.sigma[j] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double r = scale * signal.power[j] / q;
        const double rel_s = signal.power[j] > 0.0 ? signal.sigma[j] / signal.power[j] : 0.0;
        out.power[j] = r;
        out.sigma[j] = std::abs(r) * std::hypot(rel_s, reference.sigma[j] / q);
    }
    return out;
}

struct BandValue {
    double value = 0.0;
    double sigma = 0.0;
    std::size_t bins = 0;
};

/// Bins in [lo, hi] minus the bin nearest `exclude_freq` and its two
/// neighbours (pass a negative value to exclude nothing).
inline std::vector<std::size_t> band_bins(const NoiseSpectrum& s, double lo, double hi, double exclude_freq = -1.0) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double f = s.frequencies[j];
        if (f < lo || f > hi) continue;
        if (exclude_freq >= 0.0 && std::abs(f - exclude_freq) <= 1.5 * s.rbw) continue;
        idx.push_back(j);
    }
    if (idx.empty()) {
        std::ostringstream os;
        os << "no analysis bins in band [" << lo << ", " << hi << "] Hz";
        throw Error(ErrorKind::invalid_argument, "spectral_analyzer", os.str());
    }
    return idx;
}

/// Mean over the selected bins; the error includes neighbouring-bin correlation.
inline BandValue band_average(const NoiseSpectrum& s, std::span<const std::size_t> idx) {
    BandValue out;
    out.bins = idx.size();
    double var = 0.0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        out.value += s.power[idx[a]];
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const std::size_t lag = idx[a] > idx[b] ? idx[a] - idx[b] : idx[b] - idx[a];
            if (lag <= max_bin_lag) var += s.bin_correlation[lag] * s.sigma[idx[a]] * s.sigma[idx[b]];
        }
    }
    const double m = static_cast<double>(idx.size());
    out.value /= m;
    out.sigma = std::sqrt(var) / m;
    return out;
}

inline BandValue band_average(const NoiseSpectrum& s, double lo, double hi, double exclude_freq = -1.0) {
    const auto idx = band_bins(s, lo, hi, exclude_freq);
    return band_average(s, idx);
}

/// Channel-1 / channel-2 DC ratio, clamped to [0.5, 2].
inline double gain_balance_from_dc(const TwoChannelTrace& t) {
    if (!(t.dc_1 > 0.0 && t.dc_2 > 0.0))
        throw Error(ErrorKind::invalid_argument, "spectral_analyzer", "gain balance needs nonzero DC on both channels");
    return std::clamp(t.dc_1 / t.dc_2, 0.5, 2.0);
}

struct AnalysisOptions {
    double rbw = 100e3;
    double band_lo = 4.5e6;
    double band_hi = 5.5e6;
    double reference_gain = 1.0;  // g in (Δ|i_1 − g·i_2|)²
    double signal_gain = 1.0;     // g in I_1 ∓ g·I_2
    double exclude_freq = 15.8e6; // spur

    double center() const { return 0.5 * (band_lo + band_hi); }
};

/// Normalized Eq.-(1)-style spectra of an intensity-correlation record.
struct IntensityAnalysis {
    NoiseSpectrum sum, difference;  // shot-noise units
    BandValue var_sum, var_diff;
    double optimal_gain = 1.0;
};

namespace analyzer_detail {

inline NoiseSpectrum corrected(const CrossSpectrum& cs, double gain, Combine mode, const CrossSpectrum* dark) {
    auto s = cs.combine(gain, mode);
    if (dark) s = correct_electronic_noise(s, dark->combine(gain, mode));
    return s;
}

} // namespace analyzer_detail

/// Cross-spectral matrix of a record plus the DC levels it was taken at.
struct MeasuredRecord {
    CrossSpectrum spectra;
    double dc_1 = 0.0, dc_2 = 0.0;
};

inline MeasuredRecord measure(const TwoChannelTrace& t, double rbw) { return {cross_spectrum(t, rbw), t.dc_1, t.dc_2}; }

/// Sum and difference of I_1, I_2 relative to the shot-noise reference
/// record (same chain, uncorrelated channels), optionally dark-corrected.
/// Without a reference record the difference spectrum of the signal itself
/// serves as the shot-noise level.
inline IntensityAnalysis analyze_intensity(const MeasuredRecord& signal, const MeasuredRecord* reference,
                                           const AnalysisOptions& opt, const MeasuredRecord* dark = nullptr) {
    const auto& cs = signal.spectra;
    const auto& cr = reference ? reference->spectra : cs;
    const double ref_gain = reference ? opt.reference_gain : opt.signal_gain;
    const double ref_dc_1 = reference ? reference->dc_1 : signal.dc_1;
    const double ref_dc_2 = reference ? reference->dc_2 : signal.dc_2;
    const CrossSpectrum* dp = dark ? &dark->spectra : nullptr;

    const auto qnl = analyzer_detail::corrected(cr, ref_gain, Combine::difference, dp);
    IntensityAnalysis out;
    out.sum = normalize(analyzer_detail::corrected(cs, opt.signal_gain, Combine::sum, dp), qnl);
    out.difference = normalize(analyzer_detail::corrected(cs, opt.signal_gain, Combine::difference, dp), qnl);
    const auto idx = band_bins(out.sum, opt.band_lo, opt.band_hi, opt.exclude_freq);
    out.var_sum = band_average(out.sum, idx);
    out.var_diff = band_average(out.difference, idx);

    // Band-averaged, dark-corrected normalized matrix for the optimal gain.
    QuadPoint q;
    double n11 = 0.0, n22 = 0.0, n12 = 0.0, nq = 0.0;
    for (auto j : idx) {
        n11 += cs.p11[j] - (dp ? dp->p11[j] : 0.0);
        n22 += cs.p22[j] - (dp ? dp->p22[j] : 0.0);
        n12 += cs.p12[j].real() - (dp ? dp->p12[j].real() : 0.0);
        nq += qnl.power[j];
    }
    // Per-channel shot level: the reference carries dc_1 + g²·dc_2 in shot units.
    const double unit = nq / (ref_dc_1 + ref_gain * ref_gain * ref_dc_2);
    if (unit > 0.0 && signal.dc_1 > 0.0 && signal.dc_2 > 0.0) {
        q.s_x1 = n11 / (unit * signal.dc_1);
        q.s_x2 = n22 / (unit * signal.dc_2);
        q.c_x = 2.0 * n12 / (unit * std::sqrt(signal.dc_1 * signal.dc_2));
        out.optimal_gain = optimal_gain(q).gain * std::sqrt(signal.dc_1 / signal.dc_2);
    }
    return out;
}

inline IntensityAnalysis analyze_intensity(const TwoChannelTrace& signal, const TwoChannelTrace* reference,
                                           const AnalysisOptions& opt, const TwoChannelTrace* dark = nullptr) {
    const auto ms = measure(signal, opt.rbw);
    std::optional<MeasuredRecord> mr, md;
    if (reference) mr = measure(*reference, opt.rbw);
    if (dark) md = measure(*dark, opt.rbw);
    return analyze_intensity(ms, mr ? &*mr : nullptr, opt, md ? &*md : nullptr);
}

/// Witness variances from the D_a/D_b record, normalized so coherent beams
/// give 2 each: var_± = 2·PSD(i_a ± i_b) / (Δ|i_1 − g·i_2|)².
inline WitnessReport witness_report(const MeasuredRecord& ab, const MeasuredRecord& reference,
                                    const AnalysisOptions& opt, const MeasuredRecord* dark = nullptr,
                                    const MeasuredRecord* intensity = nullptr) {
    const auto& cab = ab.spectra;
    const auto& cr = reference.spectra;
    const CrossSpectrum* dp = dark ? &dark->spectra : nullptr;

    const auto qnl = analyzer_detail::corrected(cr, opt.reference_gain, Combine::difference, dp);
    const auto plus = analyzer_detail::corrected(cab, 1.0, Combine::sum, dp);
    const auto minus = analyzer_detail::corrected(cab, 1.0, Combine::difference, dp);
    const auto idx = band_bins(qnl, opt.band_lo, opt.band_hi, opt.exclude_freq);
    for (auto j : idx)
        if (!(qnl.power[j] > 0.0)) {
            std::ostringstream os;
            os << "shot-noise reference has zero power at " << qnl.frequencies[j] << " Hz";
            throw Error(ErrorKind::invalid_argument, "spectral_analyzer", os.str());
        }

    const auto vp = normalize(plus, qnl, 2.0);
    const auto vm = normalize(minus, qnl, 2.0);
    // Duan sum per bin; plus and minus share the reference bin.
    NoiseSpectrum duan = vp;
    for (std::size_t j = 0; j < duan.size(); ++j) {
        const double q = qnl.power[j];
        if (!(q > 0.0)) continue;
        const double d = vp.power[j] + vm.power[j];
        duan.power[j] = d;
        duan.sigma[j] = std::sqrt(std::pow(2.0 / q, 2) * (plus.sigma[j] * plus.sigma[j] + minus.sigma[j] * minus.sigma[j]) +
                                  std::pow(d / q * qnl.sigma[j], 2));
    }

    const auto bp = band_average(vp, idx);
    const auto bm = band_average(vm, idx);
    const auto bd = band_average(duan, idx);

    WitnessReport r;
    r.freq = opt.center();
    r.var_sum = bp.value;
    r.var_diff = bm.value;
    r.duan_sum = r.var_sum + r.var_diff;
    r.v = r.duan_sum / 4.0;
    r.db = to_db(r.v);
    r.entangled = r.duan_sum < 4.0;
    r.uncertainty.var_sum = bp.sigma;
    r.uncertainty.var_diff = bm.sigma;
    r.uncertainty.duan_sum = bd.sigma;
    r.uncertainty.v = bd.sigma / 4.0;
    r.uncertainty.db = 10.0 / std::numbers::ln10 * bd.sigma / r.duan_sum;

    if (intensity) {
        const auto ia = analyze_intensity(*intensity, &reference, opt, dark);
        r.intensity_sum_db = to_db(ia.var_sum.value);
        r.intensity_diff_db = to_db(ia.var_diff.value);
        r.uncertainty.intensity_sum_db = 10.0 / std::numbers::ln10 * ia.var_sum.sigma / ia.var_sum.value;
        r.uncertainty.intensity_diff_db = 10.0 / std::numbers::ln10 * ia.var_diff.sigma / ia.var_diff.value;
        r.optimal_gain = ia.optimal_gain;
    } else {
        r.intensity_sum_db = std::numeric_limits<double>::quiet_NaN();
        r.intensity_diff_db = std::numeric_limits<double>::quiet_NaN();
        r.optimal_gain = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

inline WitnessReport witness_from_traces(const TwoChannelTrace& ab, const TwoChannelTrace& reference,
                                         const AnalysisOptions& opt, const TwoChannelTrace* dark = nullptr,
                                         const TwoChannelTrace* intensity = nullptr) {
    std::optional<MeasuredRecord> md, mi;
    if (dark) md = measure(*dark, opt.rbw);
    if (intensity) mi = measure(*intensity, opt.rbw);
    return witness_report(measure(ab, opt.rbw), measure(reference, opt.rbw), opt, md ? &*md : nullptr,
                          mi ? &*mi : nullptr);
}

} // namespace tpsh
