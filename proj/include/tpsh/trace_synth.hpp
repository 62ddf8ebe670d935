/*
 * trace_synth.hpp — two-channel photocurrent records with prescribed noise.
 *
 * Photocurrent fluctuations are Gaussian with a shot-noise variance per
 * sample equal to the channel's DC level (arbitrary current units). A
 * normalized 2×2 spectral matrix N(f) (shot noise = identity) is scaled by
 * the DC levels, electronic noise is added on the diagonal, and the result
 * is Cholesky-factored per frequency bin. Independent complex Gaussian
 * draws shaped by the factor and by the chain transfer function (AC
 * coupling × detector pole) are inverse transformed in 65536-sample blocks
 * (circulant embedding). Consecutive blocks overlap by 4096 samples and are
 * joined with a cos/sin crossfade, which keeps the variance exact and the
 * covariance stationary for correlation times far below the overlap.
 * The spur sinusoid and ADC quantization are applied to each finished chunk,
 * so a record never exists at full length in floating point.
 *
 * Every block draws from its own engine seeded by (seed, stream, block), so
 * a record is a pure function of its inputs.
 */
#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "tpsh/error.hpp"
#include "tpsh/fft.hpp"
#include "tpsh/noise_model.hpp"

namespace tpsh {

/// Detector, amplifier and digitizer. A zero ac_coupling_center or
/// detector_pole disables that stage.
struct DetectionChain {
    double sample_rate = 200e6;  // Hz
    int adc_bits = 14;
    double dc_current_1 = 1.0;   // nominal DC levels, arbitrary units
    double dc_current_2 = 1.0;
    double electronic_noise_rel = 0.1;  // relative to shot noise at the nominal DC
    double ac_coupling_center = 3.5e6;  // Hz
    double ac_coupling_q = 0.7;
    double detector_pole = 12e6;        // Hz
    double spur_freq = 15.8e6;          // Hz
    double spur_amplitude = 0.03;       // peak, in units of the nominal shot-noise rms

    static DetectionChain ideal() {
        DetectionChain c;
        c.electronic_noise_rel = 0.0;
        c.ac_coupling_center = 0.0;
        c.detector_pole = 0.0;
        c.spur_amplitude = 0.0;
        return c;
    }

    void validate() const {
        auto fail = [](const char* field, const std::string& why) {
            throw Error(ErrorKind::invalid_argument, "trace_synth",
                        std::string("chain.") + field + ": " + why);
        };
        if (!(sample_rate > 0.0)) fail("sample_rate", "must be > 0");
        if (adc_bits < 8 || adc_bits > 24) fail("adc_bits", "must lie in [8, 24]");
        if (!(dc_current_1 >= 0.0)) fail("dc_current_1", "must be >= 0");
        if (!(dc_current_2 >= 0.0)) fail("dc_current_2", "must be >= 0");
        if (!(electronic_noise_rel >= 0.0)) fail("electronic_noise_rel", "must be >= 0");
        if (!(ac_coupling_center >= 0.0)) fail("ac_coupling_center", "must be >= 0");
        if (!(ac_coupling_q > 0.0)) fail("ac_coupling_q", "must be > 0");
        if (!(detector_pole >= 0.0)) fail("detector_pole", "must be >= 0");
        if (!(spur_amplitude >= 0.0)) fail("spur_amplitude", "must be >= 0");
        if (!(spur_freq >= 0.0 && spur_freq < 0.5 * sample_rate))
            fail("spur_freq", "must lie in [0, sample_rate/2)");
    }

    /// AC-coupling bandpass (unit gain at center) times a single pole.
    std::complex<double> transfer(double f) const {
        using namespace std::complex_literals;
        std::complex<double> h = 1.0;
        if (ac_coupling_center > 0.0) {
            const double x = f / ac_coupling_center;
            const std::complex<double> jw = 1i * (x / ac_coupling_q);
            h *= jw / (1.0 - x * x + jw);
        }
        if (detector_pole > 0.0) h /= 1.0 + 1i * (f / detector_pole);
        return h;
    }

    /// Samples per record, round(duration × sample_rate).
    std::size_t samples_for(double duration) const {
        return static_cast<std::size_t>(std::llround(duration * sample_rate));
    }
};

struct TwoChannelTrace {
    std::vector<std::int32_t> samples_1, samples_2;  // ADC codes
    DetectionChain chain;
    double duration = 0.0;  // s
    std::uint64_t seed = 0;
    double dc_1 = 0.0, dc_2 = 0.0;  // DC levels of this record
    std::size_t clipped = 0;

    std::size_t size() const { return samples_1.size(); }
};

/// Pre-quantization record in current units.
struct AnalogTrace {
    std::vector<double> x1, x2;
};

/// Normalized (shot noise = identity) real symmetric spectral matrix.
struct SpectralMatrix {
    double a = 1.0, b = 0.0, c = 1.0;
};

using SpectralModel = std::function<SpectralMatrix(double freq)>;

namespace synth_detail {

inline constexpr std::size_t block_size = 65536;
inline constexpr std::size_t block_overlap = 4096;

enum Stream : std::uint32_t { intensity = 1, witness = 2, shot = 3, spur = 4, dark = 5 };

inline boost::random::mt19937_64 engine(std::uint64_t seed, std::uint32_t stream, std::uint64_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32)};
    return boost::random::mt19937_64(seq);
}

/// Per-bin shaping coefficients: x1 = k11·z1, x2 = k21·z1 + k22·z2.
struct BinFactor {
    std::complex<double> k11, k21, k22;
};

inline std::vector<BinFactor> factor_table(const SpectralModel& model, double dc_1, double dc_2,
                                           const DetectionChain& chain) {
    const std::size_t bins = block_size / 2 + 1;
    const double e1 = chain.electronic_noise_rel * chain.dc_current_1;
    const double e2 = chain.electronic_noise_rel * chain.dc_current_2;
    const double scale = 1.0 / std::sqrt(static_cast<double>(block_size));
    std::vector<BinFactor> table(bins);
    for (std::size_t j = 1; j < bins; ++j) {
        const double f = chain.sample_rate * static_cast<double>(j) / static_cast<double>(block_size);
        const SpectralMatrix n = model(f);
        const double det = n.a * n.c - n.b * n.b;
        const double tol = 1e-12 * std::max(1.0, n.a * n.c);
        if (!(n.a >= 0.0 && n.c >= 0.0 && det >= -tol)) {
            std::ostringstream os;
            os << "spectral matrix not positive semidefinite at " << f << " Hz (a=" << n.a << ", b=" << n.b
               << ", c=" << n.c << ")";
            throw Error(ErrorKind::not_factorizable, "trace_synth", os.str());
        }
        const double m11 = dc_1 * n.a + e1;
        const double m12 = std::sqrt(dc_1 * dc_2) * n.b;
        const double m22 = dc_2 * n.c + e2;
        double l11 = 0.0, l21 = 0.0, l22 = 0.0;
        if (m11 > 0.0) {
            l11 = std::sqrt(m11);
            l21 = m12 / l11;
            l22 = std::sqrt(std::max(0.0, m22 - l21 * l21));
        } else {
            l22 = std::sqrt(std::max(0.0, m22));
        }
        std::complex<double> h = chain.transfer(f) * scale;
        if (j == bins - 1) h = std::abs(h);  // Nyquist bin is real
        table[j] = {h * l11, h * l21, h * l22};
    }
    return table;
}

/// Mean of |H|² over the two-sided band, i.e. the variance gain for white input.
inline double white_noise_gain(const DetectionChain& chain) {
    const std::size_t bins = block_size / 2 + 1;
    double acc = 0.0;
    for (std::size_t j = 1; j < bins; ++j) {
        const double f = chain.sample_rate * static_cast<double>(j) / static_cast<double>(block_size);
        const double w = (j == bins - 1) ? 1.0 : 2.0;
        acc += w * std::norm(chain.transfer(f));
    }
    return acc / static_cast<double>(block_size);
}

/// Receives finished output in order: samples [start, start + x1.size()).
using ChunkSink = std::function<void(std::size_t start, std::span<double> x1, std::span<double> x2)>;

/// Streams a record of n samples per channel through `sink`, one hop
/// (block_size − block_overlap samples) at a time.
inline void generate(const std::vector<BinFactor>& table, std::size_t n, std::uint64_t seed, std::uint32_t stream,
                     const ChunkSink& sink) {
    if (n == 0) return;

    constexpr std::size_t hop = block_size - block_overlap;
    fft::RealInverse inv1(block_size), inv2(block_size);
    boost::random::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const std::size_t bins = table.size();

    std::vector<double> fade_out(block_overlap), fade_in(block_overlap);
    for (std::size_t i = 0; i < block_overlap; ++i) {
        const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(block_overlap);
        fade_out[i] = std::cos(0.5 * std::numbers::pi * u);
        fade_in[i] = std::sin(0.5 * std::numbers::pi * u);
    }
    std::vector<double> tail1(block_overlap), tail2(block_overlap);

    const std::size_t n_blocks = n <= block_size ? 1 : 1 + (n - block_size + hop - 1) / hop;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        auto eng = engine(seed, stream, b);
        auto s1 = inv1.spectrum();
        auto s2 = inv2.spectrum();
        s1[0] = s2[0] = 0.0;
        for (std::size_t j = 1; j < bins; ++j) {
            std::complex<double> z1(normal(eng), normal(eng));
            std::complex<double> z2(normal(eng), normal(eng));
            if (j == bins - 1) {
                z1 = std::sqrt(2.0) * z1.real();
                z2 = std::sqrt(2.0) * z2.real();
            }
            const auto& k = table[j];
            s1[j] = k.k11 * z1;
            s2[j] = k.k21 * z1 + k.k22 * z2;
        }
        inv1.execute();
        inv2.execute();

        const std::size_t start = b * hop;
        const auto r1 = inv1.real();
        const auto r2 = inv2.real();
        const bool last = b + 1 == n_blocks;
        const std::size_t len = last ? n - start : hop;
        if (b > 0)
            for (std::size_t i = 0; i < block_overlap; ++i) {
                r1[i] = fade_in[i] * r1[i] + tail1[i];
                r2[i] = fade_in[i] * r2[i] + tail2[i];
            }
        if (!last)
            for (std::size_t i = 0; i < block_overlap; ++i) {
                tail1[i] = fade_out[i] * r1[hop + i];
                tail2[i] = fade_out[i] * r2[hop + i];
            }
        sink(start, r1.first(len), r2.first(len));
    }
}

} // namespace synth_detail

/// ADC full scale (current units) = 6 × the rms of a shot-noise-limited
/// channel at the nominal DC, including electronic noise, filtering and spur.
inline double adc_full_scale(const DetectionChain& chain) {
    const double gain = synth_detail::white_noise_gain(chain);
    double var = 0.0;
    for (double dc : {chain.dc_current_1, chain.dc_current_2}) {
        const double spur = chain.spur_amplitude * std::sqrt(dc);
        var = std::max(var, dc * (1.0 + chain.electronic_noise_rel) * gain + 0.5 * spur * spur);
    }
    if (!(var > 0.0))
        throw Error(ErrorKind::invalid_argument, "trace_synth", "chain has no signal to set ADC full scale");
    return 6.0 * std::sqrt(var);
}

/// ADC codes per unit current.
inline double adc_codes_per_unit(const DetectionChain& chain) {
    return std::ldexp(1.0, chain.adc_bits - 1) / adc_full_scale(chain);
}

/// One-sided shot-noise PSD (current units²/Hz) of a channel at `dc`,
/// before the chain transfer function.
inline double shot_noise_psd(double dc, double sample_rate) { return 2.0 * dc / sample_rate; }

namespace synth_detail {

struct Spur {
    double a1 = 0.0, a2 = 0.0;  // peak amplitude per channel
    double omega = 0.0;         // rad/sample
    double phase = 0.0;

    bool active() const { return a1 != 0.0 || a2 != 0.0; }

    /// Adds the sinusoid to samples [start, start + x1.size()). The phasor is
    /// re-anchored exactly at each chunk and rotated within it.
    void add(std::size_t start, std::span<double> x1, std::span<double> x2) const {
        if (!active()) return;
        std::complex<double> z = std::polar(1.0, omega * static_cast<double>(start) + phase);
        const std::complex<double> step = std::polar(1.0, omega);
        for (std::size_t i = 0; i < x1.size(); ++i) {
            x1[i] += a1 * z.imag();
            x2[i] += a2 * z.imag();
            z *= step;
        }
    }
};

/// Spur with a seed-dependent phase; its amplitude scales with each
/// channel's DC level.
inline Spur make_spur(const DetectionChain& chain, double dc_1, double dc_2, std::uint64_t seed) {
    Spur s;
    if (chain.spur_amplitude == 0.0) return s;
    auto eng = engine(seed, spur, 0);
    s.phase = boost::random::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(eng);
    auto amp = [&](double dc, double nominal) {
        return nominal > 0.0 ? chain.spur_amplitude * std::sqrt(nominal) * (dc / nominal) : 0.0;
    };
    s.a1 = amp(dc_1, chain.dc_current_1);
    s.a2 = amp(dc_2, chain.dc_current_2);
    s.omega = 2.0 * std::numbers::pi * chain.spur_freq / chain.sample_rate;
    return s;
}

/// Rounds to ADC codes, saturating at the rails; returns the number of
/// clipped samples.
class Quantizer {
public:
    explicit Quantizer(const DetectionChain& chain)
        : k_(adc_codes_per_unit(chain)),
          lo_(-(std::int64_t{1} << (chain.adc_bits - 1))),
          hi_((std::int64_t{1} << (chain.adc_bits - 1)) - 1) {}

    std::size_t operator()(std::span<const double> x, std::span<std::int32_t> out) const {
        std::size_t clipped = 0;
        const double lo = static_cast<double>(lo_), hi = static_cast<double>(hi_);
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double v = x[i] * k_;
            if (v > lo - 0.5 && v < hi + 0.5) {
                // Round half away from zero.
                out[i] = static_cast<std::int32_t>(v + (v < 0.0 ? -0.5 : 0.5));
            } else {
                ++clipped;
                out[i] = static_cast<std::int32_t>(v > 0.0 ? hi_ : lo_);
            }
        }
        return clipped;
    }

private:
    double k_;
    std::int64_t lo_, hi_;
};

inline void check_synthesis_inputs(const DetectionChain& chain, double dc_1, double dc_2, double duration) {
    chain.validate();
    if (!(duration >= 0.0))
        throw Error(ErrorKind::invalid_argument, "trace_synth", "duration must be >= 0");
    if (!(dc_1 >= 0.0 && dc_2 >= 0.0))
        throw Error(ErrorKind::invalid_argument, "trace_synth", "dc currents must be >= 0");
}

} // namespace synth_detail

/// Adds the spur sinusoid of `chain` to a whole analog record.
inline void inject_spur(AnalogTrace& t, const DetectionChain& chain, double dc_1, double dc_2, std::uint64_t seed) {
    synth_detail::make_spur(chain, dc_1, dc_2, seed).add(0, t.x1, t.x2);
}

inline TwoChannelTrace quantize(const AnalogTrace& a, const DetectionChain& chain) {
    const synth_detail::Quantizer q(chain);
    TwoChannelTrace t;
    t.chain = chain;
    t.samples_1.resize(a.x1.size());
    t.samples_2.resize(a.x2.size());
    t.clipped = q(a.x1, t.samples_1) + q(a.x2, t.samples_2);
    return t;
}

/// Everything up to (not including) quantization.
inline AnalogTrace synthesize_analog(const SpectralModel& model, double dc_1, double dc_2,
                                     const DetectionChain& chain, double duration, std::uint64_t seed,
                                     std::uint32_t stream) {
    synth_detail::check_synthesis_inputs(chain, dc_1, dc_2, duration);
    const auto table = synth_detail::factor_table(model, dc_1, dc_2, chain);
    const auto spur = synth_detail::make_spur(chain, dc_1, dc_2, seed);
    const std::size_t n = chain.samples_for(duration);
    AnalogTrace a;
    a.x1.resize(n);
    a.x2.resize(n);
    synth_detail::generate(table, n, seed, stream, [&](std::size_t start, std::span<double> x1, std::span<double> x2) {
        spur.add(start, x1, x2);
        std::copy(x1.begin(), x1.end(), a.x1.begin() + static_cast<std::ptrdiff_t>(start));
        std::copy(x2.begin(), x2.end(), a.x2.begin() + static_cast<std::ptrdiff_t>(start));
    });
    return a;
}

namespace synth_detail {

/// Synthesis straight to ADC codes; identical to quantize(synthesize_analog(…))
/// without holding the analog record.
inline TwoChannelTrace synthesize_codes(const SpectralModel& model, double dc_1, double dc_2,
                                        const DetectionChain& chain, double duration, std::uint64_t seed,
                                        std::uint32_t stream) {
    check_synthesis_inputs(chain, dc_1, dc_2, duration);
    const auto table = factor_table(model, dc_1, dc_2, chain);
    const auto spur = make_spur(chain, dc_1, dc_2, seed);
    const Quantizer quantizer(chain);
    const std::size_t n = chain.samples_for(duration);
    TwoChannelTrace t;
    t.chain = chain;
    t.samples_1.resize(n);
    t.samples_2.resize(n);
    generate(table, n, seed, stream, [&](std::size_t start, std::span<double> x1, std::span<double> x2) {
        spur.add(start, x1, x2);
        t.clipped += quantizer(x1, std::span(t.samples_1).subspan(start, x1.size()));
        t.clipped += quantizer(x2, std::span(t.samples_2).subspan(start, x2.size()));
    });
    t.duration = duration;
    t.seed = seed;
    t.dc_1 = dc_1;
    t.dc_2 = dc_2;
    return t;
}

inline void require_coverage(const QuadSpectra& spec, double min_duration, double duration) {
    if (spec.size() < 2 || spec.frequencies.front() > 0.5e6 || spec.frequencies.back() < 20e6)
        throw Error(ErrorKind::invalid_argument, "trace_synth", "spectra must cover [0.5, 20] MHz");
    if (!(duration >= min_duration)) {
        std::ostringstream os;
        os << "duration " << duration << " s below minimum " << min_duration << " s";
        throw Error(ErrorKind::invalid_argument, "trace_synth", os.str());
    }
}

} // namespace synth_detail

inline constexpr double min_synthesis_duration = 10e-3;

/// Amplitude-quadrature sector of the two outputs: N = [[s_x1, c_x/2], [c_x/2, s_x2]].
inline SpectralModel intensity_model(const QuadSpectra& spec) {
    return [&spec](double f) {
        const QuadPoint q = spec.at(f, true);
        return SpectralMatrix{q.s_x1, 0.5 * q.c_x, q.s_x2};
    };
}

/// Detectors behind the 50/50 beamsplitter: with u = i_a + i_b carrying
/// 2S_X + C_X and w = i_a − i_b carrying 2S_Y − C_Y (u, w uncorrelated),
/// N = ¼[[u + w, u − w], [u − w, u + w]].
inline SpectralModel witness_model(const QuadSpectra& spec) {
    return [&spec](double f) {
        const auto w = witness_pair(spec.at(f, true));
        return SpectralMatrix{0.25 * (w.var_plus + w.var_minus), 0.25 * (w.var_plus - w.var_minus),
                              0.25 * (w.var_plus + w.var_minus)};
    };
}

/// Intensity-correlation detectors D_1, D_2 at the chain's DC levels.
inline TwoChannelTrace synthesize(const QuadSpectra& spec, const DetectionChain& chain, double duration,
                                  std::uint64_t seed) {
    synth_detail::require_coverage(spec, min_synthesis_duration, duration);
    return synth_detail::synthesize_codes(intensity_model(spec), chain.dc_current_1, chain.dc_current_2, chain,
                                          duration, seed, synth_detail::intensity);
}

inline TwoChannelTrace witness_arm_traces(const QuadSpectra& spec, const DetectionChain& chain, double duration,
                                          std::uint64_t seed) {
    synth_detail::require_coverage(spec, min_synthesis_duration, duration);
    if (!spec.is_symmetric())
        throw Error(ErrorKind::invalid_argument, "trace_synth", "witness synthesis requires symmetric spectra");
    return synth_detail::synthesize_codes(witness_model(spec), chain.dc_current_1, chain.dc_current_2, chain,
                                          duration, seed, synth_detail::witness);
}

namespace synth_detail {

inline TwoChannelTrace uncorrelated_pair(double dc_1, double dc_2, const DetectionChain& chain, double duration,
                                         std::uint64_t seed, std::uint32_t stream) {
    if (!(duration >= min_synthesis_duration))
        throw Error(ErrorKind::invalid_argument, "trace_synth", "duration below 10 ms");
    const SpectralModel coherent = [](double) { return SpectralMatrix{}; };
    return synthesize_codes(coherent, dc_1, dc_2, chain, duration, seed, stream);
}

} // namespace synth_detail

/// Two independent shot-noise-limited channels at the given DC levels;
/// electronic noise and ADC scale stay those of the chain's nominal DCs.
inline TwoChannelTrace shot_noise_pair(double dc_1, double dc_2, const DetectionChain& chain, double duration,
                                       std::uint64_t seed) {
    return synth_detail::uncorrelated_pair(dc_1, dc_2, chain, duration, seed, synth_detail::shot);
}

/// Electronic noise only (no light on either detector).
inline TwoChannelTrace dark_trace(const DetectionChain& chain, double duration, std::uint64_t seed) {
    return synth_detail::uncorrelated_pair(0.0, 0.0, chain, duration, seed, synth_detail::dark);
}

} // namespace tpsh
