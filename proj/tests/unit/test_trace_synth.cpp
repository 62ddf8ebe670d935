// Two-channel record synthesis: determinism, normalization, chain
// bookkeeping, and statistical recovery of the generating spectra.
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tpsh/pipeline.hpp"
#include "tpsh/spectral_analyzer.hpp"
#include "tpsh/trace_synth.hpp"

using namespace tpsh;

namespace {

constexpr double short_record = 20e-3;

QuadSpectra coherent_spectra() {
    QuadSpectra s;
    for (double f : log_frequency_grid()) s.push_back(f, QuadPoint{});
    return s;
}

QuadSpectra operating_spectra(double pump = 0.034) {
    CavityParams p;
    p.pump_power = pump;
    return detected_spectra(p);
}

/// Shot-noise PSD of a channel at `dc`, in codes²/Hz of the trace's ADC.
double shot_codes(const TwoChannelTrace& t, double dc) {
    const double k = adc_codes_per_unit(t.chain);
    return shot_noise_psd(dc, t.chain.sample_rate) * k * k;
}

std::vector<std::size_t> bins_between(const CrossSpectrum& cs, double lo, double hi) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < cs.frequencies.size(); ++j)
        if (cs.frequencies[j] >= lo && cs.frequencies[j] <= hi) idx.push_back(j);
    return idx;
}

} // namespace

TEST(Synthesize, SameSeedIsBitIdentical) {
    const auto spec = operating_spectra();
    const auto chain = DetectionChain{};
    const auto a = synthesize(spec, chain, 10e-3, 42);
    const auto b = synthesize(spec, chain, 10e-3, 42);
    EXPECT_EQ(a.samples_1, b.samples_1);
    EXPECT_EQ(a.samples_2, b.samples_2);
    const auto c = synthesize(spec, chain, 10e-3, 43);
    EXPECT_NE(a.samples_1, c.samples_1);
}

TEST(Synthesize, LengthAndCodeRange) {
    auto chain = DetectionChain{};
    chain.adc_bits = 12;
    const double duration = 12.34567e-3;
    const auto t = synthesize(operating_spectra(), chain, duration, 7);
    EXPECT_EQ(t.size(), static_cast<std::size_t>(std::llround(duration * chain.sample_rate)));
    EXPECT_EQ(t.samples_1.size(), t.samples_2.size());
    EXPECT_EQ(t.seed, 7u);
    EXPECT_EQ(t.duration, duration);
    const auto [lo1, hi1] = std::minmax_element(t.samples_1.begin(), t.samples_1.end());
    const auto [lo2, hi2] = std::minmax_element(t.samples_2.begin(), t.samples_2.end());
    EXPECT_GE(std::min(*lo1, *lo2), -2048);
    EXPECT_LE(std::max(*hi1, *hi2), 2047);
    EXPECT_EQ(t.clipped, 0u);  // 6× rms full scale
}

TEST(Synthesize, StreamedCodesMatchAnalogPath) {
    const auto spec = operating_spectra();
    const DetectionChain chain;
    const auto direct = synthesize(spec, chain, 10e-3, 5);
    const auto analog =
        synthesize_analog(intensity_model(spec), chain.dc_current_1, chain.dc_current_2, chain, 10e-3, 5,
                          synth_detail::intensity);
    const auto q = quantize(analog, chain);
    EXPECT_EQ(direct.samples_1, q.samples_1);
    EXPECT_EQ(direct.samples_2, q.samples_2);
}

TEST(Synthesize, CoherentIdealChainIsFlatAtShotNoise) {
    const auto t = synthesize(coherent_spectra(), DetectionChain::ideal(), short_record, 3);
    const auto cs = cross_spectrum(t, 100e3);
    const double unit = shot_codes(t, t.dc_1);
    std::size_t inside = 0, total = 0;
    for (std::size_t j = 0; j < cs.frequencies.size(); ++j) {
        const double f = cs.frequencies[j];
        if (f < 0.5e6 || f > 20e6) continue;
        for (double p : {cs.p11[j], cs.p22[j]}) {
            const double r = p / unit;
            const bool ok = std::abs(r - 1.0) <= 3.0 * cs.relative_sigma * r;
            ++total;
            inside += ok;
            if (f >= 4e6 && f <= 8e6) {
                EXPECT_TRUE(ok) << f << " Hz: " << r;
            }
        }
    }
    // Gaussian 3σ coverage is 99.73 %.
    EXPECT_GE(static_cast<double>(inside) / static_cast<double>(total), 0.99);
}

TEST(Synthesize, RejectsNonPositiveSemidefiniteMatrixNamingFrequency) {
    QuadSpectra s;
    for (double f : log_frequency_grid()) {
        QuadPoint q;
        if (f >= 10e6) q.c_x = -2.5;  // |C| > 2√(S1·S2)
        s.push_back(f, q);
    }
    const DetectionChain chain;
    // First synthesis bin whose interpolated matrix has a negative determinant.
    const auto model = intensity_model(s);
    const double df = chain.sample_rate / static_cast<double>(synth_detail::block_size);
    double f_bin = 0.0;
    for (std::size_t j = 1; f_bin == 0.0; ++j) {
        const auto m = model(df * static_cast<double>(j));
        if (m.a * m.c - m.b * m.b < 0.0) f_bin = df * static_cast<double>(j);
    }
    EXPECT_GT(f_bin, 9e6);
    std::ostringstream expected;
    expected << "at " << f_bin << " Hz";
    try {
        synthesize(s, chain, 10e-3, 1);
        FAIL() << "accepted a non-factorizable spectral matrix";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_factorizable);
        EXPECT_NE(std::string(e.what()).find(expected.str()), std::string::npos) << e.what();
    }
}

TEST(Synthesize, QuantizationShiftsBandPsdByLessThanFiveHundredthsDb) {
    const auto spec = operating_spectra();
    const DetectionChain chain;
    const auto analog = synthesize_analog(intensity_model(spec), chain.dc_current_1, chain.dc_current_2, chain,
                                          short_record, 9, synth_detail::intensity);
    const auto codes = quantize(analog, chain);
    ASSERT_EQ(codes.clipped, 0u);
    const double k = adc_codes_per_unit(chain);
    std::vector<double> scaled(analog.x1.size());
    std::transform(analog.x1.begin(), analog.x1.end(), scaled.begin(), [k](double v) { return k * v; });
    const auto pa = welch_spectrum(scaled, chain.sample_rate, 100e3);
    const auto pq = welch_spectrum(std::span<const std::int32_t>(codes.samples_1), chain.sample_rate, 100e3);
    for (std::size_t j = 0; j < pa.size(); ++j) {
        if (pa.frequencies[j] < 4e6 || pa.frequencies[j] > 8e6) continue;
        EXPECT_LT(std::abs(to_db(pq.power[j] / pa.power[j])), 0.05) << pa.frequencies[j];
    }
}

TEST(Synthesize, MeasuredCoherenceNeverExceedsOne) {
    const auto t = synthesize(operating_spectra(0.5), DetectionChain{}, short_record, 11);
    const auto cs = cross_spectrum(t, 100e3);
    for (std::size_t j = 1; j < cs.frequencies.size(); ++j)
        EXPECT_LE(std::norm(cs.p12[j]), cs.p11[j] * cs.p22[j] * (1.0 + 1e-12)) << cs.frequencies[j];
}

TEST(Synthesize, RoundTripAtOperatingPoint) {
    RunConfig cfg;
    cfg.analysis.duration = 40e-3;
    cfg.seed = 21;
    const auto signal = measure(pipeline_detail::synth_kind(cfg, TraceKind::intensity), cfg.analysis.rbw);
    const auto ref = measure(pipeline_detail::synth_kind(cfg, TraceKind::shot), cfg.analysis.rbw);
    const auto dark = measure(pipeline_detail::synth_kind(cfg, TraceKind::dark), cfg.analysis.rbw);
    cfg.analysis.band_lo = 5.5e6;
    cfg.analysis.band_hi = 6.5e6;
    const auto r = analyze_intensity_record(cfg, signal, &ref, &dark);
    EXPECT_DOUBLE_EQ(r.gain, 1.0);

    // Model averaged over the same bins.
    const auto idx = band_bins(r.analysis.sum, 5.5e6, 6.5e6);
    double ms = 0.0, md = 0.0;
    for (auto j : idx) {
        const auto q = detected_spectra(cfg.cavity).at(r.analysis.sum.frequencies[j]);
        ms += sumdiff_variance(q, 1.0).var_sum;
        md += sumdiff_variance(q, 1.0).var_diff;
    }
    ms /= static_cast<double>(idx.size());
    md /= static_cast<double>(idx.size());
    EXPECT_NEAR(ms, 0.828, 5e-3);  // band mean ≈ the 6 MHz value
    EXPECT_NEAR(r.analysis.var_sum.value, ms, 3.0 * r.analysis.var_sum.sigma);
    EXPECT_NEAR(r.analysis.var_diff.value, md, 3.0 * r.analysis.var_diff.sigma);
}

TEST(WitnessArms, CoherentSumAndDifferenceAtTwo) {
    DetectionChain chain = DetectionChain::ideal();
    const auto ab = witness_arm_traces(coherent_spectra(), chain, short_record, 2);
    const auto ref = shot_noise_pair(chain.dc_current_1, chain.dc_current_2, chain, short_record, 2);
    AnalysisOptions o;
    o.band_lo = 4e6;
    o.band_hi = 8e6;
    o.exclude_freq = -1.0;
    const auto w = witness_from_traces(ab, ref, o);
    EXPECT_NEAR(w.var_sum, 2.0, 3.0 * w.uncertainty.var_sum);
    EXPECT_NEAR(w.var_diff, 2.0, 3.0 * w.uncertainty.var_diff);
    EXPECT_NEAR(w.duan_sum, 4.0, 3.0 * w.uncertainty.duan_sum);
}

TEST(WitnessArms, TwentyThreeMilliwattPointRecovered) {
    RunConfig cfg;
    cfg.cavity.pump_power = 23e-3;
    cfg.analysis.duration = 40e-3;
    cfg.seed = 4;
    const auto model = model_witness_report(detected_spectra(cfg.cavity), 5e6);
    const auto ab = measure(pipeline_detail::synth_kind(cfg, TraceKind::witness), cfg.analysis.rbw);
    const auto ref = measure(pipeline_detail::synth_kind(cfg, TraceKind::shot), cfg.analysis.rbw);
    const auto dark = measure(pipeline_detail::synth_kind(cfg, TraceKind::dark), cfg.analysis.rbw);
    const auto w = full_report(cfg, ab, ref, &dark, nullptr);
    EXPECT_NEAR(w.var_sum, model.var_sum, 3.0 * w.uncertainty.var_sum);
    EXPECT_NEAR(w.var_diff, model.var_diff, 3.0 * w.uncertainty.var_diff);
    EXPECT_NEAR(w.duan_sum, 4.0 * model.v, 3.0 * w.uncertainty.duan_sum);
    // Published values, within the published tolerance bands.
    EXPECT_NEAR(w.var_sum, 1.78, 0.15);
    EXPECT_NEAR(w.var_diff, 1.95, 0.15);
    EXPECT_TRUE(w.entangled);
}

TEST(WitnessArms, RejectsAsymmetricSpectra) {
    CavityParams p;
    p.port2_conversion_ratio = 0.5;
    EXPECT_THROW(witness_arm_traces(detected_spectra(p), DetectionChain{}, 10e-3, 1), Error);
}

TEST(ShotNoisePair, EqualDcSumEqualsDifference) {
    const DetectionChain chain;
    const auto t = shot_noise_pair(1.0, 1.0, chain, short_record, 8);
    const auto cs = cross_spectrum(t, 100e3);
    const auto s = band_average(cs.combine(1.0, Combine::sum), 4e6, 8e6);
    const auto d = band_average(cs.combine(1.0, Combine::difference), 4e6, 8e6);
    EXPECT_NEAR(s.value, d.value, 3.0 * std::hypot(s.sigma, d.sigma));
}

TEST(ShotNoisePair, ZeroSecondDcLeavesElectronicNoiseOnly) {
    const DetectionChain chain;
    const auto t = shot_noise_pair(1.0, 0.0, chain, short_record, 8);
    const auto dark = dark_trace(chain, short_record, 9);
    const auto a = band_average(cross_spectrum(t, 100e3).channel(2), 4e6, 8e6);
    const auto b = band_average(cross_spectrum(dark, 100e3).channel(2), 4e6, 8e6);
    EXPECT_NEAR(a.value, b.value, 3.0 * std::hypot(a.sigma, b.sigma));
    // And that level is electronic_noise_rel of the nominal shot noise, times |H|².
    const auto c1 = band_average(cross_spectrum(t, 100e3).channel(1), 4e6, 8e6);
    EXPECT_NEAR(a.value / c1.value, chain.electronic_noise_rel / (1.0 + chain.electronic_noise_rel), 0.01);
}

TEST(ShotNoisePair, WeightedReferenceOnImbalancedDcMatchesAnalyticVariance) {
    const DetectionChain chain = DetectionChain::ideal();
    const double dc1 = 1.0, dc2 = 1.0 / 0.95;  // i_2 5 % high, g·i_2 balances the DC
    const double g = 0.95;
    const auto t = shot_noise_pair(dc1, dc2, chain, short_record, 10);
    const auto ref = band_average(shot_noise_reference(t, g), 4e6, 8e6);
    // Independent channels: Var(i_1 − g·i_2) = dc_1 + g²·dc_2 = (1 + g)·dc_1.
    const double analytic = shot_codes(t, dc1 + g * g * dc2);
    EXPECT_NEAR(analytic / shot_codes(t, dc1), 1.95, 1e-12);
    EXPECT_LT(std::abs(to_db(ref.value / analytic)), 0.05);
}

TEST(Chain, ElectronicCorrectionAndTransferDivisionRecoverSpectra) {
    const auto spec = operating_spectra();
    const DetectionChain chain;  // electronic noise, AC coupling, pole, spur
    const auto t = synthesize(spec, chain, 40e-3, 12);
    const auto dark = dark_trace(chain, 40e-3, 13);
    const auto cs = cross_spectrum(t, 100e3);
    const auto cd = cross_spectrum(dark, 100e3);
    const auto s1 = correct_electronic_noise(cs.channel(1), cd.channel(1));
    const auto s2 = correct_electronic_noise(cs.channel(2), cd.channel(2));
    for (auto j : bins_between(cs, 4e6, 8e6)) {
        const double f = cs.frequencies[j];
        const double h2 = std::norm(chain.transfer(f));
        const auto q = spec.at(f);
        const double r1 = s1.power[j] / (h2 * shot_codes(t, t.dc_1));
        const double r2 = s2.power[j] / (h2 * shot_codes(t, t.dc_2));
        const double e1 = s1.sigma[j] / (h2 * shot_codes(t, t.dc_1));
        const double e2 = s2.sigma[j] / (h2 * shot_codes(t, t.dc_2));
        EXPECT_NEAR(r1, q.s_x1, 3.0 * e1) << f;
        EXPECT_NEAR(r2, q.s_x2, 3.0 * e2) << f;
    }
}

TEST(Synthesize, PreconditionErrors) {
    const auto spec = operating_spectra();
    EXPECT_THROW(synthesize(spec, DetectionChain{}, 9.9e-3, 1), Error);
    QuadSpectra narrow;
    for (double f : log_frequency_grid(1e6, 20e6, 64)) narrow.push_back(f, QuadPoint{});
    EXPECT_THROW(synthesize(narrow, DetectionChain{}, 10e-3, 1), Error);
    DetectionChain bad;
    bad.adc_bits = 25;
    EXPECT_THROW(synthesize(spec, bad, 10e-3, 1), Error);
    bad = {};
    bad.spur_amplitude = -1.0;
    EXPECT_THROW(synthesize(spec, bad, 10e-3, 1), Error);
    EXPECT_THROW(shot_noise_pair(1.0, 1.0, DetectionChain{}, 5e-3, 1), Error);
}
