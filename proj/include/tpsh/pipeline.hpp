/*
 * pipeline.hpp — the subcommands behind the command-line tool.
 *
 *   steady-state  classical operating point (JSON on stdout)
 *   spectra       detected quadrature spectra (CSV)
 *   synth         one trace file: intensity | witness | shot | dark
 *   analyze       trace file(s) -> measured spectra CSV + JSON report
 *   witness       model -> synthesis -> analysis, end to end
 *   sweep         Duan sum vs pump power (CSV)
 *
 * Artifacts are written atomically under the output directory and depend
 * only on the configuration and seed. The wall-clock timestamp goes to a
 * sidecar run.log and nowhere else.
 */
#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tpsh/cavity.hpp"
#include "tpsh/error.hpp"
#include "tpsh/io.hpp"
#include "tpsh/noise_model.hpp"
#include "tpsh/spectral_analyzer.hpp"
#include "tpsh/trace_synth.hpp"

namespace tpsh {

/// Subcommand-specific inputs that are not part of the run configuration.
struct CommandOptions {
    std::string kind = "intensity";        // synth / analyze record type
    std::optional<std::filesystem::path> trace, reference, dark, intensity;
    bool save_traces = false;              // witness: also write the four records
};

enum class TraceKind { intensity, witness, shot, dark };

inline TraceKind parse_trace_kind(const std::string& s) {
    if (s == "intensity") return TraceKind::intensity;
    if (s == "witness") return TraceKind::witness;
    if (s == "shot") return TraceKind::shot;
    if (s == "dark") return TraceKind::dark;
    throw Error(ErrorKind::invalid_argument, "cli_io", "kind must be intensity, witness, shot or dark, got '" + s + "'");
}

/// Model spectra as seen by the detectors (detection loss applied).
inline QuadSpectra detected_spectra(const CavityParams& p, const SteadyState& ss) {
    const auto grid = log_frequency_grid();
    return apply_detection_loss(quadrature_spectra(ss, grid), p.detection_efficiency());
}

inline QuadSpectra detected_spectra(const CavityParams& p) { return detected_spectra(p, steady_state(p)); }

/// The chain with DC levels following the detected harmonic powers (mW)
/// unless the configuration fixed them.
inline DetectionChain effective_chain(const RunConfig& cfg, const SteadyState& ss) {
    DetectionChain chain = cfg.chain;
    const double eta = cfg.cavity.detection_efficiency();
    if (!cfg.dc_1_explicit) chain.dc_current_1 = eta * ss.harmonic_power_port1 * 1e3;
    if (!cfg.dc_2_explicit) chain.dc_current_2 = eta * ss.harmonic_power_port2 * 1e3;
    if (!(chain.dc_current_1 > 0.0 && chain.dc_current_2 > 0.0))
        throw Error(ErrorKind::invalid_argument, "cli_io",
                    "no harmonic light on a detector; set chain.dc_current_1/2 explicitly to synthesize");
    return chain;
}

inline AnalysisOptions analysis_options(const RunConfig& cfg) {
    AnalysisOptions o;
    o.rbw = cfg.analysis.rbw;
    o.band_lo = cfg.analysis.band_lo;
    o.band_hi = cfg.analysis.band_hi;
    o.exclude_freq = cfg.chain.spur_amplitude > 0.0 ? cfg.chain.spur_freq : -1.0;
    return o;
}

/// Electronic gain g of I_1 ∓ g·I_2 per the configured mode. The shot-noise
/// reference is combined with the same g, so both carry dc_1 + g²·dc_2.
inline double choose_gain(const RunConfig& cfg, const MeasuredRecord& signal, const MeasuredRecord* reference,
                          const MeasuredRecord* dark) {
    switch (cfg.analysis.gain_mode) {
    case GainMode::fixed: return cfg.analysis.gain;
    case GainMode::dc_balance: {
        TwoChannelTrace t;
        t.dc_1 = signal.dc_1;
        t.dc_2 = signal.dc_2;
        return gain_balance_from_dc(t);
    }
    case GainMode::optimal: {
        auto o = analysis_options(cfg);
        return analyze_intensity(signal, reference, o, dark).optimal_gain;
    }
    }
    return 1.0;
}

struct IntensityResult {
    IntensityAnalysis analysis;
    double gain = 1.0;
};

inline IntensityResult analyze_intensity_record(const RunConfig& cfg, const MeasuredRecord& signal,
                                                const MeasuredRecord* reference, const MeasuredRecord* dark) {
    IntensityResult r;
    r.gain = choose_gain(cfg, signal, reference, dark);
    auto o = analysis_options(cfg);
    o.signal_gain = o.reference_gain = r.gain;
    r.analysis = analyze_intensity(signal, reference, o, dark);
    return r;
}

/// Witness report with the intensity-correlation fields filled from the
/// D_1/D_2 record at the configured gain.
inline WitnessReport full_report(const RunConfig& cfg, const MeasuredRecord& ab, const MeasuredRecord& reference,
                                 const MeasuredRecord* dark, const MeasuredRecord* intensity) {
    auto o = analysis_options(cfg);
    o.reference_gain = 1.0;  // witness arms are balanced by the beamsplitter
    WitnessReport r = witness_report(ab, reference, o, dark, nullptr);
    if (intensity) {
        const auto ir = analyze_intensity_record(cfg, *intensity, &reference, dark);
        const auto& ia = ir.analysis;
        r.intensity_sum_db = to_db(ia.var_sum.value);
        r.intensity_diff_db = to_db(ia.var_diff.value);
        r.uncertainty.intensity_sum_db = 10.0 / std::numbers::ln10 * ia.var_sum.sigma / ia.var_sum.value;
        r.uncertainty.intensity_diff_db = 10.0 / std::numbers::ln10 * ia.var_diff.sigma / ia.var_diff.value;
        r.optimal_gain = ia.optimal_gain;
    }
    return r;
}

struct SweepRow {
    double pump_power, circulating_power, harmonic_power, var_plus, var_minus, duan_sum, v, db;
};

/// Model Duan sum at the analysis band center for pump powers
/// 0, Δ, …, pump_max, with E_NL multiplied by sweep.enl_scale.
inline std::vector<SweepRow> pump_sweep(const RunConfig& cfg) {
    std::vector<SweepRow> rows;
    const double freq = 0.5 * (cfg.analysis.band_lo + cfg.analysis.band_hi);
    for (int i = 0; i < cfg.sweep.points; ++i) {
        CavityParams p = cfg.cavity;
        p.conversion_efficiency *= cfg.sweep.enl_scale;
        p.pump_power = cfg.sweep.pump_max * static_cast<double>(i) / static_cast<double>(cfg.sweep.points - 1);
        const auto ss = steady_state(p);
        const auto q = apply_detection_loss(quadrature_point(ss, freq), p.detection_efficiency());
        const auto w = witness_pair(q);
        const auto d = duan_sum(w.var_plus, w.var_minus);
        rows.push_back({p.pump_power, ss.circulating_power, ss.harmonic_power_port1, w.var_plus, w.var_minus,
                        d.duan_sum, d.v, d.db});
    }
    return rows;
}

inline std::string encode_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "pump_w,circulating_w,harmonic_w_per_port,var_plus,var_minus,duan_sum,v,db\n";
    for (const auto& r : rows)
        out += io_detail::format_row(
            {r.pump_power, r.circulating_power, r.harmonic_power, r.var_plus, r.var_minus, r.duan_sum, r.v, r.db});
    return out;
}

inline nlohmann::json steady_state_json(const CavityParams& p, const SteadyState& ss) {
    nlohmann::json j;
    j["pump_power_w"] = p.pump_power;
    j["circulating_power_w"] = ss.circulating_power;
    j["harmonic_power_port1_w"] = ss.harmonic_power_port1;
    j["harmonic_power_port2_w"] = ss.harmonic_power_port2;
    j["reflected_power_w"] = reflected_power(p, ss);
    j["rate_input"] = ss.rate_input;
    j["rate_loss"] = ss.rate_loss;
    j["rate_nl_port1"] = ss.rate_nl_port1;
    j["rate_nl_port2"] = ss.rate_nl_port2;
    j["linewidth_fwhm_hz"] = ss.linewidth_fwhm;
    j["free_spectral_range_hz"] = ss.free_spectral_range;
    j["iterations"] = ss.iterations;
    return j;
}

namespace pipeline_detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.output_dir) / name;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

inline TwoChannelTrace synth_kind(const RunConfig& cfg, TraceKind kind) {
    const auto ss = steady_state(cfg.cavity);
    const double dur = cfg.analysis.duration;
    if (kind == TraceKind::dark) {
        // Dark records keep the electronic noise and ADC scale of the light records.
        return dark_trace(effective_chain(cfg, ss), dur, cfg.seed);
    }
    const auto chain = effective_chain(cfg, ss);
    switch (kind) {
    case TraceKind::intensity: return synthesize(detected_spectra(cfg.cavity, ss), chain, dur, cfg.seed);
    case TraceKind::witness: return witness_arm_traces(detected_spectra(cfg.cavity, ss), chain, dur, cfg.seed);
    case TraceKind::shot: return shot_noise_pair(chain.dc_current_1, chain.dc_current_2, chain, dur, cfg.seed);
    default: break;
    }
    throw Error(ErrorKind::invalid_argument, "cli_io", "unknown trace kind");
}

inline MeasuredRecord load_measured(const std::filesystem::path& path, double rbw) {
    const auto d = read_trace(path);
    if (d.empty) throw Error(ErrorKind::invalid_argument, "cli_io", path.string() + ": zero-length trace");
    return measure(d.trace, rbw);
}

inline nlohmann::json error_json(const std::string& kind, const std::string& module, const std::string& message) {
    return nlohmann::json{{"error", {{"kind", kind}, {"module", module}, {"message", message}}}};
}

inline void append_log(const RunConfig& cfg, const std::string& command, int status) {
    try {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream log(out_path(cfg, "run.log"), std::ios::app);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        log << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " " << command << " seed=" << cfg.seed
            << " status=" << status << "\n";
    } catch (...) {
        // The log is informational; never fail a run over it.
    }
}

} // namespace pipeline_detail

/// Runs one subcommand. Results go to `out` (stdout) and the output
/// directory; failures print one JSON error line to `err` and return 2.
inline int run_subcommand(const std::string& name, const RunConfig& cfg, const CommandOptions& opts,
                          std::ostream& out, std::ostream& err) {
    using namespace pipeline_detail;
    int status = 0;
    try {
        cfg.validate();
        if (name == "steady-state") {
            const auto ss = steady_state(cfg.cavity);
            const auto j = steady_state_json(cfg.cavity, ss);
            write_json(out_path(cfg, "steady_state.json"), j);
            out << j.dump(2) << "\n";
        } else if (name == "spectra") {
            const auto spec = detected_spectra(cfg.cavity);
            write_file_atomic(out_path(cfg, "spectra.csv"), encode_model_csv(spec));
            out << out_path(cfg, "spectra.csv").string() << "\n";
        } else if (name == "synth") {
            const auto kind = parse_trace_kind(opts.kind);
            const auto t = synth_kind(cfg, kind);
            if (t.clipped > 0) err << error_json("warning", "trace_synth", std::to_string(t.clipped) + " samples clipped").dump() << "\n";
            const auto path = out_path(cfg, opts.kind + ".tpsh");
            write_trace(path, t);
            out << path.string() << "\n";
        } else if (name == "analyze") {
            if (!opts.trace) throw Error(ErrorKind::invalid_argument, "cli_io", "analyze needs --trace");
            const auto kind = parse_trace_kind(opts.kind);
            const auto sig = load_measured(*opts.trace, cfg.analysis.rbw);
            std::optional<MeasuredRecord> ref, dark, inten;
            if (opts.reference) ref = load_measured(*opts.reference, cfg.analysis.rbw);
            if (opts.dark) dark = load_measured(*opts.dark, cfg.analysis.rbw);
            if (opts.intensity) inten = load_measured(*opts.intensity, cfg.analysis.rbw);
            nlohmann::json report;
            if (kind == TraceKind::intensity) {
                const auto ir = analyze_intensity_record(cfg, sig, ref ? &*ref : nullptr, dark ? &*dark : nullptr);
                write_file_atomic(out_path(cfg, "intensity_sum.csv"), encode_measured_csv(ir.analysis.sum));
                write_file_atomic(out_path(cfg, "intensity_diff.csv"), encode_measured_csv(ir.analysis.difference));
                WitnessReport r;
                const double nan = std::numeric_limits<double>::quiet_NaN();
                r.freq = 0.5 * (cfg.analysis.band_lo + cfg.analysis.band_hi);
                r.var_sum = r.var_diff = r.duan_sum = r.v = r.db = nan;
                r.uncertainty.var_sum = r.uncertainty.var_diff = r.uncertainty.duan_sum = r.uncertainty.v =
                    r.uncertainty.db = nan;
                r.intensity_sum_db = to_db(ir.analysis.var_sum.value);
                r.intensity_diff_db = to_db(ir.analysis.var_diff.value);
                r.uncertainty.intensity_sum_db =
                    10.0 / std::numbers::ln10 * ir.analysis.var_sum.sigma / ir.analysis.var_sum.value;
                r.uncertainty.intensity_diff_db =
                    10.0 / std::numbers::ln10 * ir.analysis.var_diff.sigma / ir.analysis.var_diff.value;
                r.optimal_gain = ir.analysis.optimal_gain;
                r.entangled = false;
                report = report_to_json(r);
                report["gain"] = ir.gain;
            } else if (kind == TraceKind::witness) {
                if (!ref) throw Error(ErrorKind::invalid_argument, "cli_io", "witness analysis needs --reference");
                report = report_to_json(full_report(cfg, sig, *ref, dark ? &*dark : nullptr, inten ? &*inten : nullptr));
            } else {
                const auto s = sig.spectra.combine(1.0, Combine::difference);
                write_file_atomic(out_path(cfg, "difference.csv"), encode_measured_csv(s));
                report = nlohmann::json{{"freq", 0.5 * (cfg.analysis.band_lo + cfg.analysis.band_hi)}};
            }
            write_json(out_path(cfg, "report.json"), report);
            out << report.dump() << "\n";
        } else if (name == "witness") {
            const auto ss = steady_state(cfg.cavity);
            const auto spec = detected_spectra(cfg.cavity, ss);
            const auto chain = effective_chain(cfg, ss);
            const double dur = cfg.analysis.duration;
            const double rbw = cfg.analysis.rbw;
            std::size_t clipped = 0;
            auto record = [&](const TwoChannelTrace& t, const char* file) {
                clipped += t.clipped;
                if (opts.save_traces) write_trace(out_path(cfg, file), t);
                return measure(t, rbw);
            };
            const auto mi = record(synthesize(spec, chain, dur, cfg.seed), "intensity.tpsh");
            const auto mab = record(witness_arm_traces(spec, chain, dur, cfg.seed), "witness.tpsh");
            const auto mref =
                record(shot_noise_pair(chain.dc_current_1, chain.dc_current_2, chain, dur, cfg.seed), "shot.tpsh");
            const auto md = record(dark_trace(chain, dur, cfg.seed), "dark.tpsh");
            auto report = report_to_json(full_report(cfg, mab, mref, &md, &mi));
            report["clipped_samples"] = clipped;
            const auto model = model_witness_report(spec, 0.5 * (cfg.analysis.band_lo + cfg.analysis.band_hi));
            report["model_duan_sum"] = model.duan_sum;
            report["model_var_sum"] = model.var_sum;
            report["model_var_diff"] = model.var_diff;
            write_json(out_path(cfg, "report.json"), report);
            out << report.dump() << "\n";
        } else if (name == "sweep") {
            const auto rows = pump_sweep(cfg);
            write_file_atomic(out_path(cfg, "sweep.csv"), encode_sweep_csv(rows));
            out << out_path(cfg, "sweep.csv").string() << "\n";
        } else {
            throw Error(ErrorKind::invalid_argument, "cli_io", "unknown subcommand '" + name + "'");
        }
    } catch (const Error& e) {
        err << error_json(std::string(to_string(e.kind())), e.module(), e.what()).dump() << "\n";
        status = 2;
    } catch (const std::exception& e) {
        err << error_json("internal", "cli_io", e.what()).dump() << "\n";
        status = 2;
    }
    append_log(cfg, name, status);
    return status;
}

} // namespace tpsh
