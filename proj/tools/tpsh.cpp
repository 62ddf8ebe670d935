/*
 * tpsh — command-line front end.
 *
 *   tpsh [--config PATH] [--seed N] [--pump-mw X] [--rbw-khz X]
 *        [--duration-ms X] [--out DIR] <subcommand> [subcommand options]
 *
 * Flags override the configuration file, which overrides the defaults
 * (or the file named by TPSH_DEFAULTS).
 */
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tpsh/io.hpp"
#include "tpsh/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Two-port SHG resonator: cavity model, noise spectra, trace synthesis and analysis"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> pump_mw, rbw_khz, duration_ms;
    app.add_option("--config", config_path, "configuration file (section.key = value)");
    app.add_option("--seed", seed, "random seed for synthesis");
    app.add_option("--pump-mw", pump_mw, "pump power incident on the cavity, mW");
    app.add_option("--rbw-khz", rbw_khz, "analysis resolution bandwidth, kHz");
    app.add_option("--duration-ms", duration_ms, "synthesized record length, ms");
    app.add_option("--out", out_dir, "output directory");

    tpsh::CommandOptions opts;
    std::optional<std::string> trace, reference, dark, intensity;

    app.add_subcommand("steady-state", "classical operating point");
    app.add_subcommand("spectra", "detected quadrature spectra CSV");
    auto* synth = app.add_subcommand("synth", "synthesize one trace file");
    synth->add_option("--kind", opts.kind, "intensity | witness | shot | dark")->capture_default_str();
    auto* analyze = app.add_subcommand("analyze", "analyze trace files");
    analyze->add_option("--trace", trace, "record to analyze")->required();
    analyze->add_option("--kind", opts.kind, "intensity | witness | shot")->capture_default_str();
    analyze->add_option("--reference", reference, "shot-noise reference record");
    analyze->add_option("--dark", dark, "dark (electronic noise) record");
    analyze->add_option("--intensity", intensity, "D1/D2 record for the intensity fields of a witness report");
    auto* witness = app.add_subcommand("witness", "end-to-end witness measurement");
    witness->add_flag("--save-traces", opts.save_traces, "also write the synthesized records");
    app.add_subcommand("sweep", "Duan sum versus pump power");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    tpsh::RunConfig cfg;
    try {
        cfg = config_path ? tpsh::load_config(std::filesystem::path(*config_path)) : tpsh::load_config(std::nullopt);
        if (seed) cfg.seed = *seed;
        if (pump_mw) cfg.cavity.pump_power = *pump_mw * 1e-3;
        if (rbw_khz) cfg.analysis.rbw = *rbw_khz * 1e3;
        if (duration_ms) cfg.analysis.duration = *duration_ms * 1e-3;
        if (out_dir) cfg.output_dir = *out_dir;
    } catch (const tpsh::Error& e) {
        std::cerr << tpsh::pipeline_detail::error_json(std::string(tpsh::to_string(e.kind())), e.module(), e.what())
                         .dump()
                  << "\n";
        return 2;
    }
    if (trace) opts.trace = *trace;
    if (reference) opts.reference = *reference;
    if (dark) opts.dark = *dark;
    if (intensity) opts.intensity = *intensity;

    const auto* sub = app.get_subcommands().front();
    return tpsh::run_subcommand(sub->get_name(), cfg, opts, std::cout, std::cerr);
}
