/*
 * io.hpp — run configuration, trace files, spectra tables and reports.
 *
 * Configuration is a flat text file of `section.key = value` lines; `#`
 * starts a comment. Numeric values may carry an SI unit suffix matching the
 * key's dimension (e.g. `23 mW`, `100 kHz`, `857 nm`, `4 %`). Unknown keys
 * are errors; absent keys keep their defaults, which are the experimental
 * parameters.
 *
 * Trace file (little-endian):
 *
 *   offset  size  field
 *        0     4  magic "TPSH"
 *        4     2  version (u16) = 1
 *        6     8  sample_rate (f64, Hz)
 *       14     1  channels (u8) = 2
 *       15     1  adc_bits (u8)
 *       16     8  duration (f64, s)
 *       24     8  seed (u64)
 *       32    16  DC levels (2 × f64)
 *       48    16  reserved, zero
 *       64     …  interleaved i16 samples: ch1[0], ch2[0], ch1[1], …
 */
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpsh/cavity.hpp"
#include "tpsh/error.hpp"
#include "tpsh/noise_model.hpp"
#include "tpsh/spectral_analyzer.hpp"
#include "tpsh/trace_synth.hpp"

namespace tpsh {

enum class GainMode { fixed, optimal, dc_balance };

struct AnalysisConfig {
    double rbw = 100e3;  // Hz
    double band_lo = 4.5e6;
    double band_hi = 5.5e6;
    GainMode gain_mode = GainMode::dc_balance;
    double gain = default_reference_gain;  // used by gain_mode = fixed
    double duration = 80e-3;               // s, per synthesized record
};

struct SweepConfig {
    double pump_max = 0.5;   // W
    int points = 26;
    double enl_scale = 10.0; // E_NL multiplier for the projection
};

struct RunConfig {
    CavityParams cavity;
    DetectionChain chain;
    AnalysisConfig analysis;
    SweepConfig sweep;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    // Nominal detector DCs follow the harmonic powers unless set explicitly.
    bool dc_1_explicit = false;
    bool dc_2_explicit = false;

    void validate() const {
        cavity.validate();
        chain.validate();
        auto fail = [](const char* field, const std::string& why) {
            throw Error(ErrorKind::invalid_argument, "cli_io", std::string(field) + ": " + why);
        };
        if (!(analysis.rbw > 0.0)) fail("analysis.rbw", "must be > 0");
        if (!(analysis.band_lo > 0.0 && analysis.band_hi > analysis.band_lo))
            fail("analysis.band_hi", "band must satisfy 0 < band_lo < band_hi");
        if (!(analysis.band_hi < 0.5 * chain.sample_rate)) fail("analysis.band_hi", "must be below Nyquist");
        if (!(analysis.gain > 0.0)) fail("analysis.gain", "must be > 0");
        if (!(analysis.duration > 0.0)) fail("analysis.duration", "must be > 0");
        if (!(sweep.pump_max > 0.0)) fail("sweep.pump_max", "must be > 0");
        if (sweep.points < 2) fail("sweep.points", "must be >= 2");
        if (!(sweep.enl_scale > 0.0)) fail("sweep.enl_scale", "must be > 0");
    }
};

namespace io_detail {

enum class Dim { none, power, frequency, length, time, per_watt, integer, text };

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> unit_factor(Dim dim, const std::string& unit) {
    static const std::map<std::string, double, std::less<>> power{{"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}};
    static const std::map<std::string, double, std::less<>> freq{
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}, {"S/s", 1.0}, {"MS/s", 1e6}};
    static const std::map<std::string, double, std::less<>> length{
        {"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
    static const std::map<std::string, double, std::less<>> time{{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}};
    static const std::map<std::string, double, std::less<>> per_watt{{"/W", 1.0}, {"1/W", 1.0}, {"W^-1", 1.0}};
    if (unit.empty()) return 1.0;
    if (unit == "%" && dim == Dim::none) return 1e-2;
    const std::map<std::string, double, std::less<>>* table = nullptr;
    switch (dim) {
    case Dim::power: table = &power; break;
    case Dim::frequency: table = &freq; break;
    case Dim::length: table = &length; break;
    case Dim::time: table = &time; break;
    case Dim::per_watt: table = &per_watt; break;
    default: return std::nullopt;
    }
    const auto it = table->find(unit);
    if (it == table->end()) return std::nullopt;
    return it->second;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
    std::ostringstream os;
    if (line > 0) os << "line " << line << ": ";
    os << msg;
    throw Error(ErrorKind::format, "cli_io", os.str());
}

inline double parse_number(std::string_view text, Dim dim, std::size_t line, const std::string& key) {
    const std::string s = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{}) parse_fail(line, key + ": expected a number, got '" + s + "'");
    const std::string unit = trim(std::string_view(ptr, static_cast<std::size_t>(s.data() + s.size() - ptr)));
    const auto factor = unit_factor(dim, unit);
    if (!factor) parse_fail(line, key + ": unit '" + unit + "' not accepted here");
    return value * *factor;
}

struct Field {
    Dim dim;
    std::function<void(RunConfig&, double)> set_number;
    std::function<void(RunConfig&, const std::string&)> set_text = nullptr;
};

inline const std::map<std::string, Field, std::less<>>& fields() {
    static const std::map<std::string, Field, std::less<>> table = [] {
        std::map<std::string, Field, std::less<>> t;
        auto add = [&t](std::string key, Dim dim, std::function<void(RunConfig&, double)> f) {
            t.emplace(std::move(key), Field{dim, std::move(f)});
        };
        add("cavity.pump_power", Dim::power, [](RunConfig& c, double v) { c.cavity.pump_power = v; });
        add("cavity.input_transmission", Dim::none, [](RunConfig& c, double v) { c.cavity.input_transmission = v; });
        add("cavity.roundtrip_loss", Dim::none, [](RunConfig& c, double v) { c.cavity.roundtrip_loss = v; });
        add("cavity.conversion_efficiency", Dim::per_watt,
            [](RunConfig& c, double v) { c.cavity.conversion_efficiency = v; });
        add("cavity.port2_conversion_ratio", Dim::none,
            [](RunConfig& c, double v) { c.cavity.port2_conversion_ratio = v; });
        add("cavity.mismatch", Dim::none, [](RunConfig& c, double v) { c.cavity.mismatch = v; });
        add("cavity.temperature_offset", Dim::none,
            [](RunConfig& c, double v) { c.cavity.mismatch = temperature_to_mismatch(v); });
        add("cavity.mirror_separation", Dim::length, [](RunConfig& c, double v) { c.cavity.mirror_separation = v; });
        add("cavity.crystal_length", Dim::length, [](RunConfig& c, double v) { c.cavity.crystal_length = v; });
        add("cavity.crystal_index", Dim::none, [](RunConfig& c, double v) { c.cavity.crystal_index = v; });
        add("cavity.fundamental_wavelength", Dim::length,
            [](RunConfig& c, double v) { c.cavity.fundamental_wavelength = v; });
        add("cavity.harmonic_wavelength", Dim::length,
            [](RunConfig& c, double v) { c.cavity.harmonic_wavelength = v; });
        add("cavity.detector_efficiency", Dim::none, [](RunConfig& c, double v) { c.cavity.detector_efficiency = v; });
        add("cavity.path_efficiency", Dim::none, [](RunConfig& c, double v) { c.cavity.path_efficiency = v; });

        add("chain.sample_rate", Dim::frequency, [](RunConfig& c, double v) { c.chain.sample_rate = v; });
        add("chain.adc_bits", Dim::integer, [](RunConfig& c, double v) { c.chain.adc_bits = static_cast<int>(v); });
        add("chain.dc_current_1", Dim::none, [](RunConfig& c, double v) {
            c.chain.dc_current_1 = v;
            c.dc_1_explicit = true;
        });
        add("chain.dc_current_2", Dim::none, [](RunConfig& c, double v) {
            c.chain.dc_current_2 = v;
            c.dc_2_explicit = true;
        });
        add("chain.electronic_noise_rel", Dim::none,
            [](RunConfig& c, double v) { c.chain.electronic_noise_rel = v; });
        add("chain.ac_coupling_center", Dim::frequency,
            [](RunConfig& c, double v) { c.chain.ac_coupling_center = v; });
        add("chain.ac_coupling_q", Dim::none, [](RunConfig& c, double v) { c.chain.ac_coupling_q = v; });
        add("chain.detector_pole", Dim::frequency, [](RunConfig& c, double v) { c.chain.detector_pole = v; });
        add("chain.spur_freq", Dim::frequency, [](RunConfig& c, double v) { c.chain.spur_freq = v; });
        add("chain.spur_amplitude", Dim::none, [](RunConfig& c, double v) { c.chain.spur_amplitude = v; });

        add("analysis.rbw", Dim::frequency, [](RunConfig& c, double v) { c.analysis.rbw = v; });
        add("analysis.band_lo", Dim::frequency, [](RunConfig& c, double v) { c.analysis.band_lo = v; });
        add("analysis.band_hi", Dim::frequency, [](RunConfig& c, double v) { c.analysis.band_hi = v; });
        add("analysis.gain", Dim::none, [](RunConfig& c, double v) { c.analysis.gain = v; });
        add("analysis.duration", Dim::time, [](RunConfig& c, double v) { c.analysis.duration = v; });
        t.emplace("analysis.gain_mode",
                  Field{Dim::text, nullptr, [](RunConfig& c, const std::string& v) {
                            if (v == "fixed") c.analysis.gain_mode = GainMode::fixed;
                            else if (v == "optimal") c.analysis.gain_mode = GainMode::optimal;
                            else if (v == "dc_balance") c.analysis.gain_mode = GainMode::dc_balance;
                            else throw std::invalid_argument("expected fixed, optimal or dc_balance");
                        }});

        add("sweep.pump_max", Dim::power, [](RunConfig& c, double v) { c.sweep.pump_max = v; });
        add("sweep.points", Dim::integer, [](RunConfig& c, double v) { c.sweep.points = static_cast<int>(v); });
        add("sweep.enl_scale", Dim::none, [](RunConfig& c, double v) { c.sweep.enl_scale = v; });

        add("run.seed", Dim::integer, [](RunConfig& c, double v) { c.seed = static_cast<std::uint64_t>(v); });
        t.emplace("run.output_dir",
                  Field{Dim::text, nullptr, [](RunConfig& c, const std::string& v) { c.output_dir = v; }});
        return t;
    }();
    return table;
}

inline void apply_line(RunConfig& cfg, std::string_view raw, std::size_t line) {
    std::string text(raw.substr(0, raw.find('#')));
    text = trim(text);
    if (text.empty()) return;
    const auto eq = text.find('=');
    if (eq == std::string::npos) parse_fail(line, "expected 'section.key = value'");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) parse_fail(line, "unknown key '" + key + "'");
    if (value.empty()) parse_fail(line, key + ": missing value");
    const Field& f = it->second;
    if (f.dim == Dim::text) {
        try {
            f.set_text(cfg, value);
        } catch (const std::invalid_argument& e) {
            parse_fail(line, key + ": " + e.what());
        }
        return;
    }
    const double v = parse_number(value, f.dim, line, key);
    if (f.dim == Dim::integer && (v != std::floor(v) || v < 0.0))
        parse_fail(line, key + ": expected a non-negative integer");
    f.set_number(cfg, v);
}

} // namespace io_detail

/// Applies `key = value` lines on top of `cfg`; does not validate.
inline void apply_config_text(RunConfig& cfg, std::string_view text) {
    std::size_t line = 0, pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        io_detail::apply_line(cfg, text.substr(pos, end - pos), ++line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cli_io", "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses and validates a config file over the built-in defaults, or over
/// the file named by TPSH_DEFAULTS when that variable is set.
inline RunConfig load_config(const std::optional<std::filesystem::path>& path) {
    RunConfig cfg;
    if (const char* defaults = std::getenv("TPSH_DEFAULTS"); defaults && *defaults)
        apply_config_text(cfg, read_text_file(defaults));
    if (path) apply_config_text(cfg, read_text_file(*path));
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return load_config(std::optional<std::filesystem::path>(path));
}

/// Writes to a sibling temporary file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cli_io", "cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorKind::io, "cli_io", "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Trace files

inline constexpr std::uint16_t trace_format_version = 1;
inline constexpr std::size_t trace_header_size = 64;

namespace io_detail {

template <class T>
void put_le(std::string& buf, std::size_t offset, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    std::memcpy(buf.data() + offset, bytes.data(), sizeof(T));
}

template <class T>
T get_le(std::string_view buf, std::size_t offset) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), buf.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

} // namespace io_detail

inline std::string encode_trace(const TwoChannelTrace& t) {
    if (t.samples_1.size() != t.samples_2.size())
        throw Error(ErrorKind::invalid_argument, "cli_io", "channel lengths differ");
    if (t.chain.adc_bits > 16)
        throw Error(ErrorKind::invalid_argument, "cli_io", "trace files hold at most 16-bit samples");
    using io_detail::put_le;
    std::string buf(trace_header_size + 4 * t.size(), '\0');
    std::memcpy(buf.data(), "TPSH", 4);
    put_le<std::uint16_t>(buf, 4, trace_format_version);
    put_le<double>(buf, 6, t.chain.sample_rate);
    put_le<std::uint8_t>(buf, 14, 2);
    put_le<std::uint8_t>(buf, 15, static_cast<std::uint8_t>(t.chain.adc_bits));
    put_le<double>(buf, 16, t.duration);
    put_le<std::uint64_t>(buf, 24, t.seed);
    put_le<double>(buf, 32, t.dc_1);
    put_le<double>(buf, 40, t.dc_2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        put_le<std::int16_t>(buf, trace_header_size + 4 * i, static_cast<std::int16_t>(t.samples_1[i]));
        put_le<std::int16_t>(buf, trace_header_size + 4 * i + 2, static_cast<std::int16_t>(t.samples_2[i]));
    }
    return buf;
}

struct DecodedTrace {
    TwoChannelTrace trace;
    bool empty = false;  // header-only record
};

inline DecodedTrace decode_trace(std::string_view buf) {
    using io_detail::get_le;
    if (buf.size() < trace_header_size)
        throw Error(ErrorKind::format, "cli_io", "file shorter than the 64-byte header");
    if (buf.substr(0, 4) != "TPSH") throw Error(ErrorKind::format, "cli_io", "bad magic, expected TPSH");
    const auto version = get_le<std::uint16_t>(buf, 4);
    if (version != trace_format_version)
        throw Error(ErrorKind::format, "cli_io", "unsupported trace version " + std::to_string(version));
    if (get_le<std::uint8_t>(buf, 14) != 2) throw Error(ErrorKind::format, "cli_io", "expected 2 channels");

    DecodedTrace out;
    auto& t = out.trace;
    t.chain.sample_rate = get_le<double>(buf, 6);
    t.chain.adc_bits = get_le<std::uint8_t>(buf, 15);
    t.duration = get_le<double>(buf, 16);
    t.seed = get_le<std::uint64_t>(buf, 24);
    t.dc_1 = get_le<double>(buf, 32);
    t.dc_2 = get_le<double>(buf, 40);
    t.chain.dc_current_1 = t.dc_1;
    t.chain.dc_current_2 = t.dc_2;

    const std::size_t expected = t.chain.samples_for(t.duration);
    const std::size_t payload = buf.size() - trace_header_size;
    const std::size_t actual = payload / 4;
    if (payload % 4 != 0 || actual != expected) {
        std::ostringstream os;
        os << (actual < expected ? "truncated" : "oversized") << " trace payload: expected " << expected
           << " samples per channel, found " << actual << (payload % 4 ? " (plus a partial frame)" : "");
        throw Error(ErrorKind::format, "cli_io", os.str());
    }
    t.samples_1.resize(actual);
    t.samples_2.resize(actual);
    for (std::size_t i = 0; i < actual; ++i) {
        t.samples_1[i] = get_le<std::int16_t>(buf, trace_header_size + 4 * i);
        t.samples_2[i] = get_le<std::int16_t>(buf, trace_header_size + 4 * i + 2);
    }
    out.empty = actual == 0;
    return out;
}

inline void write_trace(const std::filesystem::path& path, const TwoChannelTrace& t) {
    write_file_atomic(path, encode_trace(t));
}

inline DecodedTrace read_trace(const std::filesystem::path& path) { return decode_trace(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Spectra tables

namespace io_detail {

inline std::string format_row(std::initializer_list<double> values) {
    std::ostringstream os;
    os << std::setprecision(17);
    bool first = true;
    for (double v : values) {
        if (!first) os << ',';
        os << v;
        first = false;
    }
    os << '\n';
    return os.str();
}

inline std::vector<std::vector<double>> parse_csv(std::string_view text, std::string_view header) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0, line = 0;
    bool seen_header = false;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        const std::string row = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line;
        if (row.empty()) continue;
        if (!seen_header) {
            if (row != header) parse_fail(line, "expected header '" + std::string(header) + "'");
            seen_header = true;
            continue;
        }
        std::vector<double> values;
        std::size_t p = 0;
        while (p <= row.size()) {
            const auto comma = row.find(',', p);
            const auto cell = row.substr(p, comma == std::string::npos ? std::string::npos : comma - p);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) parse_fail(line, "bad number '" + cell + "'");
            values.push_back(v);
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
        rows.push_back(std::move(values));
    }
    if (!seen_header) parse_fail(0, "missing header");
    return rows;
}

} // namespace io_detail

inline constexpr std::string_view model_csv_header = "freq_hz,s_x1,s_x2,s_y1,s_y2,c_x,c_y";
inline constexpr std::string_view measured_csv_header = "freq_hz,power,sigma";

inline std::string encode_model_csv(const QuadSpectra& s) {
    std::string out(model_csv_header);
    out += '\n';
    for (std::size_t i = 0; i < s.size(); ++i)
        out += io_detail::format_row({s.frequencies[i], s.s_x1[i], s.s_x2[i], s.s_y1[i], s.s_y2[i], s.c_x[i], s.c_y[i]});
    return out;
}

inline QuadSpectra decode_model_csv(std::string_view text) {
    QuadSpectra s;
    for (const auto& r : io_detail::parse_csv(text, model_csv_header)) {
        if (r.size() != 7) throw Error(ErrorKind::format, "cli_io", "model spectra rows need 7 columns");
        s.push_back(r[0], {r[1], r[2], r[3], r[4], r[5], r[6]});
    }
    return s;
}

inline std::string encode_measured_csv(const NoiseSpectrum& s) {
    std::string out(measured_csv_header);
    out += '\n';
    for (std::size_t i = 0; i < s.size(); ++i) out += io_detail::format_row({s.frequencies[i], s.power[i], s.sigma[i]});
    return out;
}

inline NoiseSpectrum decode_measured_csv(std::string_view text) {
    NoiseSpectrum s;
    for (const auto& r : io_detail::parse_csv(text, measured_csv_header)) {
        if (r.size() != 3) throw Error(ErrorKind::format, "cli_io", "measured spectra rows need 3 columns");
        s.frequencies.push_back(r[0]);
        s.power.push_back(r[1]);
        s.sigma.push_back(r[2]);
    }
    if (s.size() >= 2) s.rbw = s.frequencies[1] - s.frequencies[0];
    return s;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json report_to_json(const WitnessReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["freq"] = num(r.freq);
    j["var_sum"] = num(r.var_sum);
    j["var_diff"] = num(r.var_diff);
    j["duan_sum"] = num(r.duan_sum);
    j["v"] = num(r.v);
    j["db"] = num(r.db);
    j["intensity_sum_db"] = num(r.intensity_sum_db);
    j["intensity_diff_db"] = num(r.intensity_diff_db);
    j["optimal_gain"] = num(r.optimal_gain);
    j["entangled"] = r.entangled;
    j["sigma_var_sum"] = num(r.uncertainty.var_sum);
    j["sigma_var_diff"] = num(r.uncertainty.var_diff);
    j["sigma_duan_sum"] = num(r.uncertainty.duan_sum);
    j["sigma_v"] = num(r.uncertainty.v);
    j["sigma_db"] = num(r.uncertainty.db);
    j["sigma_intensity_sum_db"] = num(r.uncertainty.intensity_sum_db);
    j["sigma_intensity_diff_db"] = num(r.uncertainty.intensity_diff_db);
    return j;
}

inline WitnessReport report_from_json(const nlohmann::json& j) {
    auto num = [&j](const char* k) {
        return j.at(k).is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at(k).get<double>();
    };
    WitnessReport r;
    r.freq = num("freq");
    r.var_sum = num("var_sum");
    r.var_diff = num("var_diff");
    r.duan_sum = num("duan_sum");
    r.v = num("v");
    r.db = num("db");
    r.intensity_sum_db = num("intensity_sum_db");
    r.intensity_diff_db = num("intensity_diff_db");
    r.optimal_gain = num("optimal_gain");
    r.entangled = j.at("entangled").get<bool>();
    r.uncertainty.var_sum = num("sigma_var_sum");
    r.uncertainty.var_diff = num("sigma_var_diff");
    r.uncertainty.duan_sum = num("sigma_duan_sum");
    r.uncertainty.v = num("sigma_v");
    r.uncertainty.db = num("sigma_db");
    r.uncertainty.intensity_sum_db = num("sigma_intensity_sum_db");
    r.uncertainty.intensity_diff_db = num("sigma_intensity_diff_db");
    return r;
}

} // namespace tpsh
