//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/config.hpp
//! Scenario files: a sectioned key = value format with unit-suffixed keys.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "chain_sim.hpp"
#include "detector.hpp"
#include "error.hpp"
#include "qfc.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! One swept parameter, named "section.key" or "stokes_detection_prob".
struct Sweep
{
    std::string parameter;
    std::vector<double> values;
    //! When set, each point runs enough cycles for about this many heralds.
    std::optional<double> target_heralds;
};

struct AnalysisSettings
{
    std::optional<double> window_s;
    int max_offset{20};
    bool all_pairs{false};
    double bin_s{1.28e-9};
    WaveformReference waveform_reference{WaveformReference::kGateCenter};
    //! Run a blocked-input companion simulation to measure the converted SNR.
    bool measure_snr{false};
    //! Fit a Gaussian to the conditional anti-Stokes waveform.
    bool fit_waveform{false};
    //! Jackknife blocks for g2 errors; 0 uses Poisson errors.
    int jackknife_blocks{0};

    HistogramOptions histogram() const
    {
        HistogramOptions h;
        h.window_s = window_s;
        h.max_offset = max_offset;
        h.all_pairs = all_pairs;
        return h;
    }

    WaveformOptions waveform() const
    {
        WaveformOptions w;
        w.bin_s = bin_s;
        w.reference = waveform_reference;
        return w;
    }
};

struct Scenario
{
    std::string name{"scenario"};
    std::uint64_t n_cycles{1000};
    std::uint64_t seed{1};
    unsigned threads{1};
    SplitMode split{SplitMode::kNone};
    bool write_streams{true};
    TagFormat stream_format{TagFormat::kBinary};
    std::string outputs;

    SourceParams source;
    bool qfc_enabled{false};
    QfcParams qfc;
    //! True once dc_prob was given explicitly rather than derived.
    bool qfc_dc_explicit{false};
    DetectorModel det_stokes{0.43, 100, 40e-9, 0, 0, "stokes"};
    DetectorModel det_antistokes{0.43, 100, 40e-9, 0, 0, "antistokes"};

    std::optional<Sweep> sweep;
    AnalysisSettings analysis;

    //! Converter parameters as used in runs (telecom detector efficiency and,
    //! unless set, dark probability taken from the anti-Stokes detector).
    std::optional<QfcParams> effective_qfc() const
    {
        if (!qfc_enabled)
            return std::nullopt;
        QfcParams q = qfc;
        q.det_eta_1552 = det_antistokes.efficiency;
        if (!qfc_dc_explicit)
            q.dc_prob = det_antistokes.dark_mean_per_gate();
        return q;
    }

    void validate() const
    {
        if (n_cycles == 0)
            throw EmptyRunError("scenario: n_cycles must be > 0");
        source.validate();
        det_stokes.validate();
        det_antistokes.validate();
        if (auto q = effective_qfc())
            q->validate();
        if (sweep)
        {
            if (sweep->values.empty())
                throw ConfigError("sweep: no values");
            for (double v : sweep->values)
            {
                if (!std::isfinite(v))
                    throw ConfigError("sweep: non-finite value");
            }
            if (sweep->target_heralds && !(*sweep->target_heralds > 0))
                throw ConfigError("sweep: target_heralds must be > 0");
        }
        if (!(analysis.bin_s > 0))
            throw ConfigError("analysis: bin_s must be > 0");
        if (analysis.max_offset < 1)
            throw ConfigError("analysis: max_offset must be >= 1");
        if (analysis.jackknife_blocks == 1 || analysis.jackknife_blocks < 0)
            throw ConfigError("analysis: jackknife_blocks must be 0 or >= 2");
    }
};

//---------------------------------------------------------------------------//
namespace detail
{
inline std::string trim(std::string const& s)
{
    auto const b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double config_double(std::string const& v, int line)
{
    char* end = nullptr;
    double const d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
        throw ConfigError("invalid number '" + v + "'", line);
    return d;
}

inline std::uint64_t config_u64(std::string const& v, int line)
{
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("invalid unsigned integer '" + v + "'", line);
    errno = 0;
    auto const r = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE)
        throw ConfigError("integer out of range '" + v + "'", line);
    return r;
}

inline bool config_bool(std::string const& v, int line)
{
    if (v == "true" || v == "1" || v == "yes" || v == "on")
        return true;
    if (v == "false" || v == "0" || v == "no" || v == "off")
        return false;
    throw ConfigError("invalid boolean '" + v + "'", line);
}

inline std::vector<double> config_list(std::string const& v, int line)
{
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(config_double(trim(item), line));
    return out;
}

using Setter = std::function<void(Scenario&, std::string const&, int)>;

inline Setter set_double(double Scenario::*field)
{
    return [field](Scenario& s, std::string const& v, int line) {
        s.*field = config_double(v, line);
    };
}

template<class F>
inline Setter numeric(F&& assign)
{
    return [assign](Scenario& s, std::string const& v, int line) {
        assign(s, config_double(v, line));
    };
}

inline void add_detector_keys(std::map<std::string, Setter>& m,
                              std::string const& section,
                              DetectorModel Scenario::*det)
{
    m[section + ".efficiency"] = numeric(
        [det](Scenario& s, double x) { (s.*det).efficiency = x; });
    m[section + ".dark_rate_hz"] = numeric(
        [det](Scenario& s, double x) { (s.*det).dark_rate_hz = x; });
    m[section + ".gate_width_s"] = numeric(
        [det](Scenario& s, double x) { (s.*det).gate_width_s = x; });
    m[section + ".dead_time_s"] = numeric(
        [det](Scenario& s, double x) { (s.*det).dead_time_s = x; });
    m[section + ".timing_jitter_fwhm_s"] = numeric(
        [det](Scenario& s, double x) { (s.*det).timing_jitter_fwhm_s = x; });
    m[section + ".channel_id"] = [det](Scenario& s, std::string const& v, int line) {
        if (v.empty() || v.find_first_of(" \t=/") != std::string::npos)
            throw ConfigError("invalid channel_id '" + v + "'", line);
        (s.*det).channel_id = v;
    };
}

//! All recognized "section.key" names and how to apply them.
inline std::map<std::string, Setter> const& setters()
{
    static std::map<std::string, Setter> const table = [] {
        std::map<std::string, Setter> m;
        // [scenario]
        m["scenario.name"] = [](Scenario& s, std::string const& v, int line) {
            if (v.empty() || v.find_first_of(" \t/\\") != std::string::npos)
                throw ConfigError("invalid scenario name '" + v + "'", line);
            s.name = v;
        };
        m["scenario.n_cycles"] = [](Scenario& s, std::string const& v, int line) {
            s.n_cycles = config_u64(v, line);
        };
        m["scenario.seed"] = [](Scenario& s, std::string const& v, int line) {
            s.seed = config_u64(v, line);
        };
        m["scenario.threads"] = [](Scenario& s, std::string const& v, int line) {
            s.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, config_u64(v, line)));
        };
        m["scenario.split"] = [](Scenario& s, std::string const& v, int line) {
            if (v == "none")
                s.split = SplitMode::kNone;
            else if (v == "stokes")
                s.split = SplitMode::kStokes;
            else if (v == "antistokes")
                s.split = SplitMode::kAntiStokes;
            else if (v == "both")
                s.split = SplitMode::kBoth;
            else
                throw ConfigError("split must be none, stokes, antistokes or "
                                  "both",
                                  line);
        };
        m["scenario.statistics"] = [](Scenario& s, std::string const& v, int line) {
            if (v == "two_mode_squeezed")
                s.source.statistics = PhotonStatistics::kTwoModeSqueezed;
            else if (v == "independent_coherent")
                s.source.statistics = PhotonStatistics::kIndependentCoherent;
            else
                throw ConfigError("statistics must be two_mode_squeezed or "
                                  "independent_coherent",
                                  line);
        };
        m["scenario.write_streams"] = [](Scenario& s, std::string const& v, int line) {
            s.write_streams = config_bool(v, line);
        };
        m["scenario.stream_format"] = [](Scenario& s, std::string const& v, int line) {
            if (v == "binary")
                s.stream_format = TagFormat::kBinary;
            else if (v == "text")
                s.stream_format = TagFormat::kText;
            else
                throw ConfigError("stream_format must be binary or text", line);
        };
        m["scenario.outputs"] = [](Scenario& s, std::string const& v, int) {
            s.outputs = v;
        };

        // [source]
        auto src = [&](std::string const& key, double SourceParams::*field) {
            m["source." + key] = numeric(
                [field](Scenario& s, double x) { s.source.*field = x; });
        };
        src("mu", &SourceParams::mu);
        src("stokes_arm_eta", &SourceParams::stokes_arm_eta);
        src("retrieval_eta", &SourceParams::retrieval_eta);
        src("link_eta", &SourceParams::link_eta);
        src("storage_delay_s", &SourceParams::storage_delay_s);
        src("trial_period_s", &SourceParams::trial_period_s);
        src("cycle_dead_time_s", &SourceParams::cycle_dead_time_s);
        src("stokes_fwhm_s", &SourceParams::stokes_fwhm_s);
        src("antistokes_fwhm_s", &SourceParams::antistokes_fwhm_s);
        src("write_epoch_offset_s", &SourceParams::write_epoch_offset_s);
        src("antistokes_background_prob", &SourceParams::antistokes_background_prob);
        m["source.trials_per_cycle"] = [](Scenario& s, std::string const& v, int line) {
            s.source.trials_per_cycle = config_u64(v, line);
        };

        // [qfc]
        m["qfc.enabled"] = [](Scenario& s, std::string const& v, int line) {
            s.qfc_enabled = config_bool(v, line);
        };
        auto qfc = [&](std::string const& key, double QfcParams::*field) {
            m["qfc." + key] = numeric(
                [field](Scenario& s, double x) { s.qfc.*field = x; });
        };
        qfc("eta_max", &QfcParams::eta_max);
        qfc("eta_n_per_w_cm2", &QfcParams::eta_n_per_w_cm2);
        qfc("length_cm", &QfcParams::length_cm);
        qfc("pump_power_w", &QfcParams::pump_power_w);
        qfc("delta_n_per_w", &QfcParams::delta_n_per_w);
        qfc("filter_eta", &QfcParams::filter_eta);
        m["qfc.dc_prob"] = numeric([](Scenario& s, double x) {
            s.qfc.dc_prob = x;
            s.qfc_dc_explicit = true;
        });
        auto passive = [&](std::string const& key, double PassiveLossBudget::*field) {
            m["qfc." + key] = numeric(
                [field](Scenario& s, double x) { s.qfc.passive.*field = x; });
        };
        passive("waveguide_coupling", &PassiveLossBudget::waveguide_coupling);
        passive("waveguide_transmission", &PassiveLossBudget::waveguide_transmission);
        passive("fiber_coupling", &PassiveLossBudget::fiber_coupling);
        passive("filter_transmission", &PassiveLossBudget::filter_transmission);

        // [detector.*]
        add_detector_keys(m, "detector.stokes", &Scenario::det_stokes);
        add_detector_keys(m, "detector.antistokes", &Scenario::det_antistokes);

        // [sweep]
        m["sweep.parameter"] = [](Scenario& s, std::string const& v, int) {
            if (!s.sweep)
                s.sweep.emplace();
            s.sweep->parameter = v;
        };
        m["sweep.values"] = [](Scenario& s, std::string const& v, int line) {
            if (!s.sweep)
                s.sweep.emplace();
            s.sweep->values = config_list(v, line);
        };
        m["sweep.target_heralds"] = numeric([](Scenario& s, double x) {
            if (!s.sweep)
                s.sweep.emplace();
            s.sweep->target_heralds = x;
        });

        // [analysis]
        m["analysis.window_s"] = numeric(
            [](Scenario& s, double x) { s.analysis.window_s = x; });
        m["analysis.max_offset"] = [](Scenario& s, std::string const& v, int line) {
            s.analysis.max_offset = static_cast<int>(config_u64(v, line));
        };
        m["analysis.all_pairs"] = [](Scenario& s, std::string const& v, int line) {
            s.analysis.all_pairs = config_bool(v, line);
        };
        m["analysis.bin_s"] = numeric(
            [](Scenario& s, double x) { s.analysis.bin_s = x; });
        m["analysis.waveform_reference"]
            = [](Scenario& s, std::string const& v, int line) {
                  if (v == "gate_center")
                      s.analysis.waveform_reference = WaveformReference::kGateCenter;
                  else if (v == "herald")
                      s.analysis.waveform_reference = WaveformReference::kHeraldTag;
                  else
                      throw ConfigError("waveform_reference must be gate_center "
                                        "or herald",
                                        line);
              };
        m["analysis.measure_snr"] = [](Scenario& s, std::string const& v, int line) {
            s.analysis.measure_snr = config_bool(v, line);
        };
        m["analysis.fit_waveform"] = [](Scenario& s, std::string const& v, int line) {
            s.analysis.fit_waveform = config_bool(v, line);
        };
        m["analysis.jackknife_blocks"] = [](Scenario& s, std::string const& v, int line) {
            s.analysis.jackknife_blocks = static_cast<int>(config_u64(v, line));
        };
        return m;
    }();
    return table;
}

//! Sweepable names: every numeric key plus the derived herald probability.
inline bool is_sweepable(std::string const& name)
{
    static char const* const non_numeric[]
        = {"scenario.name",      "scenario.split",      "scenario.statistics",
           "scenario.outputs",   "scenario.stream_format", "sweep.parameter",
           "sweep.values",       "analysis.waveform_reference",
           "detector.stokes.channel_id", "detector.antistokes.channel_id"};
    if (name == "stokes_detection_prob")
        return true;
    if (!setters().count(name))
        return false;
    for (auto const* n : non_numeric)
    {
        if (name == n)
            return false;
    }
    return name.rfind("sweep.", 0) != 0;
}
}  // namespace detail

//---------------------------------------------------------------------------//
//! Applies one "section.key" = value assignment.
inline void set_scenario_key(Scenario& s,
                             std::string const& name,
                             std::string const& value,
                             int line = 0)
{
    auto const& table = detail::setters();
    auto it = table.find(name);
    if (it == table.end())
        throw ConfigError("unknown key '" + name + "'", line);
    it->second(s, detail::trim(value), line);
}

//! Applies a "section.key=value" override string.
inline void apply_override(Scenario& s, std::string const& assignment)
{
    auto const eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not key=value");
    set_scenario_key(s, detail::trim(assignment.substr(0, eq)),
                     assignment.substr(eq + 1));
}

/*!
 * Parses a scenario.
 *
 * Grammar: '[section]' headers, 'key = value' lines, '#' or ';' comments on
 * their own lines. Every key must be known; duplicates are errors. Errors
 * carry 1-based line numbers.
 */
inline Scenario parse_scenario(std::istream& is)
{
    Scenario s;
    std::string section;
    std::string raw;
    int line = 0;
    std::map<std::string, int> seen;
    while (std::getline(is, raw))
    {
        ++line;
        std::string const text = detail::trim(raw);
        if (text.empty() || text[0] == '#' || text[0] == ';')
            continue;
        if (text.front() == '[')
        {
            if (text.back() != ']' || text.size() < 3)
                throw ConfigError("malformed section header '" + text + "'", line);
            section = detail::trim(text.substr(1, text.size() - 2));
            static char const* const known[]
                = {"scenario", "source", "qfc", "detector.stokes",
                   "detector.antistokes", "sweep", "analysis"};
            if (std::find(std::begin(known), std::end(known), section)
                == std::end(known))
                throw ConfigError("unknown section [" + section + "]", line);
            continue;
        }
        auto const eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", line);
        if (section.empty())
            throw ConfigError("key outside of any section", line);
        std::string const key = section + "." + detail::trim(text.substr(0, eq));
        if (auto it = seen.find(key); it != seen.end())
            throw ConfigError("duplicate key '" + key + "' (first on line "
                                  + std::to_string(it->second) + ")",
                              line);
        seen[key] = line;
        set_scenario_key(s, key, text.substr(eq + 1), line);
    }
    if (s.sweep)
    {
        int const at = seen.count("sweep.parameter") ? seen["sweep.parameter"] : line;
        if (s.sweep->parameter.empty())
            throw ConfigError("sweep: missing parameter", at);
        if (!detail::is_sweepable(s.sweep->parameter))
            throw ConfigError("sweep: unknown or non-numeric parameter '"
                                  + s.sweep->parameter + "'",
                              at);
        if (s.sweep->values.empty())
            throw ConfigError("sweep: missing values", at);
    }
    s.validate();
    return s;
}

inline Scenario load_scenario(std::string const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open scenario '" + path + "'");
    try
    {
        return parse_scenario(in);
    }
    catch (EmptyRunError const& e)
    {
        throw EmptyRunError(path + ": " + e.what());
    }
    catch (ConfigError const& e)
    {
        throw ConfigError(path + ": " + e.what());
    }
}

//---------------------------------------------------------------------------//
/*!
 * Mean photon number giving a Stokes click probability \c p_s, inverting
 * 1 - e^{-d} / (1 + eta mu) with d the dark mean per gate.
 */
inline double mu_for_stokes_probability(double p_s,
                                        SourceParams const& src,
                                        DetectorModel const& det_s)
{
    double const eta = src.stokes_arm_eta * det_s.efficiency;
    double const dark = det_s.dark_mean_per_gate();
    if (!(p_s > 0 && p_s < 1))
        throw DomainError("stokes_detection_prob must lie in (0, 1)");
    if (!(eta > 0))
        throw DomainError("stokes_detection_prob: Stokes arm efficiency is zero");
    double const ratio = std::exp(-dark) / (1 - p_s);
    if (!(ratio > 1))
        throw DomainError("stokes_detection_prob " + std::to_string(p_s)
                          + " is below the dark-count floor");
    if (src.statistics == PhotonStatistics::kTwoModeSqueezed)
        return (ratio - 1) / eta;
    return std::log(ratio) / eta;
}

//! Scenario for sweep point \c index (the scenario itself without a sweep).
inline Scenario sweep_point(Scenario const& base, std::size_t index)
{
    Scenario s = base;
    if (!base.sweep)
        return s;
    auto const& sw = *base.sweep;
    double const v = sw.values.at(index);
    if (sw.parameter == "stokes_detection_prob")
        s.source.mu = mu_for_stokes_probability(v, s.source, s.det_stokes);
    else
        set_scenario_key(s, sw.parameter, detail::format_double(v));
    if (sw.target_heralds)
    {
        double const p = expected_stokes_click_probability(s.source, s.det_stokes);
        double const per_cycle = p * static_cast<double>(s.source.trials_per_cycle);
        if (per_cycle > 0)
            s.n_cycles = std::max<std::uint64_t>(
                1, static_cast<std::uint64_t>(std::ceil(*sw.target_heralds / per_cycle)));
    }
    s.sweep.reset();
    s.validate();
    return s;
}

inline std::size_t sweep_size(Scenario const& s)
{
    return s.sweep ? s.sweep->values.size() : 1;
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
