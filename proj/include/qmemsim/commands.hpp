//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/commands.hpp
//! Batch operations behind the command-line verbs.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "chain_sim.hpp"
#include "config.hpp"
#include "error.hpp"
#include "fit.hpp"
#include "qfc.hpp"
#include "stats.hpp"
#include "tag_stream.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! Channels available for analysis; the optional ones enable more outputs.
struct StreamSet
{
    TagStream stokes;
    TagStream antistokes;
    std::optional<TagStream> stokes_b;
    std::optional<TagStream> antistokes_b;
    //! Telecom channel with the converter input blocked (noise only).
    std::optional<TagStream> blocked;
};

//! Quantities reported by analyze_streams, in output order.
inline std::vector<std::string> const& estimate_names()
{
    static std::vector<std::string> const names{
        "p_s",      "p_as",     "p_sas",   "rate_s_hz", "rate_as_hz",
        "rate_sas_hz", "g2_s_as", "eta_r", "g2_s_s",    "g2_as_as",
        "R",        "snr",      "fwhm_s"};
    return names;
}

namespace detail
{
inline CorrelationEstimate undefined_estimate()
{
    double const nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, 0, 0};
}

template<class F>
inline CorrelationEstimate or_undefined(F&& f)
{
    try
    {
        return f();
    }
    catch (InfiniteEstimateError const&)
    {
        return undefined_estimate();
    }
}

inline CorrelationEstimate g2_estimate(TagStream const& a,
                                       TagStream const& b,
                                       AnalysisSettings const& settings)
{
    auto const opts = settings.histogram();
    return or_undefined([&] {
        if (settings.jackknife_blocks >= 2)
            return g2_jackknife(build_blocked_histograms(
                a, b, opts, static_cast<std::size_t>(settings.jackknife_blocks)));
        return g2_from_histogram(build_histogram(a, b, opts));
    });
}

inline TagStream merged(TagStream const& a, std::optional<TagStream> const& b)
{
    return b ? merge_streams(a, *b) : a;
}
}  // namespace detail

/*!
 * Correlation estimates for one set of streams.
 *
 * Split arms are merged for the cross-correlation, singles and retrieval
 * efficiency; autocorrelations and R need the split arms. Undefined values
 * (missing channels, empty denominators) are NaN.
 */
inline std::vector<NamedEstimate> analyze_streams(StreamSet const& streams,
                                                  AnalysisSettings const& settings,
                                                  double antistokes_det_eta)
{
    TagStream const s = detail::merged(streams.stokes, streams.stokes_b);
    TagStream const as = detail::merged(streams.antistokes, streams.antistokes_b);
    auto const clock = s.clock();
    auto const hopts = settings.histogram();
    std::map<std::string, CorrelationEstimate> out;
    for (auto const& n : estimate_names())
        out[n] = detail::undefined_estimate();

    auto const p_s = singles_probability(s, settings.all_pairs);
    auto const p_as = singles_probability(as, settings.all_pairs);
    auto const h = build_histogram(s, as, hopts);
    auto const p_sas = coincidence_probability(h);
    out["p_s"] = p_s;
    out["p_as"] = p_as;
    out["p_sas"] = p_sas;
    // Trials per second averaged over the cycle, including the cooling gap
    double const scale = rates(1.0, clock);
    auto rate = [&](CorrelationEstimate const& p) {
        return CorrelationEstimate{p.value * scale, p.sigma * scale,
                                   p.n_coincidences, 0};
    };
    out["rate_s_hz"] = rate(p_s);
    out["rate_as_hz"] = rate(p_as);
    out["rate_sas_hz"] = rate(p_sas);
    out["g2_s_as"] = detail::g2_estimate(s, as, settings);
    if (p_s.value > 0)
        out["eta_r"] = retrieval_efficiency(p_s, p_sas, antistokes_det_eta);
    if (streams.stokes_b)
        out["g2_s_s"] = detail::g2_estimate(streams.stokes, *streams.stokes_b,
                                            settings);
    if (streams.antistokes_b)
        out["g2_as_as"] = detail::g2_estimate(streams.antistokes,
                                              *streams.antistokes_b, settings);
    auto const& cross = out["g2_s_as"];
    auto const& aa = out["g2_s_s"];
    auto const& bb = out["g2_as_as"];
    if (std::isfinite(cross.value) && aa.value > 0 && bb.value > 0)
        out["R"] = cauchy_schwarz(cross, aa, bb);
    if (streams.blocked)
    {
        out["snr"] = detail::or_undefined([&] {
            return conditional_snr(s, as, *streams.blocked, hopts);
        });
    }
    if (settings.fit_waveform)
    {
        auto const w = conditional_waveform(s, as, settings.waveform());
        if (w.total() > 0)
        {
            auto const pts = histogram_points(w.bin_centers, w.counts);
            auto const fit = fit_gaussian_peak(pts);
            if (fit.converged)
                out["fwhm_s"] = {fit.value("fwhm"), fit.sigma("fwhm"), w.total(), 0};
        }
    }

    std::vector<NamedEstimate> rows;
    for (auto const& n : estimate_names())
        rows.push_back({n, out[n]});
    return rows;
}

//---------------------------------------------------------------------------//
// SIMULATE
//---------------------------------------------------------------------------//
//! Streams of one scenario point, plus the blocked companion when requested.
inline StreamSet simulate_point(Scenario const& sc)
{
    RunOptions opts;
    opts.split = sc.split;
    opts.threads = sc.threads;
    auto const qfc = sc.effective_qfc();
    auto run = run_experiment(sc.source, qfc, sc.det_stokes, sc.det_antistokes,
                              sc.n_cycles, sc.seed, opts);
    StreamSet set{std::move(run.stokes), std::move(run.antistokes),
                  std::move(run.stokes_b), std::move(run.antistokes_b),
                  std::nullopt};
    if (sc.analysis.measure_snr && qfc)
    {
        // Converter input blocked (no read light); independent engine family
        SourceParams blocked = sc.source;
        blocked.retrieval_eta = 0;
        blocked.antistokes_background_prob = 0;
        RunOptions bopts = opts;
        bopts.split = SplitMode::kNone;
        auto noise = run_experiment(blocked, qfc, sc.det_stokes, sc.det_antistokes,
                                    sc.n_cycles, sc.seed ^ 0x5bd1e9955bd1e995ull,
                                    bopts);
        noise.antistokes.channel_id += "_blocked";
        set.blocked = std::move(noise.antistokes);
    }
    return set;
}

inline void write_summary_header(std::ostream& os, Scenario const& sc)
{
    os << "point," << (sc.sweep ? sc.sweep->parameter : std::string("none"))
       << ",mu,n_cycles";
    for (auto const& n : estimate_names())
        os << ',' << n << ',' << n << "_sigma";
    os << '\n';
}

inline void write_summary_row(std::ostream& os,
                              std::size_t index,
                              double sweep_value,
                              Scenario const& point,
                              std::vector<NamedEstimate> const& rows)
{
    os << index << ',' << detail::format_double(sweep_value) << ','
       << detail::format_double(point.source.mu) << ',' << point.n_cycles;
    for (auto const& r : rows)
        os << ',' << detail::format_double(r.estimate.value) << ','
           << detail::format_double(r.estimate.sigma);
    os << '\n';
}

inline std::string stream_extension(TagFormat f)
{
    return f == TagFormat::kBinary ? ".qmt" : ".txt";
}

/*!
 * Runs every sweep point, writing streams under out_dir/point_NNN/ (when
 * enabled) and one summary row per point to out_dir/summary.csv. Returns the
 * per-point estimates.
 */
inline std::vector<std::vector<NamedEstimate>>
cmd_simulate(Scenario const& sc, std::filesystem::path const& out_dir,
             std::ostream* log = nullptr)
{
    namespace fs = std::filesystem;
    sc.validate();
    fs::create_directories(out_dir);
    std::ofstream summary(out_dir / "summary.csv", std::ios::trunc);
    if (!summary)
        throw ConfigError("cannot write '" + (out_dir / "summary.csv").string() + "'");
    write_summary_header(summary, sc);

    std::vector<std::vector<NamedEstimate>> all;
    for (std::size_t i = 0; i < sweep_size(sc); ++i)
    {
        Scenario const point = sweep_point(sc, i);
        double const value = sc.sweep ? sc.sweep->values[i] : 0.0;
        if (log)
            *log << sc.name << ": point " << i << " (mu="
                 << detail::format_double(point.source.mu) << ", cycles="
                 << point.n_cycles << ")\n";
        auto const streams = simulate_point(point);
        if (sc.write_streams)
        {
            char dir[32];
            std::snprintf(dir, sizeof(dir), "point_%03zu", i);
            fs::path const pdir = out_dir / dir;
            fs::create_directories(pdir);
            std::string const ext = stream_extension(sc.stream_format);
            auto put = [&](char const* name, std::optional<TagStream> const& s) {
                if (s)
                    write_tag_stream((pdir / (std::string(name) + ext)).string(),
                                     *s, sc.stream_format);
            };
            put("stokes", streams.stokes);
            put("antistokes", streams.antistokes);
            put("stokes_b", streams.stokes_b);
            put("antistokes_b", streams.antistokes_b);
            put("blocked", streams.blocked);
        }
        auto rows = analyze_streams(streams, point.analysis,
                                    point.det_antistokes.efficiency);
        write_summary_row(summary, i, value, point, rows);
        all.push_back(std::move(rows));
    }
    if (!summary)
        throw ConfigError("write failed for summary.csv");
    return all;
}

//---------------------------------------------------------------------------//
// ANALYZE
//---------------------------------------------------------------------------//
/*!
 * Estimates, cross-correlation histogram and conditional waveform for a set
 * of stream files. Writes estimates.csv, histogram.csv and waveform.csv.
 */
inline std::vector<NamedEstimate> cmd_analyze(StreamSet const& streams,
                                              AnalysisSettings const& settings,
                                              double antistokes_det_eta,
                                              std::filesystem::path const& out_dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto const rows = analyze_streams(streams, settings, antistokes_det_eta);
    auto open = [&](char const* name) {
        std::ofstream os(out_dir / name, std::ios::trunc);
        if (!os)
            throw ConfigError("cannot write '" + (out_dir / name).string() + "'");
        return os;
    };
    {
        auto os = open("estimates.csv");
        write_estimates_csv(os, rows);
    }
    TagStream const s = detail::merged(streams.stokes, streams.stokes_b);
    TagStream const as = detail::merged(streams.antistokes, streams.antistokes_b);
    {
        auto os = open("histogram.csv");
        write_histogram_csv(os, build_histogram(s, as, settings.histogram()));
    }
    {
        auto os = open("waveform.csv");
        write_waveform_csv(os, conditional_waveform(s, as, settings.waveform()));
    }
    return rows;
}

//---------------------------------------------------------------------------//
// PREDICT
//---------------------------------------------------------------------------//
//! eta_dev on an evenly spaced pump grid.
inline void predict_efficiency_csv(std::ostream& os, QfcParams const& q,
                                   double p_min, double p_max, int n)
{
    if (n < 1 || !(p_max >= p_min) || !(p_min >= 0))
        throw DomainError("predict: pump grid needs 0 <= p_min <= p_max and "
                          "points >= 1");
    os << "pump_w,eta_dev\n";
    for (int i = 0; i < n; ++i)
    {
        double const p = n == 1 ? p_min : p_min + (p_max - p_min) * i / (n - 1);
        os << detail::format_double(p) << ','
           << detail::format_double(device_efficiency(q, p)) << '\n';
    }
}

inline void predict_snr_csv(std::ostream& os, QfcParams q, double mu_in,
                            double p_min, double p_max, int n)
{
    if (n < 1 || !(p_max >= p_min) || !(p_min >= 0))
        throw DomainError("predict: pump grid needs 0 <= p_min <= p_max and "
                          "points >= 1");
    os << "pump_w,eta_dev,noise_prob,snr\n";
    for (int i = 0; i < n; ++i)
    {
        q.pump_power_w = n == 1 ? p_min : p_min + (p_max - p_min) * i / (n - 1);
        os << detail::format_double(q.pump_power_w) << ','
           << detail::format_double(device_efficiency(q)) << ','
           << detail::format_double(noise_detection_probability(q)) << ','
           << detail::format_double(snr_predict(q, mu_in)) << '\n';
    }
}

//! g2 after conversion on the (g2_in x SNR) grid.
inline void predict_g2c_csv(std::ostream& os, std::vector<double> const& g2_in,
                            std::vector<double> const& snr)
{
    os << "g2_in,snr,g2c\n";
    for (double g : g2_in)
    {
        for (double r : snr)
        {
            auto const p = predict_conversion(g, r);
            os << detail::format_double(p.g2_in) << ','
               << detail::format_double(p.snr) << ','
               << detail::format_double(p.g2_out) << '\n';
        }
    }
}

inline void predict_crossover_csv(std::ostream& os, std::vector<double> const& eta,
                                  LinkBudget budget = {})
{
    os << "eta_dev,crossover_km\n";
    for (double e : eta)
    {
        budget.device_eta = e;
        os << detail::format_double(e) << ','
           << detail::format_double(crossover_distance(budget)) << '\n';
    }
}

//---------------------------------------------------------------------------//
// FIT
//---------------------------------------------------------------------------//
enum class FitModelKind
{
    kSin2,
    kLinearOrigin,
    kGaussian
};

inline FitModelKind parse_fit_model(std::string const& name)
{
    if (name == "sin2")
        return FitModelKind::kSin2;
    if (name == "linear_origin")
        return FitModelKind::kLinearOrigin;
    if (name == "gaussian")
        return FitModelKind::kGaussian;
    throw ConfigError("unknown fit model '" + name
                      + "' (expected sin2, linear_origin or gaussian)");
}

inline FitResult cmd_fit(std::vector<FitPoint> const& points, FitModelKind model,
                         double length_cm, FitOptions const& opts = {})
{
    switch (model)
    {
        case FitModelKind::kSin2:
            return fit_sin2_efficiency(points, length_cm, opts);
        case FitModelKind::kLinearOrigin:
            if (points.size() < 2)
                throw ConfigError("linear_origin fit needs at least 2 points");
            return fit_linear_origin(points, opts);
        case FitModelKind::kGaussian:
            return fit_gaussian_peak(points, opts);
    }
    throw ConfigError("unknown fit model");
}

//---------------------------------------------------------------------------//
// PRESETS
//---------------------------------------------------------------------------//
struct PresetInfo
{
    std::string name;
    std::string description;
    std::filesystem::path path;
};

//! Presets are "<name>.ini" files; the description is the first comment line.
inline std::vector<PresetInfo> list_presets(std::filesystem::path const& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
        throw ConfigError("preset directory '" + dir.string() + "' not found");
    std::vector<PresetInfo> out;
    for (auto const& entry : fs::directory_iterator(dir))
    {
        if (entry.path().extension() != ".ini")
            continue;
        PresetInfo info{entry.path().stem().string(), {}, entry.path()};
        std::ifstream in(entry.path());
        std::string line;
        while (std::getline(in, line))
        {
            auto const t = detail::trim(line);
            if (t.empty())
                continue;
            if (t[0] == '#')
                info.description = detail::trim(t.substr(1));
            break;
        }
        out.push_back(std::move(info));
    }
    std::sort(out.begin(), out.end(),
              [](auto const& a, auto const& b) { return a.name < b.name; });
    return out;
}

inline std::filesystem::path preset_path(std::filesystem::path const& dir,
                                         std::string const& name)
{
    auto const p = dir / (name + ".ini");
    if (!std::filesystem::exists(p))
        throw ConfigError("unknown preset '" + name + "' (see preset-list)");
    return p;
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
