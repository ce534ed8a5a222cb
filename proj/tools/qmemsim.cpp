//---------------------------------*-C++-*-----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tools/qmemsim.cpp
//! Command-line front end: simulate, analyze, predict, fit, preset-list.
//---------------------------------------------------------------------------//
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qmemsim/commands.hpp"

#ifndef QMEMSIM_PRESET_DIR
#    define QMEMSIM_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace qmemsim;

namespace
{
enum ExitCode
{
    kSuccess = 0,
    kConfigFailure = 2,
    kNumericalFailure = 3
};

fs::path preset_dir()
{
    if (char const* env = std::getenv("QMEMSIM_PRESET_DIR"))
        return env;
    return QMEMSIM_PRESET_DIR;
}

//! Options shared by the scenario-driven verbs.
struct ScenarioArgs
{
    std::string scenario;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> cycles;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;

    void add_to(CLI::App& app, bool required)
    {
        auto* g = app.add_option_group("scenario source");
        g->add_option("--scenario", scenario, "Scenario file");
        g->add_option("--preset", preset, "Named preset (see preset-list)");
        if (required)
            g->require_option(1);
        else
            g->require_option(0, 1);
        app.add_option("--seed", seed, "Override the scenario seed");
        app.add_option("--cycles", cycles,
                       "Override n_cycles (disables per-point herald targets)");
        app.add_option("--threads", threads, "Worker threads");
        app.add_option("--set", overrides, "Override a key: section.key=value");
    }

    bool given() const { return !scenario.empty() || !preset.empty(); }

    Scenario load() const
    {
        std::string const path = !scenario.empty()
                                     ? scenario
                                     : preset_path(preset_dir(), preset).string();
        Scenario sc = load_scenario(path);
        for (auto const& o : overrides)
            apply_override(sc, o);
        if (seed)
            sc.seed = *seed;
        if (cycles)
        {
            sc.n_cycles = *cycles;
            if (sc.sweep)
                sc.sweep->target_heralds.reset();
        }
        if (threads)
            sc.threads = std::max(1u, *threads);
        sc.validate();
        return sc;
    }
};

template<class F>
int guarded(F&& body)
{
    try
    {
        return body();
    }
    catch (NumericalError const& e)
    {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
    catch (ConfigError const& e)
    {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfigFailure;
    }
    catch (DomainError const& e)
    {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kConfigFailure;
    }
    catch (fs::filesystem_error const& e)
    {
        std::cerr << "file error: " << e.what() << '\n';
        return kConfigFailure;
    }
}

//! Writes to a file, or stdout for an empty path or "-".
template<class F>
void with_output(std::string const& path, F&& write)
{
    if (path.empty() || path == "-")
    {
        write(std::cout);
        return;
    }
    if (auto parent = fs::path(path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw ConfigError("cannot write '" + path + "'");
    write(os);
}

std::vector<double> parse_list(std::string const& text, char const* what)
{
    try
    {
        return detail::config_list(text, 0);
    }
    catch (ConfigError const&)
    {
        throw ConfigError(std::string("--") + what + ": invalid number list '"
                          + text + "'");
    }
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo reproduction of a heralded quantum memory with "
                 "telecom frequency conversion"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    //--- simulate ---------------------------------------------------------//
    auto* sim = app.add_subcommand("simulate", "Run a scenario; write tag "
                                               "streams and summary.csv");
    ScenarioArgs sim_args;
    sim_args.add_to(*sim, true);
    std::string sim_out = "out";
    sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
    bool sim_quiet = false;
    sim->add_flag("--quiet", sim_quiet, "No progress lines");

    //--- analyze ----------------------------------------------------------//
    auto* ana = app.add_subcommand("analyze", "Correlation estimates from tag "
                                              "stream files");
    ScenarioArgs ana_args;
    ana_args.add_to(*ana, false);
    std::string f_s, f_as, f_sb, f_asb, f_blocked;
    ana->add_option("--stokes", f_s, "Stokes stream")->required()->check(CLI::ExistingFile);
    ana->add_option("--antistokes", f_as, "anti-Stokes stream")
        ->required()
        ->check(CLI::ExistingFile);
    ana->add_option("--stokes-b", f_sb, "Second Stokes detector")->check(CLI::ExistingFile);
    ana->add_option("--antistokes-b", f_asb, "Second anti-Stokes detector")
        ->check(CLI::ExistingFile);
    ana->add_option("--blocked", f_blocked, "Converted channel with blocked input")
        ->check(CLI::ExistingFile);
    double det_eta = 0.43;
    ana->add_option("--det-eta", det_eta, "anti-Stokes detector efficiency")
        ->capture_default_str();
    std::string ana_out = "analysis";
    ana->add_option("--out", ana_out, "Output directory")->capture_default_str();
    std::optional<double> ana_window, ana_bin;
    std::optional<int> ana_offsets, ana_jack;
    bool ana_all_pairs = false, ana_fit = false;
    std::string ana_ref;
    ana->add_option("--window", ana_window, "Coincidence window [s]");
    ana->add_option("--max-offset", ana_offsets, "Accidental offsets per side");
    ana->add_flag("--all-pairs", ana_all_pairs, "Count every tag pair");
    ana->add_option("--bin", ana_bin, "Waveform bin width [s]");
    ana->add_option("--reference", ana_ref, "Waveform reference")
        ->check(CLI::IsMember({"gate_center", "herald"}));
    ana->add_flag("--fit-waveform", ana_fit, "Gaussian fit of the waveform");
    ana->add_option("--jackknife", ana_jack, "Jackknife blocks for g2 errors");

    //--- predict ----------------------------------------------------------//
    auto* pre = app.add_subcommand("predict", "Analytic model curves");
    ScenarioArgs pre_args;
    pre_args.add_to(*pre, false);
    std::string curve;
    pre->add_option("--curve", curve, "Curve to tabulate")
        ->required()
        ->check(CLI::IsMember({"efficiency", "snr", "g2c", "crossover"}));
    double p_min = 0, p_max = 0.3, mu_in = 1;
    int n_points = 31;
    pre->add_option("--pump-min", p_min, "Lowest pump power [W]")->capture_default_str();
    pre->add_option("--pump-max", p_max, "Highest pump power [W]")->capture_default_str();
    pre->add_option("--points", n_points, "Grid points")->capture_default_str();
    pre->add_option("--mu-in", mu_in, "Mean input photons (snr)")->capture_default_str();
    std::string g2_list = "2,5,22,60", snr_list = "5,18,85";
    std::string eta_list = "0.001,0.01,0.1,0.136,1";
    std::optional<double> eta_r_in, snr_max;
    pre->add_option("--g2", g2_list, "g2 inputs (g2c)")->capture_default_str();
    pre->add_option("--snr", snr_list, "SNR values (g2c)")->capture_default_str();
    pre->add_option("--eta-r-in", eta_r_in, "Retrieval efficiency; with "
                                            "--snr-max sets SNR = eta_r_in * snr_max");
    pre->add_option("--snr-max", snr_max, "SNR for one input photon");
    pre->add_option("--eta", eta_list, "Device efficiencies (crossover)")
        ->capture_default_str();
    std::string pre_out;
    pre->add_option("--out", pre_out, "Output CSV (default stdout)");

    //--- fit --------------------------------------------------------------//
    auto* fit = app.add_subcommand("fit", "Least-squares fit of a points CSV");
    std::string fit_points, fit_model, fit_out;
    double fit_length = QfcParams{}.length_cm;
    bool fit_unweighted = false;
    fit->add_option("--points", fit_points, "CSV with header x,y,sigma")
        ->required()
        ->check(CLI::ExistingFile);
    fit->add_option("--model", fit_model, "Model")
        ->required()
        ->check(CLI::IsMember({"sin2", "linear_origin", "gaussian"}));
    fit->add_option("--length-cm", fit_length, "Crystal length (sin2)")
        ->capture_default_str();
    fit->add_flag("--unweighted", fit_unweighted, "Ignore sigma column");
    fit->add_option("--out", fit_out, "Report CSV (default stdout)");

    //--- preset-list ------------------------------------------------------//
    auto* plist = app.add_subcommand("preset-list", "List bundled presets");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const rc = app.exit(e);
        return rc == 0 ? kSuccess : kConfigFailure;
    }

    if (*sim)
    {
        return guarded([&] {
            Scenario const sc = sim_args.load();
            fs::path const out = sc.outputs.empty() || sim->count("--out")
                                     ? fs::path(sim_out)
                                     : fs::path(sc.outputs);
            cmd_simulate(sc, out, sim_quiet ? nullptr : &std::cerr);
            if (!sim_quiet)
                std::cerr << "wrote " << (out / "summary.csv").string() << '\n';
            return int{kSuccess};
        });
    }
    if (*ana)
    {
        return guarded([&] {
            AnalysisSettings settings;
            if (ana_args.given())
                settings = ana_args.load().analysis;
            if (ana_window)
                settings.window_s = *ana_window;
            if (ana_offsets)
                settings.max_offset = *ana_offsets;
            if (ana_all_pairs)
                settings.all_pairs = true;
            if (ana_bin)
                settings.bin_s = *ana_bin;
            if (!ana_ref.empty())
                settings.waveform_reference = ana_ref == "herald"
                                                  ? WaveformReference::kHeraldTag
                                                  : WaveformReference::kGateCenter;
            if (ana_fit)
                settings.fit_waveform = true;
            if (ana_jack)
                settings.jackknife_blocks = *ana_jack;
            StreamSet set{read_tag_stream(f_s), read_tag_stream(f_as), {}, {}, {}};
            if (!f_sb.empty())
                set.stokes_b = read_tag_stream(f_sb);
            if (!f_asb.empty())
                set.antistokes_b = read_tag_stream(f_asb);
            if (!f_blocked.empty())
                set.blocked = read_tag_stream(f_blocked);
            cmd_analyze(set, settings, det_eta, ana_out);
            return int{kSuccess};
        });
    }
    if (*pre)
    {
        return guarded([&] {
            std::optional<QfcParams> q;
            if (pre_args.given())
            {
                Scenario const sc = pre_args.load();
                QfcParams p = sc.qfc;
                p.det_eta_1552 = sc.det_antistokes.efficiency;
                if (!sc.qfc_dc_explicit)
                    p.dc_prob = sc.det_antistokes.dark_mean_per_gate();
                q = p;
            }
            QfcParams const params = q.value_or(QfcParams{});
            params.validate();
            with_output(pre_out, [&](std::ostream& os) {
                if (curve == "efficiency")
                {
                    predict_efficiency_csv(os, params, p_min, p_max, n_points);
                }
                else if (curve == "snr")
                {
                    predict_snr_csv(os, params, mu_in, p_min, p_max, n_points);
                }
                else if (curve == "g2c")
                {
                    std::vector<double> snr;
                    if (eta_r_in || snr_max)
                    {
                        if (!eta_r_in || !snr_max)
                            throw ConfigError("--eta-r-in and --snr-max go together");
                        snr = {*eta_r_in * *snr_max};
                    }
                    else
                    {
                        snr = parse_list(snr_list, "snr");
                    }
                    predict_g2c_csv(os, parse_list(g2_list, "g2"), snr);
                }
                else
                {
                    predict_crossover_csv(os, parse_list(eta_list, "eta"));
                }
            });
            return int{kSuccess};
        });
    }
    if (*fit)
    {
        return guarded([&] {
            std::ifstream in(fit_points);
            auto const points = read_points_csv(in, fit_points);
            FitOptions opts;
            opts.weighted = !fit_unweighted;
            auto const result
                = cmd_fit(points, parse_fit_model(fit_model), fit_length, opts);
            with_output(fit_out, [&](std::ostream& os) {
                write_fit_report(os, result);
            });
            if (!result.converged)
            {
                std::cerr << "fit did not converge: " << result.diagnostic << '\n';
                return int{kNumericalFailure};
            }
            return int{kSuccess};
        });
    }
    if (*plist)
    {
        return guarded([&] {
            for (auto const& p : list_presets(preset_dir()))
                std::cout << p.name << "\t" << p.description << '\n';
            return int{kSuccess};
        });
    }
    return kConfigFailure;
}
