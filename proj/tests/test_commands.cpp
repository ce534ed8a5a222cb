//---------------------------------*-C++-*-----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tests/test_commands.cpp
//---------------------------------------------------------------------------//
#include "qmemsim/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

using namespace qmemsim;
namespace fs = std::filesystem;

namespace
{
fs::path fresh_dir(std::string const& name)
{
    auto const p = fs::temp_directory_path() / ("qmemsim_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

double value_of(std::vector<NamedEstimate> const& rows, std::string const& name)
{
    for (auto const& r : rows)
        if (r.quantity == name)
            return r.estimate.value;
    return std::nan("");
}

Scenario small_scenario()
{
    std::istringstream is(R"([scenario]
n_cycles = 200
seed = 5
split = both
[source]
mu = 0.02
)");
    return parse_scenario(is);
}
}  // namespace

TEST(Simulate, SmokeRunIsEmpty)
{
    auto sc = load_scenario(preset_path(QMEMSIM_PRESET_DIR, "smoke").string());
    auto const out = fresh_dir("smoke");
    auto const rows = cmd_simulate(sc, out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(value_of(rows[0], "p_s"), 0.0);
    EXPECT_EQ(value_of(rows[0], "rate_as_hz"), 0.0);
    EXPECT_TRUE(std::isnan(value_of(rows[0], "g2_s_as")));
    auto const s = read_tag_stream((out / "point_000" / "stokes.txt").string());
    EXPECT_TRUE(s.tags.empty());
    EXPECT_TRUE(fs::exists(out / "summary.csv"));
}

TEST(Simulate, SummaryColumns)
{
    auto const out = fresh_dir("summary");
    cmd_simulate(small_scenario(), out);
    std::istringstream is(slurp(out / "summary.csv"));
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header.rfind("point,none,mu,n_cycles,p_s,p_s_sigma,p_as", 0), 0u);
    auto const commas = [](std::string const& s) {
        return std::count(s.begin(), s.end(), ',');
    };
    EXPECT_EQ(commas(header), commas(row));
    for (char const* f : {"stokes", "antistokes", "stokes_b", "antistokes_b"})
        EXPECT_TRUE(fs::exists(out / "point_000" / (std::string(f) + ".qmt"))) << f;
}

TEST(Simulate, DeterministicAcrossThreads)
{
    auto sc = small_scenario();
    auto const a = fresh_dir("det_a");
    auto const b = fresh_dir("det_b");
    sc.threads = 1;
    cmd_simulate(sc, a);
    sc.threads = 4;
    cmd_simulate(sc, b);
    EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
    EXPECT_EQ(slurp(a / "point_000" / "antistokes.qmt"),
              slurp(b / "point_000" / "antistokes.qmt"));
}

TEST(Analyze, MatchesSimulateAndIsIdempotent)
{
    auto const sc = small_scenario();
    auto const sim_dir = fresh_dir("an_sim");
    auto const rows = cmd_simulate(sc, sim_dir);
    auto const p = sim_dir / "point_000";
    StreamSet set{read_tag_stream((p / "stokes.qmt").string()),
                  read_tag_stream((p / "antistokes.qmt").string()),
                  read_tag_stream((p / "stokes_b.qmt").string()),
                  read_tag_stream((p / "antistokes_b.qmt").string()),
                  std::nullopt};
    auto const a = fresh_dir("an_a");
    auto const again = cmd_analyze(set, sc.analysis, 0.43, a);
    for (auto const& name : estimate_names())
    {
        double const x = value_of(rows[0], name), y = value_of(again, name);
        if (std::isnan(x))
            EXPECT_TRUE(std::isnan(y)) << name;
        else
            EXPECT_EQ(x, y) << name;
    }
    auto const b = fresh_dir("an_b");
    cmd_analyze(set, sc.analysis, 0.43, b);
    for (char const* f : {"estimates.csv", "histogram.csv", "waveform.csv"})
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    EXPECT_TRUE(std::isfinite(value_of(again, "g2_s_as")));
}

TEST(Predict, CrossoverTable)
{
    std::ostringstream os;
    predict_crossover_csv(os, {0.001, 0.01, 0.1});
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "eta_dev,crossover_km");
    for (double expected : {10.71, 7.14, 3.57})
    {
        std::getline(is, line);
        double const km = std::stod(line.substr(line.find(',') + 1));
        EXPECT_NEAR(km, expected, 0.005);
    }
    std::ostringstream bad;
    EXPECT_THROW(predict_crossover_csv(bad, {2.0}), DomainError);
}

TEST(Predict, EfficiencyStartsAtZero)
{
    std::ostringstream os;
    predict_efficiency_csv(os, QfcParams{}, 0, 0.3, 4);
    EXPECT_EQ(os.str().substr(0, 19), "pump_w,eta_dev\n0,0\n");
    std::ostringstream bad;
    EXPECT_THROW(predict_efficiency_csv(bad, QfcParams{}, 0.3, 0.1, 4), DomainError);
}

TEST(Predict, G2cBandFromRetrieval)
{
    // SNR = eta_R^in * SNR_max with eta_R^in = 0.25, SNR_max = 85
    std::ostringstream os;
    predict_g2c_csv(os, {22}, {0.25 * 85});
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    double const g2c = std::stod(line.substr(line.rfind(',') + 1));
    EXPECT_NEAR(g2c, 22 * 22.25 / 43.25, 1e-12);
}

TEST(Fit, ModelsByName)
{
    EXPECT_EQ(parse_fit_model("sin2"), FitModelKind::kSin2);
    EXPECT_EQ(parse_fit_model("linear_origin"), FitModelKind::kLinearOrigin);
    EXPECT_EQ(parse_fit_model("gaussian"), FitModelKind::kGaussian);
    EXPECT_THROW(parse_fit_model("cubic"), ConfigError);
    std::vector<FitPoint> one{{1, 85, 1}};
    EXPECT_THROW(cmd_fit(one, FitModelKind::kLinearOrigin, 4.14), ConfigError);
}

TEST(Presets, Listing)
{
    auto const list = list_presets(QMEMSIM_PRESET_DIR);
    std::vector<std::string> names;
    for (auto const& p : list)
        names.push_back(p.name);
    for (char const* n : {"fig2a", "fig2b", "fig3a", "fig4", "figS5", "smoke",
                          "tableI", "tableI_classical"})
        EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
    EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
    EXPECT_THROW(list_presets("/nonexistent"), ConfigError);
}
