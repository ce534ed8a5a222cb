//---------------------------------*-C++-*-----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tests/test_tag_stream.cpp
//---------------------------------------------------------------------------//
#include "qmemsim/tag_stream.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qmemsim/error.hpp"

using namespace qmemsim;

namespace
{
TagStream sample_stream()
{
    TagStream s;
    s.channel_id = "as";
    s.total_trials = 2000;
    s.trial_period_s = 1.4e-6;
    s.trials_per_cycle = 1000;
    s.cycle_dead_time_s = 20e-3;
    s.gate_center_s = 380e-9;
    s.gate_width_s = 40e-9;
    auto const clk = s.clock();
    for (std::uint64_t c : {0u, 1u})
    {
        for (std::uint64_t t : {0u, 7u, 999u})
            s.tags.push_back(clk.trial_start(c, t) + 380e-9 + 1.234567e-9 * double(t % 10 + 1));
    }
    return s;
}

std::string as_text(TagStream const& s)
{
    std::ostringstream os;
    write_text(os, s);
    return os.str();
}

std::string as_binary(TagStream const& s)
{
    std::ostringstream os(std::ios::binary);
    write_binary(os, s);
    return os.str();
}

void expect_same(TagStream const& a, TagStream const& b)
{
    EXPECT_EQ(a.channel_id, b.channel_id);
    EXPECT_EQ(a.tags, b.tags);
    EXPECT_EQ(a.total_trials, b.total_trials);
    EXPECT_EQ(a.trial_period_s, b.trial_period_s);
    EXPECT_EQ(a.storage_delay_s, b.storage_delay_s);
    EXPECT_EQ(a.trials_per_cycle, b.trials_per_cycle);
    EXPECT_EQ(a.cycle_dead_time_s, b.cycle_dead_time_s);
    EXPECT_EQ(a.gate_center_s, b.gate_center_s);
    EXPECT_EQ(a.gate_width_s, b.gate_width_s);
}
}  // namespace

TEST(TrialClock, Locate)
{
    TrialClock const clk;
    auto const loc = clk.locate(clk.trial_start(3, 17) + 0.5e-6);
    EXPECT_TRUE(loc.valid);
    EXPECT_EQ(loc.cycle, 3u);
    EXPECT_EQ(loc.trial, 17u);
    EXPECT_NEAR(loc.local, 0.5e-6, 1e-15);
    // Inside the cooling gap
    EXPECT_FALSE(clk.locate(clk.trial_start(0, 1000) + 1e-3).valid);
    EXPECT_FALSE(clk.locate(-1).valid);
    EXPECT_NEAR(clk.cycle_period(), 1000 * 1.4e-6 + 20e-3, 1e-15);
}

TEST(TagStream, ValidateAcceptsSample)
{
    auto const s = sample_stream();
    EXPECT_NO_THROW(s.validate());
    EXPECT_EQ(s.n_cycles(), 2u);
}

TEST(TagStream, ValidateRejects)
{
    auto s = sample_stream();
    std::swap(s.tags[0], s.tags[1]);
    EXPECT_THROW(s.validate(), ConfigError);
    s = sample_stream();
    s.tags[2] += 100e-9;  // outside the gate
    EXPECT_THROW(s.validate(), ConfigError);
    s = sample_stream();
    s.total_trials = 0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = sample_stream();
    s.total_trials = 1500;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(TagStream, TextRoundTrip)
{
    auto const s = sample_stream();
    std::istringstream is(as_text(s));
    expect_same(read_tag_stream(is), s);
}

TEST(TagStream, BinaryRoundTrip)
{
    auto const s = sample_stream();
    std::istringstream is(as_binary(s), std::ios::binary);
    expect_same(read_tag_stream(is), s);
}

TEST(TagStream, EmptyRoundTrip)
{
    auto s = sample_stream();
    s.tags.clear();
    std::istringstream t(as_text(s));
    expect_same(read_tag_stream(t), s);
    std::istringstream b(as_binary(s), std::ios::binary);
    expect_same(read_tag_stream(b), s);
}

TEST(TagStream, TextParseErrorsCarryLine)
{
    std::string text = as_text(sample_stream());
    // Corrupt the second timestamp (line 12: magic + 9 header lines + 2)
    auto pos = text.find('\n');
    for (int i = 0; i < 10; ++i)
        pos = text.find('\n', pos + 1);
    std::string bad = text.substr(0, pos + 1) + "12abc\n"
                      + text.substr(text.find('\n', pos + 1) + 1);
    std::istringstream is(bad);
    try
    {
        read_tag_stream(is);
        FAIL() << "expected ParseError";
    }
    catch (ParseError const& e)
    {
        EXPECT_EQ(e.position(), "line 12");
    }

    std::istringstream no_magic("hello\n");
    EXPECT_THROW(read_tag_stream(no_magic), ParseError);

    std::istringstream truncated(text.substr(0, text.size() - 30));
    EXPECT_THROW(read_tag_stream(truncated), ParseError);
}

TEST(TagStream, BinaryParseErrorsCarryByte)
{
    std::string const bin = as_binary(sample_stream());
    std::istringstream cut(bin.substr(0, bin.size() - 4), std::ios::binary);
    try
    {
        read_tag_stream(cut);
        FAIL() << "expected ParseError";
    }
    catch (ParseError const& e)
    {
        EXPECT_EQ(e.position().rfind("byte ", 0), 0u);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
    std::string bad_magic = bin;
    bad_magic[3] = 'x';
    std::istringstream bm(bad_magic, std::ios::binary);
    EXPECT_THROW(read_tag_stream(bm), ParseError);
}

TEST(TagStream, MergeStreams)
{
    auto a = sample_stream();
    auto b = sample_stream();
    b.channel_id = "as_b";
    b.tags.erase(b.tags.begin());
    b.tags.push_back(b.tags.back() + 1e-9);
    auto const m = merge_streams(a, b);
    EXPECT_EQ(m.tags.size(), a.tags.size() + 1);
    EXPECT_TRUE(std::is_sorted(m.tags.begin(), m.tags.end()));
    b.trial_period_s = 2e-6;
    EXPECT_THROW(merge_streams(a, b), ConfigError);
}
