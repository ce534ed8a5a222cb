//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/tag_stream.hpp
//! Detector click streams and their on-disk formats (docs/tagstream-format.md).
//---------------------------------------------------------------------------//
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
/*!
 * Trial and cycle timing of the write-read sequence.
 *
 * Trial t of cycle c starts at c (T dtau + gap) + t dtau.
 */
struct TrialClock
{
    double trial_period_s{1.4e-6};
    std::uint64_t trials_per_cycle{1000};
    double cycle_dead_time_s{20e-3};

    double cycle_period() const
    {
        return static_cast<double>(trials_per_cycle) * trial_period_s
               + cycle_dead_time_s;
    }

    double trial_start(std::uint64_t cycle, std::uint64_t trial) const
    {
        return static_cast<double>(cycle) * cycle_period()
               + static_cast<double>(trial) * trial_period_s;
    }

    struct Location
    {
        std::uint64_t cycle{0};
        std::uint64_t trial{0};  //!< index within the cycle
        double local{0};         //!< seconds since trial start
        bool valid{false};       //!< false inside the cooling gap
    };

    Location locate(double t) const
    {
        Location loc;
        if (!(t >= 0))
            return loc;
        double const cp = cycle_period();
        double const c = std::floor(t / cp);
        double rem = t - c * cp;
        if (rem < 0)
            rem = 0;
        double const tr = std::floor(rem / trial_period_s);
        loc.cycle = static_cast<std::uint64_t>(c);
        if (tr >= static_cast<double>(trials_per_cycle))
            return loc;
        loc.trial = static_cast<std::uint64_t>(tr);
        loc.local = rem - tr * trial_period_s;
        loc.valid = true;
        return loc;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Ordered click timestamps of one detector channel.
 *
 * Every tag sits inside the channel's gate, centred \c gate_center_s after the
 * start of its trial. The clock fields let the analyzer map tags back to
 * trials and cycles.
 */
struct TagStream
{
    std::string channel_id;
    std::vector<double> tags;
    std::uint64_t total_trials{0};
    double trial_period_s{1.4e-6};
    double storage_delay_s{330e-9};
    std::uint64_t trials_per_cycle{1000};
    double cycle_dead_time_s{20e-3};
    double gate_center_s{0};
    double gate_width_s{40e-9};

    TrialClock clock() const
    {
        return {trial_period_s, trials_per_cycle, cycle_dead_time_s};
    }

    std::uint64_t n_cycles() const
    {
        return trials_per_cycle ? total_trials / trials_per_cycle : 0;
    }

    //! Throws ConfigError naming the first violated invariant.
    void validate() const
    {
        if (total_trials == 0)
            throw ConfigError("stream '" + channel_id + "': total_trials is 0");
        if (trials_per_cycle == 0 || total_trials % trials_per_cycle != 0)
            throw ConfigError("stream '" + channel_id
                              + "': total_trials is not a whole number of "
                                "cycles");
        if (!(trial_period_s > 0) || !(gate_width_s > 0))
            throw ConfigError("stream '" + channel_id
                              + "': trial period and gate width must be > 0");
        auto const clk = clock();
        double const half = 0.5 * gate_width_s;
        double const slack = 1e-9 * gate_width_s + 1e-15;
        for (std::size_t i = 0; i < tags.size(); ++i)
        {
            if (i > 0 && !(tags[i] > tags[i - 1]))
                throw ConfigError("stream '" + channel_id
                                  + "': tags not strictly increasing at index "
                                  + std::to_string(i));
            auto const loc = clk.locate(tags[i]);
            bool const in_gate = loc.valid
                                 && std::abs(loc.local - gate_center_s)
                                        <= half + slack
                                 && loc.cycle * trials_per_cycle + loc.trial
                                        < total_trials;
            if (!in_gate)
                throw ConfigError("stream '" + channel_id + "': tag " + std::to_string(i)
                                  + " lies outside every gate");
        }
    }
};

//! True when both streams share the trial timing structure.
inline bool same_clock(TagStream const& a, TagStream const& b)
{
    return a.trial_period_s == b.trial_period_s
           && a.trials_per_cycle == b.trials_per_cycle
           && a.cycle_dead_time_s == b.cycle_dead_time_s
           && a.total_trials == b.total_trials;
}

//! Union of two channels with identical clocks and gates.
inline TagStream merge_streams(TagStream const& a, TagStream const& b)
{
    if (!same_clock(a, b) || a.gate_center_s != b.gate_center_s
        || a.gate_width_s != b.gate_width_s)
        throw ConfigError("merge_streams: streams '" + a.channel_id + "' and '"
                          + b.channel_id + "' have different timing");
    TagStream out = a;
    out.channel_id = a.channel_id + "+" + b.channel_id;
    out.tags.clear();
    out.tags.reserve(a.tags.size() + b.tags.size());
    std::size_t i = 0, j = 0;
    while (i < a.tags.size() || j < b.tags.size())
    {
        double t;
        if (j == b.tags.size() || (i < a.tags.size() && a.tags[i] <= b.tags[j]))
            t = a.tags[i++];
        else
            t = b.tags[j++];
        if (out.tags.empty() || t > out.tags.back())
            out.tags.push_back(t);
    }
    return out;
}

//---------------------------------------------------------------------------//
// FILE FORMATS
//---------------------------------------------------------------------------//
namespace detail
{
inline constexpr char kTextMagic[] = "# qmemsim-tags v1";
inline constexpr char kBinaryMagic[8] = {'Q', 'M', 'T', 'A', 'G', 'S', '0', '1'};

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string header_text(TagStream const& s)
{
    std::ostringstream os;
    os << "channel_id=" << s.channel_id << '\n'
       << "trial_period_s=" << format_double(s.trial_period_s) << '\n'
       << "storage_delay_s=" << format_double(s.storage_delay_s) << '\n'
       << "total_trials=" << s.total_trials << '\n'
       << "trials_per_cycle=" << s.trials_per_cycle << '\n'
       << "cycle_dead_time_s=" << format_double(s.cycle_dead_time_s) << '\n'
       << "gate_center_s=" << format_double(s.gate_center_s) << '\n'
       << "gate_width_s=" << format_double(s.gate_width_s) << '\n'
       << "n_tags=" << s.tags.size() << '\n';
    return os.str();
}

inline double parse_double(std::string const& v, std::string const& where)
{
    if (v.empty())
        throw ParseError("empty number", where);
    char* end = nullptr;
    double const d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || !std::isfinite(d))
        throw ParseError("invalid number '" + v + "'", where);
    return d;
}

inline std::uint64_t parse_u64(std::string const& v, std::string const& where)
{
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
        throw ParseError("invalid unsigned integer '" + v + "'", where);
    char* end = nullptr;
    return std::strtoull(v.c_str(), &end, 10);
}

//! Applies "key=value" header lines; returns the declared tag count.
inline std::uint64_t
apply_header(TagStream& s,
             std::vector<std::pair<std::string, std::string>> const& kv,
             std::vector<std::string> const& where)
{
    static char const* const required[]
        = {"channel_id",    "trial_period_s",   "storage_delay_s",
           "total_trials",  "trials_per_cycle", "cycle_dead_time_s",
           "gate_center_s", "gate_width_s",     "n_tags"};
    std::map<std::string, std::size_t> seen;
    std::uint64_t n_tags = 0;
    for (std::size_t i = 0; i < kv.size(); ++i)
    {
        auto const& [key, value] = kv[i];
        auto const& at = where[i];
        if (seen.count(key))
            throw ParseError("duplicate header key '" + key + "'", at);
        seen[key] = i;
        if (key == "channel_id")
            s.channel_id = value;
        else if (key == "trial_period_s")
            s.trial_period_s = parse_double(value, at);
        else if (key == "storage_delay_s")
            s.storage_delay_s = parse_double(value, at);
        else if (key == "total_trials")
            s.total_trials = parse_u64(value, at);
        else if (key == "trials_per_cycle")
            s.trials_per_cycle = parse_u64(value, at);
        else if (key == "cycle_dead_time_s")
            s.cycle_dead_time_s = parse_double(value, at);
        else if (key == "gate_center_s")
            s.gate_center_s = parse_double(value, at);
        else if (key == "gate_width_s")
            s.gate_width_s = parse_double(value, at);
        else if (key == "n_tags")
            n_tags = parse_u64(value, at);
        else
            throw ParseError("unknown header key '" + key + "'", at);
    }
    for (char const* k : required)
    {
        if (!seen.count(k))
            throw ParseError(std::string("missing header key '") + k + "'",
                             where.empty() ? "header" : where.back());
    }
    return n_tags;
}

inline std::pair<std::string, std::string>
split_key_value(std::string const& line, std::string const& where)
{
    auto const eq = line.find('=');
    if (eq == std::string::npos)
        throw ParseError("expected key=value, got '" + line + "'", where);
    return {line.substr(0, eq), line.substr(eq + 1)};
}
}  // namespace detail

//---------------------------------------------------------------------------//
//! Text format: magic line, header lines, then one timestamp per line.
inline void write_text(std::ostream& os, TagStream const& s)
{
    os << detail::kTextMagic << '\n' << detail::header_text(s);
    for (double t : s.tags)
        os << detail::format_double(t) << '\n';
}

//! Binary format: magic, u32 header length, header text, u64 count, f64 tags.
inline void write_binary(std::ostream& os, TagStream const& s)
{
    static_assert(std::endian::native == std::endian::little,
                  "binary tag format is little-endian");
    std::string const header = detail::header_text(s);
    auto const header_len = static_cast<std::uint32_t>(header.size());
    std::uint64_t const n = s.tags.size();
    os.write(detail::kBinaryMagic, 8);
    os.write(reinterpret_cast<char const*>(&header_len), 4);
    os.write(header.data(), header_len);
    os.write(reinterpret_cast<char const*>(&n), 8);
    os.write(reinterpret_cast<char const*>(s.tags.data()),
             static_cast<std::streamsize>(n * sizeof(double)));
}

inline TagStream read_text(std::istream& is)
{
    TagStream s;
    std::string line;
    int lineno = 0;
    auto where = [&] { return "line " + std::to_string(lineno); };
    if (!std::getline(is, line) || (++lineno, line != detail::kTextMagic))
        throw ParseError("missing '" + std::string(detail::kTextMagic)
                             + "' magic line",
                         "line 1");
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<std::string> positions;
    for (int i = 0; i < 9; ++i)
    {
        if (!std::getline(is, line))
            throw ParseError("truncated header", "line " + std::to_string(lineno + 1));
        ++lineno;
        kv.push_back(detail::split_key_value(line, where()));
        positions.push_back(where());
    }
    std::uint64_t const n = detail::apply_header(s, kv, positions);
    s.tags.reserve(n);
    while (std::getline(is, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        s.tags.push_back(detail::parse_double(line, where()));
    }
    if (s.tags.size() != n)
        throw ParseError("header declares " + std::to_string(n)
                             + " tags but file holds "
                             + std::to_string(s.tags.size()),
                         where());
    return s;
}

inline TagStream read_binary(std::istream& is)
{
    TagStream s;
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, detail::kBinaryMagic, 8) != 0)
        throw ParseError("bad magic", "byte 0");
    std::uint32_t header_len = 0;
    if (!is.read(reinterpret_cast<char*>(&header_len), 4))
        throw ParseError("truncated header length", "byte 8");
    if (header_len > (1u << 20))
        throw ParseError("implausible header length", "byte 8");
    std::string header(header_len, '\0');
    if (!is.read(header.data(), header_len))
        throw ParseError("truncated header", "byte 12");
    std::vector<std::pair<std::string, std::string>> kv;
    std::vector<std::string> positions;
    std::istringstream hs(header);
    std::string line;
    std::size_t offset = 12;
    while (std::getline(hs, line))
    {
        std::string const at = "byte " + std::to_string(offset);
        kv.push_back(detail::split_key_value(line, at));
        positions.push_back(at);
        offset += line.size() + 1;
    }
    std::uint64_t const declared = detail::apply_header(s, kv, positions);
    std::size_t const count_at = 12 + header_len;
    std::uint64_t n = 0;
    if (!is.read(reinterpret_cast<char*>(&n), 8))
        throw ParseError("truncated tag count", "byte " + std::to_string(count_at));
    if (n != declared)
        throw ParseError("tag count " + std::to_string(n)
                             + " disagrees with header n_tags="
                             + std::to_string(declared),
                         "byte " + std::to_string(count_at));
    s.tags.resize(n);
    is.read(reinterpret_cast<char*>(s.tags.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    auto const got = static_cast<std::uint64_t>(is.gcount());
    if (got != n * sizeof(double))
        throw ParseError("truncated tag data after "
                             + std::to_string(got / sizeof(double)) + " tags",
                         "byte " + std::to_string(count_at + 8 + got));
    for (std::uint64_t i = 0; i < n; ++i)
    {
        if (!std::isfinite(s.tags[i]))
            throw ParseError("non-finite timestamp",
                             "byte " + std::to_string(count_at + 8 + 8 * i));
    }
    return s;
}

//! Reads either format, detected from the leading bytes.
inline TagStream read_tag_stream(std::istream& is)
{
    int const c = is.peek();
    if (c == 'Q')
        return read_binary(is);
    return read_text(is);
}

inline TagStream read_tag_stream(std::string const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot open tag stream '" + path + "'");
    try
    {
        return read_tag_stream(is);
    }
    catch (ParseError const& e)
    {
        throw ParseError(e.what(), path);
    }
}

enum class TagFormat
{
    kBinary,
    kText
};

inline void write_tag_stream(std::string const& path,
                             TagStream const& s,
                             TagFormat format = TagFormat::kBinary)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw ConfigError("cannot write tag stream '" + path + "'");
    if (format == TagFormat::kBinary)
        write_binary(os, s);
    else
        write_text(os, s);
    if (!os)
        throw ConfigError("write failed for '" + path + "'");
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
