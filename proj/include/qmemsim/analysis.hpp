//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/analysis.hpp
//! Coincidence histograms, correlation estimators, efficiencies and waveforms
//! recovered from tag streams.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chain_sim.hpp"
#include "error.hpp"
#include "tag_stream.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! A correlation-type estimate with its counting statistics.
struct CorrelationEstimate
{
    double value{0};
    double sigma{0};
    std::uint64_t n_coincidences{0};
    std::uint64_t n_accidentals{0};
};

/*!
 * Coincidence counts per trial offset n.
 *
 * \c opportunities holds the number of trial pairs that could contribute to
 * each offset: pairs crossing a cycle boundary are excluded, so offset n has
 * (T - |n|) opportunities per cycle.
 */
struct CoincidenceHistogram
{
    std::vector<int> offsets;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> opportunities;
    double window_s{0};
    std::uint64_t n_trials{0};

    std::size_t index_of(int offset) const
    {
        auto it = std::find(offsets.begin(), offsets.end(), offset);
        if (it == offsets.end())
            throw ConfigError("histogram has no offset " + std::to_string(offset));
        return static_cast<std::size_t>(it - offsets.begin());
    }

    std::uint64_t count_at(int offset) const { return counts[index_of(offset)]; }

    CoincidenceHistogram& operator+=(CoincidenceHistogram const& other)
    {
        if (offsets != other.offsets)
            throw ConfigError("cannot add histograms with different offsets");
        for (std::size_t i = 0; i < counts.size(); ++i)
        {
            counts[i] += other.counts[i];
            opportunities[i] += other.opportunities[i];
        }
        n_trials += other.n_trials;
        return *this;
    }
};

struct HistogramOptions
{
    //! Coincidence window; defaults to the narrower of the two gates.
    std::optional<double> window_s;
    int max_offset{20};
    //! Count every tag pair instead of at most one per trial pair.
    bool all_pairs{false};
    //! Expected b - a delay; defaults to the difference of gate centres
    //! (storage delay for Stokes/anti-Stokes, zero for auto pairs).
    std::optional<double> delay_s;
};

//---------------------------------------------------------------------------//
namespace detail
{
//! Tags grouped by global trial index (cycle * T + trial).
struct TrialGroups
{
    std::vector<std::uint64_t> trial;   //!< one entry per group
    std::vector<std::size_t> begin;     //!< group g spans [begin[g], begin[g+1])
    std::vector<double> local;          //!< time since trial start, per tag
};

inline TrialGroups group_by_trial(TagStream const& s)
{
    TrialGroups out;
    auto const clk = s.clock();
    out.local.reserve(s.tags.size());
    for (std::size_t i = 0; i < s.tags.size(); ++i)
    {
        auto const loc = clk.locate(s.tags[i]);
        if (!loc.valid)
            throw ConfigError("stream '" + s.channel_id + "': tag "
                              + std::to_string(i) + " lies in a cooling gap");
        std::uint64_t const g = loc.cycle * s.trials_per_cycle + loc.trial;
        if (g >= s.total_trials)
            throw ConfigError("stream '" + s.channel_id + "': tag "
                              + std::to_string(i) + " beyond the last trial");
        if (out.trial.empty() || out.trial.back() != g)
        {
            out.trial.push_back(g);
            out.begin.push_back(i);
        }
        out.local.push_back(loc.local);
    }
    out.begin.push_back(s.tags.size());
    return out;
}

inline void check_pair(TagStream const& a, TagStream const& b)
{
    if (a.trial_period_s != b.trial_period_s)
        throw ConfigError("streams '" + a.channel_id + "' and '" + b.channel_id
                          + "' have different trial periods");
    if (!same_clock(a, b))
        throw ConfigError("streams '" + a.channel_id + "' and '" + b.channel_id
                          + "' have different cycle structure");
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Coincidence histograms accumulated separately over \c n_blocks contiguous
 * groups of cycles (for resampling error estimates).
 *
 * A pair of tags counts at offset n when the b tag lies n trials after the a
 * tag, within the same cycle, and t_b - t_a - n dtau is within window/2 of
 * the expected delay.
 */
inline std::vector<CoincidenceHistogram>
build_blocked_histograms(TagStream const& a,
                         TagStream const& b,
                         HistogramOptions const& opts,
                         std::size_t n_blocks)
{
    detail::check_pair(a, b);
    if (opts.max_offset < 1)
        throw ConfigError("max_offset must be >= 1");
    double const window
        = opts.window_s.value_or(std::min(a.gate_width_s, b.gate_width_s));
    if (!(window > 0))
        throw ConfigError("coincidence window must be > 0");
    if (window > std::max(a.gate_width_s, b.gate_width_s) * (1 + 1e-12))
        throw ConfigError("coincidence window exceeds the gate width");
    double const delay = opts.delay_s.value_or(b.gate_center_s - a.gate_center_s);
    double const half = 0.5 * window;

    std::uint64_t const T = a.trials_per_cycle;
    std::uint64_t const n_cycles = a.n_cycles();
    if (n_cycles == 0)
        throw ConfigError("streams contain no complete cycle");
    n_blocks = std::clamp<std::size_t>(n_blocks, 1, n_cycles);
    auto block_of_cycle = [&](std::uint64_t c) {
        return static_cast<std::size_t>(c * n_blocks / n_cycles);
    };

    std::vector<int> offsets;
    for (int n = -opts.max_offset; n <= opts.max_offset; ++n)
        offsets.push_back(n);

    std::vector<CoincidenceHistogram> hist(n_blocks);
    std::vector<std::uint64_t> cycles_in_block(n_blocks, 0);
    for (std::uint64_t c = 0; c < n_cycles; ++c)
        ++cycles_in_block[block_of_cycle(c)];
    for (std::size_t k = 0; k < n_blocks; ++k)
    {
        auto& h = hist[k];
        h.offsets = offsets;
        h.counts.assign(offsets.size(), 0);
        h.opportunities.assign(offsets.size(), 0);
        h.window_s = window;
        h.n_trials = cycles_in_block[k] * T;
        for (std::size_t i = 0; i < offsets.size(); ++i)
        {
            auto const n = static_cast<std::uint64_t>(std::abs(offsets[i]));
            h.opportunities[i] = n < T ? cycles_in_block[k] * (T - n) : 0;
        }
    }

    auto const ga = detail::group_by_trial(a);
    auto const gb = detail::group_by_trial(b);
    for (std::size_t oi = 0; oi < offsets.size(); ++oi)
    {
        long long const n = offsets[oi];
        std::size_t j = 0;
        for (std::size_t g = 0; g < ga.trial.size(); ++g)
        {
            std::uint64_t const ta = ga.trial[g];
            long long const within = static_cast<long long>(ta % T) + n;
            if (within < 0 || within >= static_cast<long long>(T))
                continue;
            std::uint64_t const target = ta + static_cast<std::uint64_t>(n);
            while (j < gb.trial.size() && gb.trial[j] < target)
                ++j;
            if (j == gb.trial.size())
                break;
            if (gb.trial[j] != target)
                continue;
            std::uint64_t pairs = 0;
            for (std::size_t ia = ga.begin[g]; ia < ga.begin[g + 1]; ++ia)
            {
                for (std::size_t ib = gb.begin[j]; ib < gb.begin[j + 1]; ++ib)
                {
                    if (std::abs(gb.local[ib] - ga.local[ia] - delay) <= half)
                        ++pairs;
                }
            }
            if (pairs == 0)
                continue;
            hist[block_of_cycle(ta / T)].counts[oi] += opts.all_pairs ? pairs : 1;
        }
    }
    return hist;
}

//! Coincidence histogram between streams \c a and \c b.
inline CoincidenceHistogram build_histogram(TagStream const& a,
                                            TagStream const& b,
                                            HistogramOptions const& opts = {})
{
    auto blocks = build_blocked_histograms(a, b, opts, 1);
    return blocks.front();
}

//---------------------------------------------------------------------------//
/*!
 * g2 = (zero-offset coincidence rate) / (mean accidental rate).
 *
 * Rates are per opportunity, which reduces to counts[0] / mean(counts[n != 0])
 * when all offsets have equal opportunities. The error is Poisson:
 * sigma = g2 sqrt(1/N0 + 1/sum N_n).
 */
inline CorrelationEstimate g2_from_histogram(CoincidenceHistogram const& h)
{
    std::size_t const zero = h.index_of(0);
    if (h.offsets.size() < 2)
        throw ConfigError("histogram needs accidental offsets");
    std::uint64_t n0 = h.counts[zero];
    std::uint64_t acc = 0;
    std::uint64_t acc_opp = 0;
    for (std::size_t i = 0; i < h.counts.size(); ++i)
    {
        if (i == zero)
            continue;
        acc += h.counts[i];
        acc_opp += h.opportunities[i];
    }
    if (acc == 0 || acc_opp == 0)
        throw InfiniteEstimateError("g2: no accidental coincidences", n0, acc);
    double const opp0 = static_cast<double>(h.opportunities[zero]);
    double const acc_rate = static_cast<double>(acc) / static_cast<double>(acc_opp);
    CorrelationEstimate est;
    est.n_coincidences = n0;
    est.n_accidentals = acc;
    est.value = (static_cast<double>(n0) / opp0) / acc_rate;
    if (n0 > 0)
        est.sigma = est.value
                    * std::sqrt(1.0 / static_cast<double>(n0)
                                + 1.0 / static_cast<double>(acc));
    else
        est.sigma = (1.0 / opp0) / acc_rate;  // resolution of one count
    return est;
}

/*!
 * g2 with a delete-one-block jackknife error over groups of cycles.
 *
 * The value is the pooled estimate; only the error differs from
 * g2_from_histogram.
 */
inline CorrelationEstimate
g2_jackknife(std::vector<CoincidenceHistogram> const& blocks)
{
    if (blocks.size() < 2)
        throw ConfigError("jackknife needs at least 2 blocks");
    CoincidenceHistogram total = blocks.front();
    for (std::size_t k = 1; k < blocks.size(); ++k)
        total += blocks[k];
    CorrelationEstimate est = g2_from_histogram(total);
    double const nb = static_cast<double>(blocks.size());
    std::vector<double> loo;
    loo.reserve(blocks.size());
    for (auto const& blk : blocks)
    {
        CoincidenceHistogram rest = total;
        for (std::size_t i = 0; i < rest.counts.size(); ++i)
        {
            rest.counts[i] -= blk.counts[i];
            rest.opportunities[i] -= blk.opportunities[i];
        }
        rest.n_trials -= blk.n_trials;
        loo.push_back(g2_from_histogram(rest).value);
    }
    double mean = 0;
    for (double v : loo)
        mean += v;
    mean /= nb;
    double ss = 0;
    for (double v : loo)
        ss += (v - mean) * (v - mean);
    est.sigma = std::sqrt((nb - 1) / nb * ss);
    return est;
}

//---------------------------------------------------------------------------//
/*!
 * Fraction of trials with a click (or mean clicks per trial when
 * \c all_pairs), with Poisson error.
 */
inline CorrelationEstimate singles_probability(TagStream const& s,
                                               bool all_pairs = false)
{
    if (s.total_trials == 0)
        throw ConfigError("stream '" + s.channel_id + "' has no trials");
    std::uint64_t count = 0;
    if (all_pairs)
    {
        count = s.tags.size();
    }
    else
    {
        auto const groups = detail::group_by_trial(s);
        count = groups.trial.size();
    }
    CorrelationEstimate est;
    double const n = static_cast<double>(s.total_trials);
    est.value = static_cast<double>(count) / n;
    est.sigma = std::sqrt(static_cast<double>(count)) / n;
    est.n_coincidences = count;
    return est;
}

//! Zero-offset coincidence probability per trial from a histogram.
inline CorrelationEstimate coincidence_probability(CoincidenceHistogram const& h)
{
    std::size_t const zero = h.index_of(0);
    CorrelationEstimate est;
    double const opp = static_cast<double>(h.opportunities[zero]);
    est.n_coincidences = h.counts[zero];
    est.value = static_cast<double>(h.counts[zero]) / opp;
    est.sigma = std::sqrt(static_cast<double>(h.counts[zero])) / opp;
    return est;
}

//---------------------------------------------------------------------------//
//! eta_R = p_sas / (p_s eta_d).
inline double retrieval_efficiency(double p_s, double p_sas, double det_eta)
{
    if (!(p_s > 0) || !(det_eta > 0))
        throw DomainError("retrieval_efficiency: p_s and det_eta must be > 0");
    return p_sas / (p_s * det_eta);
}

//! eta_R from counts, sigma = eta_R sqrt(1/N_sas + 1/N_s).
inline CorrelationEstimate
retrieval_efficiency(CorrelationEstimate const& p_s,
                     CorrelationEstimate const& p_sas,
                     double det_eta)
{
    CorrelationEstimate est;
    est.value = retrieval_efficiency(p_s.value, p_sas.value, det_eta);
    double rel2 = 0;
    if (p_sas.n_coincidences > 0)
        rel2 += 1.0 / static_cast<double>(p_sas.n_coincidences);
    if (p_s.n_coincidences > 0)
        rel2 += 1.0 / static_cast<double>(p_s.n_coincidences);
    est.sigma = est.value * std::sqrt(rel2);
    est.n_coincidences = p_sas.n_coincidences;
    return est;
}

//---------------------------------------------------------------------------//
/*!
 * Cauchy-Schwarz parameter R = g2_ab^2 / (g2_aa g2_bb); R > 1 certifies
 * non-classical correlations. First-order error propagation.
 */
inline CorrelationEstimate cauchy_schwarz(CorrelationEstimate const& cross,
                                          CorrelationEstimate const& auto_a,
                                          CorrelationEstimate const& auto_b)
{
    if (!(auto_a.value > 0) || !(auto_b.value > 0))
        throw DomainError("cauchy_schwarz: autocorrelations must be > 0");
    CorrelationEstimate r;
    r.value = cross.value * cross.value / (auto_a.value * auto_b.value);
    double rel2 = std::pow(auto_a.sigma / auto_a.value, 2)
                  + std::pow(auto_b.sigma / auto_b.value, 2);
    if (cross.value > 0)
        rel2 += std::pow(2 * cross.sigma / cross.value, 2);
    r.sigma = r.value * std::sqrt(rel2);
    r.n_coincidences = cross.n_coincidences;
    r.n_accidentals = cross.n_accidentals;
    return r;
}

inline CorrelationEstimate cauchy_schwarz(double cross, double auto_a, double auto_b)
{
    return cauchy_schwarz(CorrelationEstimate{cross, 0, 0, 0},
                          CorrelationEstimate{auto_a, 0, 0, 0},
                          CorrelationEstimate{auto_b, 0, 0, 0});
}

//---------------------------------------------------------------------------//
enum class WaveformReference
{
    kGateCenter,  //!< b arrival time relative to its gate centre
    kHeraldTag    //!< t_b - t_a - delay
};

struct WaveformOptions
{
    double bin_s{1.28e-9};
    WaveformReference reference{WaveformReference::kGateCenter};
    std::optional<double> delay_s;
};

//! Histogram with bins centred on k * bin_s.
struct Waveform
{
    std::vector<double> bin_centers;
    std::vector<std::uint64_t> counts;
    double bin_s{0};

    std::uint64_t total() const
    {
        std::uint64_t t = 0;
        for (auto c : counts)
            t += c;
        return t;
    }
};

/*!
 * Arrival-time histogram of b tags in trials that also hold an a tag.
 *
 * By default times are measured from the centre of b's gate, which is how a
 * heralded photon's temporal shape is recorded against the trial trigger.
 * With the herald reference each (a, b) pair contributes t_b - t_a - delay.
 */
inline Waveform conditional_waveform(TagStream const& a,
                                     TagStream const& b,
                                     WaveformOptions const& opts = {})
{
    detail::check_pair(a, b);
    if (!(opts.bin_s > 0))
        throw ConfigError("waveform bin width must be > 0");
    bool const herald = opts.reference == WaveformReference::kHeraldTag;
    double const span = herald ? a.gate_width_s + b.gate_width_s : b.gate_width_s;
    auto const half_bins
        = static_cast<long long>(std::floor(0.5 * span / opts.bin_s + 0.5));
    Waveform w;
    w.bin_s = opts.bin_s;
    for (long long k = -half_bins; k <= half_bins; ++k)
        w.bin_centers.push_back(static_cast<double>(k) * opts.bin_s);
    w.counts.assign(w.bin_centers.size(), 0);
    double const delay = opts.delay_s.value_or(b.gate_center_s - a.gate_center_s);

    auto add = [&](double x) {
        long long const k = std::llround(x / opts.bin_s);
        if (k < -half_bins || k > half_bins)
            return;
        ++w.counts[static_cast<std::size_t>(k + half_bins)];
    };

    auto const ga = detail::group_by_trial(a);
    auto const gb = detail::group_by_trial(b);
    std::size_t j = 0;
    for (std::size_t g = 0; g < ga.trial.size(); ++g)
    {
        while (j < gb.trial.size() && gb.trial[j] < ga.trial[g])
            ++j;
        if (j == gb.trial.size())
            break;
        if (gb.trial[j] != ga.trial[g])
            continue;
        for (std::size_t ib = gb.begin[j]; ib < gb.begin[j + 1]; ++ib)
        {
            if (!herald)
            {
                add(gb.local[ib] - b.gate_center_s);
                continue;
            }
            for (std::size_t ia = ga.begin[g]; ia < ga.begin[g + 1]; ++ia)
                add(gb.local[ib] - ga.local[ia] - delay);
        }
    }
    return w;
}

//---------------------------------------------------------------------------//
//! Per-second rate of an event with probability \c p per trial.
inline double rates(double p, TrialClock const& clock)
{
    if (!(p >= 0 && p <= 1))
        throw DomainError("rates: probability must lie in [0, 1]");
    return p * static_cast<double>(clock.trials_per_cycle) / clock.cycle_period();
}

inline double rates(double p, SourceParams const& source)
{
    return rates(p, source.clock());
}

//---------------------------------------------------------------------------//
/*!
 * Conditional SNR of a converted detection.
 *
 * Signal coincidences over the conditional noise p_n p_s, where p_n is the
 * click probability of the telecom channel with the converter input blocked:
 * SNR = (p_sas - p_n p_s) / (p_n p_s).
 */
inline CorrelationEstimate
conditional_snr(TagStream const& stokes,
                TagStream const& converted,
                TagStream const& blocked_converted,
                HistogramOptions const& opts = {})
{
    auto const h = build_histogram(stokes, converted, opts);
    auto const p_sas = coincidence_probability(h);
    auto const p_s = singles_probability(stokes, opts.all_pairs);
    auto const p_n = singles_probability(blocked_converted, opts.all_pairs);
    if (p_n.n_coincidences == 0 || p_s.n_coincidences == 0)
        throw InfiniteEstimateError("conditional SNR: no noise or herald clicks",
                                    p_sas.n_coincidences, p_n.n_coincidences);
    double const ratio = p_sas.value / (p_n.value * p_s.value);
    CorrelationEstimate est;
    est.value = ratio - 1;
    double rel2 = 1.0 / static_cast<double>(p_n.n_coincidences)
                  + 1.0 / static_cast<double>(p_s.n_coincidences);
    if (p_sas.n_coincidences > 0)
        rel2 += 1.0 / static_cast<double>(p_sas.n_coincidences);
    est.sigma = ratio * std::sqrt(rel2);
    est.n_coincidences = p_sas.n_coincidences;
    est.n_accidentals = p_n.n_coincidences;
    return est;
}

//---------------------------------------------------------------------------//
// CSV OUTPUT
//---------------------------------------------------------------------------//
inline void write_histogram_csv(std::ostream& os, CoincidenceHistogram const& h)
{
    os << "offset,count\n";
    for (std::size_t i = 0; i < h.offsets.size(); ++i)
        os << h.offsets[i] << ',' << h.counts[i] << '\n';
}

inline void write_waveform_csv(std::ostream& os, Waveform const& w)
{
    os << "bin_center_s,count\n";
    for (std::size_t i = 0; i < w.counts.size(); ++i)
        os << detail::format_double(w.bin_centers[i]) << ',' << w.counts[i] << '\n';
}

struct NamedEstimate
{
    std::string quantity;
    CorrelationEstimate estimate;
};

inline void write_estimates_csv(std::ostream& os,
                                std::vector<NamedEstimate> const& rows)
{
    os << "quantity,value,sigma,n\n";
    for (auto const& r : rows)
        os << r.quantity << ',' << detail::format_double(r.estimate.value) << ','
           << detail::format_double(r.estimate.sigma) << ','
           << r.estimate.n_coincidences << '\n';
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
