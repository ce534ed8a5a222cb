//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/chain_sim.hpp
//! Per-trial Monte Carlo of the write-read sequence, from pair emission to
//! detector clicks.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "detector.hpp"
#include "error.hpp"
#include "qfc.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "tag_stream.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
enum class PhotonStatistics
{
    kTwoModeSqueezed,  //!< diagonal thermal pairs (the memory)
    kIndependentCoherent  //!< independent Poisson fields (classical control)
};

//---------------------------------------------------------------------------//
/*!
 * Emission, timing, waveform and loss chain of the memory.
 *
 * \c stokes_arm_eta is fiber coupling times filter-cavity transmission.
 * \c retrieval_eta is the probability that a stored excitation yields an
 * anti-Stokes photon in fiber; the 70% Stokes/anti-Stokes mode overlap is
 * already part of it. \c link_eta (memory to converter) applies only when a
 * converter is present.
 *
 * \c antistokes_background_prob is the per-gate probability of one
 * uncorrelated photon in the anti-Stokes fiber (read-pulse leakage). With a
 * converter it passes the same link and device losses as the signal.
 */
struct SourceParams
{
    double mu{0.01};
    double stokes_arm_eta{0.7 * 0.2};
    double retrieval_eta{0.32};
    double link_eta{0.77};
    double storage_delay_s{330e-9};
    double trial_period_s{1.4e-6};
    std::uint64_t trials_per_cycle{1000};
    double cycle_dead_time_s{20e-3};
    double stokes_fwhm_s{11e-9};
    double antistokes_fwhm_s{11.4e-9};
    double write_epoch_offset_s{50e-9};
    double antistokes_background_prob{0};
    PhotonStatistics statistics{PhotonStatistics::kTwoModeSqueezed};

    TrialClock clock() const
    {
        return {trial_period_s, trials_per_cycle, cycle_dead_time_s};
    }

    void validate() const
    {
        auto fail = [](std::string const& msg) {
            throw ConfigError("source: " + msg);
        };
        auto unit = [&](double v, char const* name) {
            if (!(v >= 0 && v <= 1))
                fail(std::string(name) + " must lie in [0, 1]");
        };
        if (!(mu >= 0) || !std::isfinite(mu))
            fail("mu must be finite and >= 0");
        unit(stokes_arm_eta, "stokes_arm_eta");
        unit(retrieval_eta, "retrieval_eta");
        unit(link_eta, "link_eta");
        unit(antistokes_background_prob, "antistokes_background_prob");
        auto positive = [&](double v, char const* name) {
            if (!(v > 0) || !std::isfinite(v))
                fail(std::string(name) + " must be > 0");
        };
        positive(storage_delay_s, "storage_delay_s");
        positive(trial_period_s, "trial_period_s");
        positive(cycle_dead_time_s, "cycle_dead_time_s");
        positive(write_epoch_offset_s, "write_epoch_offset_s");
        if (!(stokes_fwhm_s >= 0) || !(antistokes_fwhm_s >= 0))
            fail("waveform FWHMs must be >= 0");
        if (trials_per_cycle == 0)
            fail("trials_per_cycle must be > 0");
        if (!(storage_delay_s < trial_period_s))
            fail("storage_delay_s must be shorter than trial_period_s");
    }
};

//! Which arms pass through a 50-50 splitter onto two detectors.
enum class SplitMode
{
    kNone,
    kStokes,
    kAntiStokes,
    kBoth
};

struct RunOptions
{
    SplitMode split{SplitMode::kNone};
    unsigned threads{1};
    //! Cycles per work unit; results never depend on this or on threads.
    std::uint64_t block_cycles{64};
};

//! Output channels; the "_b" streams exist only for split arms.
struct ExperimentStreams
{
    TagStream stokes;
    TagStream antistokes;
    std::optional<TagStream> stokes_b;
    std::optional<TagStream> antistokes_b;
};

//---------------------------------------------------------------------------//
/*!
 * Emission time: trial_epoch + offset + Gaussian(FWHM), redrawn until inside
 * the gate [centre - gate_width/2, centre + gate_width/2] where the centre is
 * trial_epoch + offset.
 */
template<std::uniform_random_bit_generator Rng>
inline double sample_emission_time(double trial_epoch,
                                   double offset,
                                   double fwhm,
                                   double gate_width,
                                   Rng& rng)
{
    double const center = trial_epoch + offset;
    Gate const gate{center - 0.5 * gate_width, center + 0.5 * gate_width};
    return sample_gaussian_in_gate(center, fwhm, gate, rng);
}

//! Route each photon independently to arm A or B.
template<std::uniform_random_bit_generator Rng>
inline std::pair<std::uint64_t, std::uint64_t>
split_50_50(std::uint64_t photons, Rng& rng)
{
    std::uint64_t a = 0;
    if (photons <= 64)
    {
        for (std::uint64_t i = 0; i < photons; ++i)
            a += (rng() >> 63);
    }
    else
    {
        a = binomial_thin(photons, 0.5, rng);
    }
    return {a, photons - a};
}

//---------------------------------------------------------------------------//
namespace detail
{
//---------------------------------------------------------------------------//
enum Channel : std::size_t
{
    kStokesA = 0,
    kStokesB,
    kAntiStokesA,
    kAntiStokesB,
    kNumChannels
};

using ChannelTags = std::array<std::vector<double>, kNumChannels>;

/*!
 * Simulates whole MOT cycles.
 *
 * Rare per-gate processes (pair emission, background, pump noise, dark
 * counts) are sampled by geometric skipping between occupied trials, which
 * is exact for independent per-trial events and costs O(events) rather than
 * O(trials).
 */
class CycleSimulator
{
  public:
    CycleSimulator(SourceParams const& src,
                   std::optional<QfcParams> const& qfc,
                   DetectorModel const& det_s,
                   DetectorModel const& det_as,
                   SplitMode split)
        : src_(src), qfc_(qfc), clock_(src.clock())
    {
        det_[kStokesA] = det_s;
        det_[kStokesB] = det_s;
        det_[kAntiStokesA] = det_as;
        det_[kAntiStokesB] = det_as;
        stokes_center_ = src.write_epoch_offset_s;
        antistokes_center_ = src.write_epoch_offset_s + src.storage_delay_s;
        stokes_gate_ = {stokes_center_ - 0.5 * det_s.gate_width_s,
                        stokes_center_ + 0.5 * det_s.gate_width_s};
        antistokes_gate_ = {antistokes_center_ - 0.5 * det_as.gate_width_s,
                            antistokes_center_ + 0.5 * det_as.gate_width_s};

        if (qfc_)
        {
            antistokes_eta_ = src.retrieval_eta * src.link_eta;
            noise_prob_ = noise_photon_probability(*qfc_);
            background_prob_ = src.antistokes_background_prob * src.link_eta
                               * device_efficiency(*qfc_) * qfc_->filter_eta;
        }
        else
        {
            antistokes_eta_ = src.retrieval_eta;
            noise_prob_ = 0;
            background_prob_ = src.antistokes_background_prob;
        }
        for (std::size_t ch = 0; ch < kNumChannels; ++ch)
        {
            double const lambda = det_[ch].dark_mean_per_gate();
            dark_mean_[ch] = lambda;
            dark_prob_[ch] = -std::expm1(-lambda);
        }
        active_[kStokesA] = true;
        active_[kStokesB] = split == SplitMode::kStokes || split == SplitMode::kBoth;
        active_[kAntiStokesA] = true;
        active_[kAntiStokesB] = split == SplitMode::kAntiStokes
                                || split == SplitMode::kBoth;
    }

    Gate const& stokes_gate() const { return stokes_gate_; }
    Gate const& antistokes_gate() const { return antistokes_gate_; }

    //! Appends the clicks of one cycle to \c out (per channel, sorted).
    void run_cycle(std::uint64_t cycle, std::uint64_t seed, ChannelTags& out) const
    {
        auto rng = derive_stream(seed, cycle);
        ChannelTags local;
        std::uint64_t const n_trials = clock_.trials_per_cycle;
        double const cycle_start = clock_.trial_start(cycle, 0);
        auto trial_start = [&](std::uint64_t t) {
            return cycle_start + static_cast<double>(t) * clock_.trial_period_s;
        };

        // Photon pairs (or independent classical fields)
        if (src_.statistics == PhotonStatistics::kTwoModeSqueezed)
        {
            double const q = thermal_nonempty_probability(src_.mu);
            for_each_event(q, n_trials, rng, [&](std::uint64_t t) {
                // Given n >= 1 the excess is again thermal (memoryless).
                std::uint64_t const n = 1 + sample_thermal(src_.mu, rng);
                emit_stokes(n, trial_start(t), rng, local);
                emit_antistokes(n, trial_start(t), rng, local);
            });
        }
        else
        {
            double const q = -std::expm1(-src_.mu);
            for_each_event(q, n_trials, rng, [&](std::uint64_t t) {
                emit_stokes(sample_poisson_nonzero(src_.mu, rng),
                            trial_start(t), rng, local);
            });
            for_each_event(q, n_trials, rng, [&](std::uint64_t t) {
                emit_antistokes(sample_poisson_nonzero(src_.mu, rng),
                                trial_start(t), rng, local);
            });
        }

        // Uncorrelated photons: read leakage, then pump noise (converted runs
        // only, already past the device).
        for (double const q : {background_prob_, noise_prob_})
        {
            for_each_event(q, n_trials, rng, [&](std::uint64_t t) {
                Gate const g = shifted(antistokes_gate_, trial_start(t));
                route_photon(kAntiStokesA, sample_uniform_in_gate(g, rng), g,
                             rng, local);
            });
        }

        // Dark counts, Poisson per gate, uniform inside it
        for (std::size_t ch = 0; ch < kNumChannels; ++ch)
        {
            if (!active_[ch])
                continue;
            Gate const& base = is_stokes(ch) ? stokes_gate_ : antistokes_gate_;
            for_each_event(dark_prob_[ch], n_trials, rng, [&](std::uint64_t t) {
                Gate const g = shifted(base, trial_start(t));
                std::uint64_t const k = sample_poisson_nonzero(dark_mean_[ch], rng);
                for (std::uint64_t i = 0; i < k; ++i)
                    local[ch].push_back(sample_uniform_in_gate(g, rng));
            });
        }

        for (std::size_t ch = 0; ch < kNumChannels; ++ch)
        {
            auto& tags = local[ch];
            std::sort(tags.begin(), tags.end());
            apply_dead_time(tags, det_[ch].dead_time_s);
            out[ch].insert(out[ch].end(), tags.begin(), tags.end());
        }
    }

  private:
    SourceParams src_;
    std::optional<QfcParams> qfc_;
    TrialClock clock_;
    std::array<DetectorModel, kNumChannels> det_;
    std::array<double, kNumChannels> dark_mean_{};
    std::array<double, kNumChannels> dark_prob_{};
    std::array<bool, kNumChannels> active_{};
    double stokes_center_{0};
    double antistokes_center_{0};
    Gate stokes_gate_;
    Gate antistokes_gate_;
    double antistokes_eta_{0};
    double noise_prob_{0};
    double background_prob_{0};

    static bool is_stokes(std::size_t ch)
    {
        return ch == kStokesA || ch == kStokesB;
    }

    static Gate shifted(Gate const& g, double t0)
    {
        return {g.start + t0, g.end + t0};
    }

    template<class Rng, class F>
    static void
    for_each_event(double q, std::uint64_t n_trials, Rng& rng, F&& on_event)
    {
        if (q <= 0)
            return;
        std::uint64_t t = geometric_skip(q, rng, n_trials);
        while (t < n_trials)
        {
            on_event(t);
            std::uint64_t const skip = geometric_skip(q, rng, n_trials);
            if (skip >= n_trials - t - 1)
                break;
            t += 1 + skip;
        }
    }

    //! Splitter (if any) then detector for one photon at time \c t.
    template<class Rng>
    void route_photon(std::size_t arm_a,
                      double t,
                      Gate const& gate,
                      Rng& rng,
                      ChannelTags& local) const
    {
        std::size_t ch = arm_a;
        std::size_t const arm_b = arm_a + 1;
        if (active_[arm_b])
        {
            ch = split_50_50(1, rng).second ? arm_b : arm_a;
        }
        auto const& det = det_[ch];
        if (!bernoulli(det.efficiency, rng))
            return;
        local[ch].push_back(
            sample_gaussian_in_gate(t, det.timing_jitter_fwhm_s, gate, rng));
    }

    template<class Rng>
    void emit_stokes(std::uint64_t n,
                     double t0,
                     Rng& rng,
                     ChannelTags& local) const
    {
        std::uint64_t const m = binomial_thin(n, src_.stokes_arm_eta, rng);
        if (m == 0)
            return;
        Gate const g = shifted(stokes_gate_, t0);
        for (std::uint64_t i = 0; i < m; ++i)
        {
            double const t = sample_emission_time(
                t0, stokes_center_, src_.stokes_fwhm_s, g.width(), rng);
            route_photon(kStokesA, t, g, rng, local);
        }
    }

    template<class Rng>
    void emit_antistokes(std::uint64_t n,
                         double t0,
                         Rng& rng,
                         ChannelTags& local) const
    {
        std::uint64_t m = binomial_thin(n, antistokes_eta_, rng);
        if (m > 0 && qfc_)
            m = convert_photons(m, *qfc_, qfc_->filter_eta, rng);
        if (m == 0)
            return;
        Gate const g = shifted(antistokes_gate_, t0);
        for (std::uint64_t i = 0; i < m; ++i)
        {
            double const t = sample_emission_time(
                t0, antistokes_center_, src_.antistokes_fwhm_s, g.width(), rng);
            route_photon(kAntiStokesA, t, g, rng, local);
        }
    }
};

//---------------------------------------------------------------------------//
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Simulate \c n_cycles MOT cycles of the write-read sequence.
 *
 * Each cycle draws from its own engine derived from (seed, cycle index), and
 * cycles are concatenated in order, so the streams are bit-identical for any
 * thread count or block size. With a converter the anti-Stokes arm passes
 * link loss, then the device, then the telecom detector \c det_as.
 */
inline ExperimentStreams run_experiment(SourceParams const& source,
                                        std::optional<QfcParams> const& qfc,
                                        DetectorModel const& det_s,
                                        DetectorModel const& det_as,
                                        std::uint64_t n_cycles,
                                        std::uint64_t seed,
                                        RunOptions const& options = {})
{
    if (n_cycles == 0)
        throw EmptyRunError("run_experiment: zero cycles requested");
    source.validate();
    det_s.validate();
    det_as.validate();
    if (qfc)
    {
        qfc->validate();
        if (std::abs(qfc->det_eta_1552 - det_as.efficiency) > 1e-12)
            throw ConfigError("run_experiment: qfc det_eta_1552 ("
                              + std::to_string(qfc->det_eta_1552)
                              + ") differs from the anti-Stokes detector "
                                "efficiency ("
                              + std::to_string(det_as.efficiency) + ")");
    }
    double const as_center = source.write_epoch_offset_s + source.storage_delay_s;
    if (source.write_epoch_offset_s < 0.5 * det_s.gate_width_s
        || as_center + 0.5 * det_as.gate_width_s > source.trial_period_s)
        throw ConfigError("run_experiment: detector gates do not fit inside "
                          "the trial period");
    for (auto const* det : {&det_s, &det_as})
    {
        if (det->dead_time_s > source.cycle_dead_time_s)
            throw ConfigError("run_experiment: dead time of '" + det->channel_id
                              + "' exceeds the cycle gap");
    }

    detail::CycleSimulator const sim(source, qfc, det_s, det_as, options.split);

    std::uint64_t const block = std::max<std::uint64_t>(1, options.block_cycles);
    std::uint64_t const n_blocks = (n_cycles + block - 1) / block;
    std::vector<detail::ChannelTags> results(n_blocks);
    auto run_block = [&](std::uint64_t b) {
        std::uint64_t const first = b * block;
        std::uint64_t const last = std::min(n_cycles, first + block);
        for (std::uint64_t c = first; c < last; ++c)
            sim.run_cycle(c, seed, results[b]);
    };

    unsigned const n_threads = std::max(1u, options.threads);
    if (n_threads == 1 || n_blocks == 1)
    {
        for (std::uint64_t b = 0; b < n_blocks; ++b)
            run_block(b);
    }
    else
    {
        std::atomic<std::uint64_t> next{0};
        std::vector<std::thread> workers;
        for (unsigned i = 0; i < n_threads; ++i)
        {
            workers.emplace_back([&] {
                for (std::uint64_t b = next++; b < n_blocks; b = next++)
                    run_block(b);
            });
        }
        for (auto& w : workers)
            w.join();
    }

    auto make_stream = [&](std::string id, std::size_t ch, Gate const& gate) {
        TagStream s;
        s.channel_id = std::move(id);
        s.total_trials = n_cycles * source.trials_per_cycle;
        s.trial_period_s = source.trial_period_s;
        s.storage_delay_s = source.storage_delay_s;
        s.trials_per_cycle = source.trials_per_cycle;
        s.cycle_dead_time_s = source.cycle_dead_time_s;
        s.gate_center_s = gate.center();
        s.gate_width_s = gate.width();
        std::size_t total = 0;
        for (auto const& r : results)
            total += r[ch].size();
        s.tags.reserve(total);
        for (auto const& r : results)
            s.tags.insert(s.tags.end(), r[ch].begin(), r[ch].end());
        return s;
    };

    ExperimentStreams out;
    out.stokes = make_stream(det_s.channel_id, detail::kStokesA, sim.stokes_gate());
    out.antistokes = make_stream(det_as.channel_id, detail::kAntiStokesA,
                                 sim.antistokes_gate());
    if (options.split == SplitMode::kStokes || options.split == SplitMode::kBoth)
        out.stokes_b = make_stream(det_s.channel_id + "_b", detail::kStokesB,
                                   sim.stokes_gate());
    if (options.split == SplitMode::kAntiStokes
        || options.split == SplitMode::kBoth)
        out.antistokes_b = make_stream(det_as.channel_id + "_b",
                                       detail::kAntiStokesB,
                                       sim.antistokes_gate());
    return out;
}

//---------------------------------------------------------------------------//
/*!
 * Stokes click probability per trial for the two-mode squeezed source, in
 * the one-photon-one-click approximation: 1 - e^{-lambda} / (1 + eta mu).
 */
inline double expected_stokes_click_probability(SourceParams const& src,
                                                DetectorModel const& det_s)
{
    double const eta = src.stokes_arm_eta * det_s.efficiency;
    double const no_photon
        = src.statistics == PhotonStatistics::kTwoModeSqueezed
              ? 1 / (1 + eta * src.mu)
              : std::exp(-eta * src.mu);
    return 1 - no_photon * std::exp(-det_s.dark_mean_per_gate());
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
