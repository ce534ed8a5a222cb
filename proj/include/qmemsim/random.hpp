//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/random.hpp
//---------------------------------------------------------------------------//
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! SplitMix64 step: advances \c state and returns a well-mixed output.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

//---------------------------------------------------------------------------//
/*!
 * xoshiro256++ generator.
 *
 * Small state and cheap seeding: the simulator constructs one engine per MOT
 * cycle, so the seeding cost matters as much as the draw cost.
 */
class Xoshiro256pp
{
  public:
    using result_type = std::uint64_t;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    explicit Xoshiro256pp(std::uint64_t seed = 0) noexcept
    {
        std::uint64_t sm = seed;
        for (auto& word : s_)
        {
            word = splitmix64(sm);
        }
    }

    result_type operator()() noexcept
    {
        std::uint64_t const result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t const t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    friend bool operator==(Xoshiro256pp const&, Xoshiro256pp const&) = default;

  private:
    std::array<std::uint64_t, 4> s_{};

    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
    {
        return (x << k) | (x >> (64 - k));
    }
};

//---------------------------------------------------------------------------//
/*!
 * Engine for an independent substream, e.g. one MOT cycle.
 *
 * The (seed, index) pair is hashed through two SplitMix rounds so adjacent
 * indices give unrelated states. The result depends only on its arguments,
 * never on which worker asks for it.
 */
inline Xoshiro256pp derive_stream(std::uint64_t seed, std::uint64_t index) noexcept
{
    std::uint64_t state = seed;
    std::uint64_t const a = splitmix64(state);
    state = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    return Xoshiro256pp{splitmix64(state)};
}

//---------------------------------------------------------------------------//
//! Uniform double in [0, 1).
template<std::uniform_random_bit_generator Rng>
inline double uniform01(Rng& rng)
{
    static_assert(Rng::max() == std::numeric_limits<std::uint64_t>::max()
                      && Rng::min() == 0,
                  "expects a full-range 64-bit engine");
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Uniform double in (0, 1): safe as a logarithm argument.
template<std::uniform_random_bit_generator Rng>
inline double uniform_open01(Rng& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

//! Bernoulli draw with probability \c p.
template<std::uniform_random_bit_generator Rng>
inline bool bernoulli(double p, Rng& rng)
{
    return uniform01(rng) < p;
}

//! Standard normal draw (Marsaglia polar method, one value per call).
template<std::uniform_random_bit_generator Rng>
inline double standard_normal(Rng& rng)
{
    double u, v, s;
    do
    {
        u = 2 * uniform01(rng) - 1;
        v = 2 * uniform01(rng) - 1;
        s = u * u + v * v;
    } while (s >= 1 || s == 0);
    return u * std::sqrt(-2 * std::log(s) / s);
}

//---------------------------------------------------------------------------//
/*!
 * Number of failures before the first success of a Bernoulli(p) sequence.
 *
 * Inverse-CDF sampling; returns \c limit when the draw would exceed it, which
 * lets callers skip empty trials without looping over them.
 */
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t
geometric_skip(double p, Rng& rng, std::uint64_t limit
                                   = std::numeric_limits<std::uint64_t>::max())
{
    if (p >= 1)
        return 0;
    if (p <= 0)
        return limit;
    double const k = std::floor(std::log(uniform_open01(rng)) / std::log1p(-p));
    if (!(k < static_cast<double>(limit)))
        return limit;
    return static_cast<std::uint64_t>(k);
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
