//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/error.hpp
//---------------------------------------------------------------------------//
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error
{
  public:
    using std::domain_error::domain_error;
};

//---------------------------------------------------------------------------//
//! Invalid configuration, schema violation, or malformed input file.
class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(std::string const& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": "
                                            + what
                                      : what)
        , line_(line)
    {
    }

    //! 1-based line number, or 0 when not tied to a line
    int line() const noexcept { return line_; }

  private:
    int line_;
};

//! A run request that would produce no trials.
class EmptyRunError : public ConfigError
{
  public:
    using ConfigError::ConfigError;
};

//! Corrupt stream or CSV data; carries the position of the failure.
class ParseError : public ConfigError
{
  public:
    ParseError(std::string const& what, std::string position)
        : ConfigError(position + ": " + what), position_(std::move(position))
    {
    }

    std::string const& position() const noexcept { return position_; }

  private:
    std::string position_;
};

//---------------------------------------------------------------------------//
//! Numerical failure: non-convergence, degenerate design, singular estimate.
class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Ratio estimate with an empty denominator.
class InfiniteEstimateError : public NumericalError
{
  public:
    InfiniteEstimateError(std::string const& what,
                          std::uint64_t coincidences,
                          std::uint64_t accidentals)
        : NumericalError(what + " (coincidences=" + std::to_string(coincidences)
                         + ", accidentals=" + std::to_string(accidentals) + ")")
        , coincidences_(coincidences)
        , accidentals_(accidentals)
    {
    }

    std::uint64_t coincidences() const noexcept { return coincidences_; }
    std::uint64_t accidentals() const noexcept { return accidentals_; }

  private:
    std::uint64_t coincidences_;
    std::uint64_t accidentals_;
};

//---------------------------------------------------------------------------//
}  // namespace qmemsim
