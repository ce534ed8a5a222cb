//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/fit.hpp
//! Levenberg-Marquardt least squares and the device/waveform model fits.
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "detector.hpp"
#include "error.hpp"
#include "tag_stream.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! One data point; sigma <= 0 is only allowed in unweighted fits.
struct FitPoint
{
    double x{0};
    double y{0};
    double sigma{1};
};

struct FitOptions
{
    int max_iterations{200};
    double gradient_tolerance{1e-10};
    double step_tolerance{1e-12};
    //! Weights 1/sigma^2; false fits with unit weights.
    bool weighted{true};
    //! Scale the covariance by chi^2 / dof (sigmas then undefined if dof = 0).
    bool scale_covariance{true};
    //! Central-difference step, relative to |parameter|.
    double fd_relative_step{1e-6};
};

/*!
 * Fitted parameters with covariance-based standard errors.
 *
 * \c residual_norm is the (weighted) sum of squared residuals and
 * \c gradient_norm the largest gradient component in column-equilibrated
 * coordinates relative to the residual norm, at the returned point.
 */
struct FitResult
{
    std::vector<std::string> names;
    std::vector<double> parameters;
    std::vector<double> sigmas;
    double residual_norm{0};
    double gradient_norm{0};
    bool converged{false};
    bool sigmas_defined{false};
    int iterations{0};
    std::string diagnostic;

    double value(std::string const& name) const { return parameters[index(name)]; }
    double sigma(std::string const& name) const { return sigmas[index(name)]; }

    std::size_t index(std::string const& name) const
    {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
            throw ConfigError("fit result has no parameter '" + name + "'");
        return static_cast<std::size_t>(it - names.begin());
    }
};

//! Model signature: y = f(x, parameters).
using FitModel = std::function<double(double, std::span<double const>)>;

//---------------------------------------------------------------------------//
namespace detail
{
inline std::string format_vector(std::span<double const> p)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i)
        os << (i ? ", " : "") << format_double(p[i]);
    os << ')';
    return os.str();
}

inline void check_points(std::span<FitPoint const> points, bool weighted)
{
    for (std::size_t i = 0; i < points.size(); ++i)
    {
        auto const& pt = points[i];
        if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || std::isnan(pt.sigma))
            throw DomainError("least_squares: non-finite data at point "
                              + std::to_string(i));
        if (weighted && !(pt.sigma > 0 && std::isfinite(pt.sigma)))
            throw DomainError("least_squares: sigma must be > 0 at point "
                              + std::to_string(i));
    }
}
}  // namespace detail

//---------------------------------------------------------------------------//
/*!
 * Damped Gauss-Newton (Levenberg-Marquardt) with a central-difference
 * Jacobian.
 *
 * Stops when the scaled gradient falls below the gradient tolerance, when
 * a step changes no parameter by more than step_tolerance relative to its
 * magnitude, or at the iteration cap (not converged; the best point is
 * returned with a diagnostic). A NaN model value raises DomainError naming
 * the parameter vector.
 */
inline FitResult least_squares(FitModel const& model,
                               std::span<FitPoint const> points,
                               std::vector<double> initial,
                               std::vector<std::string> names,
                               FitOptions const& opts = {})
{
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    auto const m = static_cast<Eigen::Index>(points.size());
    auto const np = static_cast<Eigen::Index>(initial.size());
    if (names.size() != initial.size())
        throw ConfigError("least_squares: names and initial sizes differ");
    if (np == 0 || m == 0)
        throw ConfigError("least_squares: empty problem");
    detail::check_points(points, opts.weighted);
    for (double v : initial)
    {
        if (!std::isfinite(v))
            throw DomainError("least_squares: non-finite initial parameter "
                              + detail::format_vector(initial));
    }

    VectorXd w(m);
    for (Eigen::Index i = 0; i < m; ++i)
    {
        double const s = opts.weighted ? points[static_cast<std::size_t>(i)].sigma
                                       : 1.0;
        w[i] = 1.0 / s;
    }

    // Weighted residuals (y - f) / sigma
    auto residuals = [&](std::vector<double> const& p) {
        VectorXd r(m);
        for (Eigen::Index i = 0; i < m; ++i)
        {
            auto const& pt = points[static_cast<std::size_t>(i)];
            double const f = model(pt.x, p);
            if (std::isnan(f))
                throw DomainError("least_squares: model returned NaN at "
                                  "parameters "
                                  + detail::format_vector(p));
            r[i] = (pt.y - f) * w[i];
        }
        return r;
    };
    // Jacobian of the weighted model values (= -d r / d p)
    auto jacobian = [&](std::vector<double> const& p) {
        MatrixXd J(m, np);
        std::vector<double> q = p;
        for (Eigen::Index k = 0; k < np; ++k)
        {
            auto const ku = static_cast<std::size_t>(k);
            double const h = opts.fd_relative_step * std::max(std::abs(p[ku]), 1e-8);
            q[ku] = p[ku] + h;
            VectorXd const rp = residuals(q);
            q[ku] = p[ku] - h;
            VectorXd const rm = residuals(q);
            q[ku] = p[ku];
            J.col(k) = (rm - rp) / (2 * h);
        }
        return J;
    };

    std::vector<double> p = std::move(initial);
    VectorXd r = residuals(p);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    FitResult result;
    result.names = std::move(names);

    // Gradient in equilibrated coordinates, relative to the residual norm:
    // max_k |J_k . r| / (|J_k| max(|r|, 1)); invariant to parameter units.
    auto scaled_gradient = [&](MatrixXd const& jac, VectorXd const& res) {
        double const rn = std::max(res.norm(), 1.0);
        double worst = 0;
        for (Eigen::Index k = 0; k < np; ++k)
        {
            double const cn = jac.col(k).norm();
            if (cn > 0)
                worst = std::max(worst, std::abs(jac.col(k).dot(res)) / (cn * rn));
        }
        return worst;
    };

    MatrixXd J;
    int it = 0;
    bool converged = false;
    std::string why;
    for (; it < opts.max_iterations; ++it)
    {
        J = jacobian(p);
        VectorXd const g = J.transpose() * r;
        if (scaled_gradient(J, r) <= opts.gradient_tolerance)
        {
            converged = true;
            break;
        }
        MatrixXd const A = J.transpose() * J;
        bool accepted = false;
        bool tiny_step = false;
        for (int attempt = 0; attempt < 60; ++attempt)
        {
            MatrixXd damped = A;
            for (Eigen::Index k = 0; k < np; ++k)
                damped(k, k) += lambda * std::max(A(k, k), 1e-300);
            VectorXd const step = damped.ldlt().solve(g);
            if (!step.allFinite())
            {
                lambda *= 10;
                continue;
            }
            std::vector<double> trial = p;
            double rel_step = 0;
            for (Eigen::Index k = 0; k < np; ++k)
            {
                auto const ku = static_cast<std::size_t>(k);
                trial[ku] += step[k];
                rel_step = std::max(rel_step,
                                    std::abs(step[k]) / std::max(std::abs(p[ku]), 1e-300));
            }
            VectorXd const rt = residuals(trial);
            double const trial_cost = rt.squaredNorm();
            bool const small = rel_step <= opts.step_tolerance;
            if (trial_cost <= cost)
            {
                p = std::move(trial);
                r = rt;
                cost = trial_cost;
                lambda = std::max(lambda / 10, 1e-15);
                accepted = true;
                tiny_step = small;
                break;
            }
            if (small)
            {
                tiny_step = true;
                break;
            }
            lambda *= 10;
        }
        if (tiny_step)
        {
            converged = true;
            ++it;
            break;
        }
        if (!accepted)
        {
            why = "no downhill step found";
            ++it;
            break;
        }
    }

    J = jacobian(p);
    result.parameters = p;
    result.residual_norm = cost;
    result.gradient_norm = scaled_gradient(J, r);
    result.iterations = it;
    result.converged = converged;
    if (!converged)
        result.diagnostic = (why.empty() ? "iteration cap reached" : why)
                            + "; best parameters "
                            + detail::format_vector(p) + ", residual norm "
                            + detail::format_double(cost);

    // Covariance from the normal equations at the optimum, with column
    // equilibration so parameters of very different scale stay invertible
    VectorXd scale(np);
    for (Eigen::Index k = 0; k < np; ++k)
    {
        double const norm = J.col(k).norm();
        scale[k] = norm > 0 ? 1 / norm : 1.0;
    }
    MatrixXd const Js = J * scale.asDiagonal();
    MatrixXd const A = Js.transpose() * Js;
    Eigen::FullPivLU<MatrixXd> lu(A);
    result.sigmas.assign(static_cast<std::size_t>(np),
                         std::numeric_limits<double>::quiet_NaN());
    Eigen::Index const dof = m - np;
    if (lu.isInvertible() && (!opts.scale_covariance || dof > 0))
    {
        MatrixXd cov = scale.asDiagonal() * lu.inverse() * scale.asDiagonal();
        if (opts.scale_covariance)
            cov *= cost / static_cast<double>(dof);
        else if (!opts.weighted)
            cov *= cost / static_cast<double>(std::max<Eigen::Index>(dof, 1));
        for (Eigen::Index k = 0; k < np; ++k)
            result.sigmas[static_cast<std::size_t>(k)] = std::sqrt(std::max(cov(k, k), 0.0));
        result.sigmas_defined = true;
    }
    return result;
}

//---------------------------------------------------------------------------//
// DEVICE AND WAVEFORM MODELS
//---------------------------------------------------------------------------//
//! eta_max sin^2(L sqrt(eta_n P)); parameters (eta_max, eta_n).
inline double sin2_efficiency_model(double pump_w,
                                    std::span<double const> p,
                                    double length_cm)
{
    double const arg = length_cm * std::sqrt(std::max(p[1], 0.0) * pump_w);
    double const s = std::sin(arg);
    return p[0] * s * s;
}

/*!
 * Fit eta_max and eta_n to (pump power, efficiency, sigma) points.
 *
 * Starts at eta_max = max(eta) and places the largest measured efficiency on
 * the first quarter period, then also tries half and double that eta_n and
 * keeps the lowest residual.
 */
inline FitResult fit_sin2_efficiency(std::span<FitPoint const> points,
                                     double length_cm,
                                     FitOptions const& opts = {})
{
    if (points.size() < 4)
        throw ConfigError("fit_sin2_efficiency: need at least 4 points");
    if (!(length_cm > 0))
        throw DomainError("fit_sin2_efficiency: length_cm must be > 0");
    auto const best = std::max_element(
        points.begin(), points.end(),
        [](FitPoint const& a, FitPoint const& b) { return a.y < b.y; });
    if (!(best->y > 0) || !(best->x > 0))
        throw NumericalError("fit_sin2_efficiency: no positive efficiency at "
                             "positive pump power");
    double const half_pi = std::numbers::pi / 2;
    double const eta_n0 = half_pi * half_pi / (length_cm * length_cm * best->x);
    FitModel const model = [length_cm](double x, std::span<double const> p) {
        return sin2_efficiency_model(x, p, length_cm);
    };
    FitResult out;
    bool have = false;
    for (double scale : {1.0, 0.5, 2.0})
    {
        auto r = least_squares(model, points, {best->y, eta_n0 * scale},
                               {"eta_max", "eta_n"}, opts);
        if (!have || (r.converged && !out.converged)
            || (r.converged == out.converged && r.residual_norm < out.residual_norm))
        {
            out = std::move(r);
            have = true;
        }
    }
    return out;
}

/*!
 * Weighted slope through the origin: SNR = snr_max * mu_in.
 *
 * Closed form; sigma is scaled by the residual variance and is undefined
 * (flagged, NaN) for a single point.
 */
inline FitResult fit_linear_origin(std::span<FitPoint const> points,
                                   FitOptions const& opts = {})
{
    if (points.empty())
        throw ConfigError("fit_linear_origin: no points");
    detail::check_points(points, opts.weighted);
    double sxx = 0, sxy = 0;
    for (auto const& pt : points)
    {
        double const w = opts.weighted ? 1 / (pt.sigma * pt.sigma) : 1.0;
        sxx += w * pt.x * pt.x;
        sxy += w * pt.x * pt.y;
    }
    if (!(sxx > 0))
        throw NumericalError("fit_linear_origin: degenerate design (all x = 0)");
    double const slope = sxy / sxx;
    double chi2 = 0;
    for (auto const& pt : points)
    {
        double const w = opts.weighted ? 1 / (pt.sigma * pt.sigma) : 1.0;
        chi2 += w * (pt.y - slope * pt.x) * (pt.y - slope * pt.x);
    }
    FitResult out;
    out.names = {"snr_max"};
    out.parameters = {slope};
    out.residual_norm = chi2;
    out.converged = true;
    out.iterations = 1;
    double var = 1 / sxx;
    std::size_t const dof = points.size() - 1;
    if (opts.scale_covariance || !opts.weighted)
    {
        if (dof == 0)
        {
            out.sigmas = {std::numeric_limits<double>::quiet_NaN()};
            out.sigmas_defined = false;
            out.diagnostic = "single point: sigma undefined";
            return out;
        }
        var *= chi2 / static_cast<double>(dof);
    }
    out.sigmas = {std::sqrt(var)};
    out.sigmas_defined = true;
    return out;
}

//! A exp(-4 ln2 (t - t0)^2 / FWHM^2) + B; parameters (A, t0, FWHM, B).
inline double gaussian_peak_model(double t, std::span<double const> p)
{
    double const d = (t - p[1]) / p[2];
    return p[0] * std::exp(-4 * std::numbers::ln2 * d * d) + p[3];
}

/*!
 * Gaussian-plus-offset fit of a histogram given as (t, count, sigma).
 *
 * Seeds from the histogram moments above the minimum count. A histogram
 * without a significant peak (amplitude below three of its sigmas, or flat)
 * is reported as not converged.
 */
inline FitResult fit_gaussian_peak(std::span<FitPoint const> histogram,
                                   FitOptions const& opts = {})
{
    if (histogram.size() < 6)
        throw ConfigError("fit_gaussian_peak: need at least 6 bins");
    double total = 0, lo = histogram.front().y, hi = histogram.front().y;
    for (auto const& pt : histogram)
    {
        total += pt.y;
        lo = std::min(lo, pt.y);
        hi = std::max(hi, pt.y);
    }
    std::vector<std::string> names{"amplitude", "center", "fwhm", "offset"};
    if (!(total > 0))
        throw NumericalError("fit_gaussian_peak: histogram has no counts");
    if (hi == lo)
    {
        FitResult flat;
        flat.names = names;
        flat.parameters = {0, 0, 0, lo};
        flat.sigmas.assign(4, std::numeric_limits<double>::quiet_NaN());
        flat.diagnostic = "flat histogram: no peak to fit";
        return flat;
    }
    double sw = 0, sx = 0, sxx = 0;
    for (auto const& pt : histogram)
    {
        double const wgt = pt.y - lo;
        sw += wgt;
        sx += wgt * pt.x;
    }
    double const mean = sx / sw;
    for (auto const& pt : histogram)
        sxx += (pt.y - lo) * (pt.x - mean) * (pt.x - mean);
    double const spacing = std::abs(histogram[1].x - histogram[0].x);
    double const fwhm0 = std::max(kFwhmPerSigma * std::sqrt(sxx / sw), 2 * spacing);
    auto r = least_squares(gaussian_peak_model, histogram,
                           {hi - lo, mean, fwhm0, lo}, names, opts);
    r.parameters[2] = std::abs(r.parameters[2]);
    if (r.converged)
    {
        double const a = r.parameters[0];
        double const sa = r.sigmas[0];
        if (!(a > 0) || (r.sigmas_defined && !(a > 3 * sa)))
        {
            r.converged = false;
            r.diagnostic = "no significant peak: amplitude "
                           + detail::format_double(a) + " +/- "
                           + detail::format_double(sa);
        }
    }
    return r;
}

//! Histogram bins as fit points with Poisson sigma sqrt(max(count, 1)).
template<class Counts>
inline std::vector<FitPoint>
histogram_points(std::vector<double> const& centers, Counts const& counts)
{
    std::vector<FitPoint> out;
    out.reserve(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i)
    {
        double const c = static_cast<double>(counts[i]);
        out.push_back({centers[i], c, std::sqrt(std::max(c, 1.0))});
    }
    return out;
}

//---------------------------------------------------------------------------//
// CSV POINTS
//---------------------------------------------------------------------------//
/*!
 * Reads "x,y,sigma" rows after a mandatory header line. Blank lines and lines
 * starting with '#' are skipped. A missing sigma column defaults to 1.
 */
inline std::vector<FitPoint> read_points_csv(std::istream& is,
                                             std::string const& name = "points")
{
    std::string line;
    int lineno = 0;
    bool header = false;
    std::vector<FitPoint> out;
    while (std::getline(is, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#')
            continue;
        std::string const where = name + ":" + std::to_string(lineno);
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
        {
            auto const b = cell.find_first_not_of(" \t");
            auto const e = cell.find_last_not_of(" \t");
            cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
        }
        if (!header)
        {
            if (cells.size() < 2 || cells[0] != "x" || cells[1] != "y"
                || (cells.size() == 3 && cells[2] != "sigma") || cells.size() > 3)
                throw ParseError("expected header 'x,y,sigma'", where);
            header = true;
            continue;
        }
        if (cells.size() < 2 || cells.size() > 3)
            throw ParseError("expected 2 or 3 columns", where);
        FitPoint pt;
        pt.x = detail::parse_double(cells[0], where);
        pt.y = detail::parse_double(cells[1], where);
        pt.sigma = cells.size() == 3 ? detail::parse_double(cells[2], where) : 1.0;
        out.push_back(pt);
    }
    if (!header)
        throw ParseError("missing header 'x,y,sigma'", name + ":1");
    return out;
}

inline void write_points_csv(std::ostream& os, std::span<FitPoint const> points)
{
    os << "x,y,sigma\n";
    for (auto const& pt : points)
        os << detail::format_double(pt.x) << ',' << detail::format_double(pt.y)
           << ',' << detail::format_double(pt.sigma) << '\n';
}

inline void write_fit_report(std::ostream& os, FitResult const& r)
{
    os << "parameter,value,sigma\n";
    for (std::size_t i = 0; i < r.names.size(); ++i)
        os << r.names[i] << ',' << detail::format_double(r.parameters[i]) << ','
           << detail::format_double(r.sigmas[i]) << '\n';
    os << "residual_norm," << detail::format_double(r.residual_norm) << ",\n"
       << "converged," << (r.converged ? 1 : 0) << ",\n"
       << "iterations," << r.iterations << ",\n"
       << "sigmas_defined," << (r.sigmas_defined ? 1 : 0) << ",\n";
    if (!r.diagnostic.empty())
        os << "# " << r.diagnostic << '\n';
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
