#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace ebt {

/// What the model coefficients may see of the current measure: a single
/// moment (the weighted total mass) and the time.
struct MeasureSummary {
    double total_mass = 0.0;
    double time = 0.0;
};

struct Rates {
    double b = 0.0;
    double c = 0.0;
    double beta = 0.0;
};

/// Type-erased coefficient set. The solvers are templates over anything
/// providing the same members, so concrete test cases can inline their
/// formulas; this variant is for custom models and the CLI plumbing.
struct FunctionCoefficients {
    using Fn = std::function<double(double t, const MeasureSummary&, double x)>;

    Fn b_fn, c_fn, beta_fn, db_dx_fn, dc_dx_fn;
    std::function<double(double)> moment_weight;  // gamma; nullptr means 1
    double x_b = 0.0;

    double b(double t, const MeasureSummary& s, double x) const { return b_fn(t, s, x); }
    double c(double t, const MeasureSummary& s, double x) const { return c_fn(t, s, x); }
    double beta(double t, const MeasureSummary& s, double x) const { return beta_fn(t, s, x); }
    double db_dx(double t, const MeasureSummary& s, double x) const { return db_dx_fn(t, s, x); }
    double dc_dx(double t, const MeasureSummary& s, double x) const { return dc_dx_fn(t, s, x); }
    double gamma(double x) const { return moment_weight ? moment_weight(x) : 1.0; }
    Rates rates(double t, const MeasureSummary& s, double x) const {
        return {b(t, s, x), c(t, s, x), beta(t, s, x)};
    }
};

struct DerivativeMismatch {
    char which = 'b';  // 'b' or 'c'
    double x = 0.0;
    double analytic = 0.0;
    double finite_difference = 0.0;
};

/// Central finite-difference check of db_dx and dc_dx, step 1e-5,
/// tolerance 1e-6. Sample points must avoid kinks of the coefficients.
template <class Coeffs>
std::vector<DerivativeMismatch> check_derivatives(const Coeffs& coeffs,
                                                  const std::vector<double>& sample_points,
                                                  double t = 0.0,
                                                  const MeasureSummary& summary = {}) {
    constexpr double h = 1e-5;
    constexpr double tol = 1e-6;
    std::vector<DerivativeMismatch> bad;
    for (double x : sample_points) {
        const double fd_b = (coeffs.b(t, summary, x + h) - coeffs.b(t, summary, x - h)) / (2 * h);
        const double fd_c = (coeffs.c(t, summary, x + h) - coeffs.c(t, summary, x - h)) / (2 * h);
        const double an_b = coeffs.db_dx(t, summary, x);
        const double an_c = coeffs.dc_dx(t, summary, x);
        if (std::abs(fd_b - an_b) > tol) bad.push_back({'b', x, an_b, fd_b});
        if (std::abs(fd_c - an_c) > tol) bad.push_back({'c', x, an_c, fd_c});
    }
    return bad;
}

}  // namespace ebt
