#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "ebt/coefficients.hpp"

namespace ebt {

/// Analytic solution of a test case, when one exists. All test cases are
/// scored on [x_b, x_max]; mass transported past x_max (possible in test
/// case 2, where b(x_max) > 0) leaves the scoring window.
struct ExactSolution {
    bool known = false;
    std::function<double(double t, double x)> u;
    double x_max = 1.0;
};

/// Stationary linear problem: u = 1 on [0,1] balances growth, death and
/// birth exactly.
struct Tc1Coefficients {
    static constexpr double x_b = 0.0;
    double b(double, const MeasureSummary&, double x) const { return 0.2 * (1.0 - x); }
    double c(double, const MeasureSummary&, double) const { return 0.2; }
    double beta(double, const MeasureSummary&, double x) const {
        return 2.4 * (x * x - x * x * x);
    }
    double db_dx(double, const MeasureSummary&, double) const { return -0.2; }
    double dc_dx(double, const MeasureSummary&, double) const { return 0.0; }
    double gamma(double) const { return 1.0; }
    Rates rates(double, const MeasureSummary&, double x) const {
        return {0.2 * (1.0 - x), 0.2, 2.4 * (x * x - x * x * x)};
    }
};

/// Nonlinear birth term coupled through P = mu_t([0,1]). The exact
/// solution e^{-t}(1 + 0.5 cos x) satisfies the equation with
/// P(t) = e^{-t}(1 + 0.5 sin 1). Like P, the birth kernel lives on [0,1]:
/// b(1) > 0 pushes cohorts past x = 1, and the renewal condition only
/// balances if that tail neither breeds nor counts toward P.
struct Tc2Coefficients {
    static constexpr double x_b = 0.0;
    double b(double, const MeasureSummary&, double x) const { return std::exp(-x); }
    double c(double, const MeasureSummary&, double x) const {
        const double e = std::exp(-x);
        return 1.0 + e + e * std::sin(x) / (2.0 + std::cos(x));
    }
    double beta(double t, const MeasureSummary& s, double x) const {
        if (x > 1.0) return 0.0;
        return 3.0 / (2.0 + std::cos(x)) *
               (0.5 + (1.0 + 0.5 * std::sin(1.0)) * std::exp(-t)) / (0.5 + s.total_mass);
    }
    double db_dx(double, const MeasureSummary&, double x) const { return -std::exp(-x); }
    double dc_dx(double, const MeasureSummary&, double x) const {
        const double e = std::exp(-x);
        const double sx = std::sin(x), cx = std::cos(x);
        const double q = 2.0 + cx;
        return -e + e * ((cx - sx) * q + sx * sx) / (q * q);
    }
    double gamma(double x) const { return x <= 1.0 ? 1.0 : 0.0; }
    Rates rates(double t, const MeasureSummary& s, double x) const {
        const double e = std::exp(-x);
        const double sx = std::sin(x), cx = std::cos(x);
        const double birth =
            x > 1.0 ? 0.0
                    : 3.0 / (2.0 + cx) *
                          (0.5 + (1.0 + 0.5 * std::sin(1.0)) * std::exp(-t)) /
                          (0.5 + s.total_mass);
        return {e, 1.0 + e + e * sx / (2.0 + cx), birth};
    }
};

/// Steep death gradient near the boundary: dc/dx(0) = 1e4. Exposes the
/// finite-time breakdown of the original boundary-cohort ODEs.
struct Tc3Coefficients {
    static constexpr double x_b = 0.0;
    double b(double, const MeasureSummary&, double x) const {
        if (x < 0.5) return 1.0;
        if (x <= 1.0) return 1.0 - 2.0 * (x - 0.5);
        return 0.0;
    }
    double c(double, const MeasureSummary&, double x) const {
        return std::min(10.0, 1e4 * x * (1.0 - x));
    }
    double beta(double, const MeasureSummary&, double) const { return 10.0; }
    // one-sided (left) limits at the kinks; the solvers only need x_b = 0
    double db_dx(double, const MeasureSummary&, double x) const {
        return x <= 0.5 ? 0.0 : -2.0;
    }
    double dc_dx(double, const MeasureSummary&, double x) const {
        return 1e4 * x * (1.0 - x) < 10.0 ? 1e4 * (1.0 - 2.0 * x) : 0.0;
    }
    double gamma(double) const { return 1.0; }
    Rates rates(double t, const MeasureSummary& s, double x) const {
        return {b(t, s, x), c(t, s, x), 10.0};
    }
};

struct TestCaseBundle {
    FunctionCoefficients coeffs;
    ExactSolution exact;
    std::function<double(double)> initial;  // u_0 on [x_b, x_max]
};

namespace detail {

template <class C>
FunctionCoefficients erase_coefficients(C coeffs) {
    FunctionCoefficients fc;
    fc.x_b = C::x_b;
    fc.b_fn = [coeffs](double t, const MeasureSummary& s, double x) { return coeffs.b(t, s, x); };
    fc.c_fn = [coeffs](double t, const MeasureSummary& s, double x) { return coeffs.c(t, s, x); };
    fc.beta_fn = [coeffs](double t, const MeasureSummary& s, double x) {
        return coeffs.beta(t, s, x);
    };
    fc.db_dx_fn = [coeffs](double t, const MeasureSummary& s, double x) {
        return coeffs.db_dx(t, s, x);
    };
    fc.dc_dx_fn = [coeffs](double t, const MeasureSummary& s, double x) {
        return coeffs.dc_dx(t, s, x);
    };
    fc.moment_weight = [coeffs](double x) { return coeffs.gamma(x); };
    return fc;
}

}  // namespace detail

/// Coefficients, exact solution and initial datum of test case 1, 2 or 3.
/// Test case 3 has no analytic solution; runs are scored against a stored
/// reference measure instead.
inline TestCaseBundle test_case(int id) {
    TestCaseBundle tc;
    switch (id) {
        case 1:
            tc.coeffs = detail::erase_coefficients(Tc1Coefficients{});
            tc.exact.known = true;
            tc.exact.u = [](double, double) { return 1.0; };
            tc.initial = [](double) { return 1.0; };
            break;
        case 2:
            tc.coeffs = detail::erase_coefficients(Tc2Coefficients{});
            tc.exact.known = true;
            tc.exact.u = [](double t, double x) {
                return std::exp(-t) * (1.0 + 0.5 * std::cos(x));
            };
            tc.initial = [](double x) { return 1.0 + 0.5 * std::cos(x); };
            break;
        case 3:
            tc.coeffs = detail::erase_coefficients(Tc3Coefficients{});
            tc.exact.known = false;
            tc.initial = [](double) { return 1.0; };
            break;
        default:
            throw std::invalid_argument("test_case: id must be 1, 2 or 3");
    }
    tc.exact.x_max = 1.0;
    return tc;
}

/// Calls f with the concrete coefficient struct of the test case, so the
/// solver templates can inline the formulas.
template <class F>
auto with_test_case_coefficients(int id, F&& f) {
    switch (id) {
        case 1: return f(Tc1Coefficients{});
        case 2: return f(Tc2Coefficients{});
        case 3: return f(Tc3Coefficients{});
        default: throw std::invalid_argument("test_case: id must be 1, 2 or 3");
    }
}

/// Exact total mass of test case 2 on [0,1].
inline double tc2_total_mass(double t) {
    return std::exp(-t) * (1.0 + 0.5 * std::sin(1.0));
}

}  // namespace ebt
