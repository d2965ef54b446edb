#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ebt/coefficients.hpp"
#include "ebt/ebt_solver.hpp"
#include "ebt/measure.hpp"

namespace ebt {

/// Transport substep of the split-up scheme: J explicit Euler substeps of
/// size h applied to every cohort position, with the frozen velocity b_k.
template <class BFn>
std::vector<double> transport_substep(std::vector<double> positions, BFn&& b_k, double h,
                                      std::size_t substeps) {
    if (!(h > 0.0) || substeps < 1)
        throw std::invalid_argument("transport_substep: need h > 0 and substeps >= 1");
    for (std::size_t j = 0; j < substeps; ++j)
        for (double& x : positions) x += h * b_k(x);
    return positions;
}

/// Growth/birth substep with frozen death and birth rates evaluated at the
/// post-transport positions. boundary_index designates the newly created
/// empty cohort; the birth sum feeds it and runs over all cohorts,
/// including the boundary one.
inline std::vector<double> growth_substep(std::vector<double> masses,
                                          const std::vector<double>& c_frozen,
                                          const std::vector<double>& beta_frozen,
                                          std::size_t boundary_index, double h,
                                          std::size_t substeps) {
    const std::size_t n = masses.size();
    if (c_frozen.size() != n || beta_frozen.size() != n || boundary_index >= n)
        throw std::invalid_argument("growth_substep: inconsistent sizes");
    if (!(h > 0.0) || substeps < 1)
        throw std::invalid_argument("growth_substep: need h > 0 and substeps >= 1");
    for (std::size_t j = 0; j < substeps; ++j) {
        double births = 0.0;
        for (std::size_t i = 0; i < n; ++i) births += beta_frozen[i] * masses[i];
        for (std::size_t i = 0; i < n; ++i) {
            const double dm = -c_frozen[i] * masses[i] + (i == boundary_index ? births : 0.0);
            masses[i] += h * dm;
        }
    }
    return masses;
}

/// Split-up run over K intervals. On [t_k, t_{k+1}] the positions are
/// transported with b frozen at (t_k, mu_{t_k}); then a new empty cohort is
/// created at x_b, c and beta are frozen at (t_k, mu~) where mu~ carries the
/// pre-growth masses at the transported positions, and the masses evolve
/// with the frozen rates. The new cohort is not transported within its
/// creation interval.
template <class Coeffs>
SolveReport run_splitup(const Coeffs& coeffs, const DiscreteMeasure& initial,
                        const SolverGrid& grid) {
    const std::size_t K = grid.boundary_cohorts;
    const std::size_t J = grid.euler_substeps;
    const double T = grid.t_final;
    if (K < 1 || J < 1 || !(T > 0.0))
        throw std::invalid_argument("run_splitup: need K >= 1, J >= 1, T > 0");

    std::vector<double> xs = initial.points;
    std::vector<double> ms = initial.masses;
    const double h = T / (static_cast<double>(K) * static_cast<double>(J));

    SolveReport report;
    auto record = [&](Anomaly kind, double t) {
        for (const auto& a : report.anomalies)
            if (a.kind == kind) return;
        report.anomalies.push_back({kind, t});
    };
    auto mass_now = [&]() {
        double m = 0.0;
        for (double v : ms) m += v;
        return m;
    };
    report.mass_checkpoints.emplace_back(0.0, mass_now());

    std::vector<double> c_frozen, beta_frozen;
    for (std::size_t k = 0; k < K; ++k) {
        const double t_k = T * static_cast<double>(k) / static_cast<double>(K);
        const double t_next = T * static_cast<double>(k + 1) / static_cast<double>(K);

        MeasureSummary sum{0.0, t_k};
        for (std::size_t i = 0; i < xs.size(); ++i) sum.total_mass += coeffs.gamma(xs[i]) * ms[i];
        for (std::size_t j = 0; j < J; ++j)
            for (double& x : xs) x += h * coeffs.b(t_k, sum, x);

        xs.push_back(coeffs.x_b);
        ms.push_back(0.0);
        const std::size_t boundary = xs.size() - 1;
        ++report.boundary_cohorts_created;

        MeasureSummary tilde{0.0, t_k};
        for (std::size_t i = 0; i < xs.size(); ++i)
            tilde.total_mass += coeffs.gamma(xs[i]) * ms[i];
        c_frozen.resize(xs.size());
        beta_frozen.resize(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            c_frozen[i] = coeffs.c(t_k, tilde, xs[i]);
            beta_frozen[i] = coeffs.beta(t_k, tilde, xs[i]);
        }
        for (std::size_t j = 0; j < J; ++j) {
            double births = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) births += beta_frozen[i] * ms[i];
            for (std::size_t i = 0; i < xs.size(); ++i) {
                ms[i] += h * (-c_frozen[i] * ms[i] + (i == boundary ? births : 0.0));
                report.min_mass = std::min(report.min_mass, ms[i]);
            }
        }

        bool finite = true;
        std::size_t bad = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!(std::isfinite(xs[i]) && std::isfinite(ms[i]))) {
                finite = false;
                bad = i;
                break;
            }
        }
        if (!finite) {
            record(Anomaly::nonfinite, t_next);
            report.blow_up = BlowUp{t_next, bad};
            report.completed = false;
            report.measure_valid = false;
            return report;
        }
        report.mass_checkpoints.emplace_back(t_next, mass_now());
    }

    report.completed = true;
    bool valid = true;
    for (double m : ms) valid = valid && m >= 0.0;
    report.measure_valid = valid;
    if (valid) {
        DiscreteMeasure raw;
        raw.x_b = coeffs.x_b;
        raw.points = std::move(xs);
        raw.masses = std::move(ms);
        report.final_measure = canonicalize(raw);
    }
    return report;
}

}  // namespace ebt
