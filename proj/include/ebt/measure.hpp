#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ebt {

/// Finite nonnegative measure on [x_b, inf) stored as a list of point
/// masses. Canonical form: positions strictly increasing, duplicates
/// merged, no zero-mass atoms.
struct DiscreteMeasure {
    std::vector<double> points;
    std::vector<double> masses;
    double x_b = 0.0;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Sorts atoms, merges equal positions and drops zero-mass atoms.
/// The total mass is preserved exactly: both the merge sums and
/// total_mass() accumulate left to right over sorted positions, so the
/// partial sums group identically.
inline DiscreteMeasure canonicalize(const DiscreteMeasure& in) {
    if (in.points.size() != in.masses.size())
        throw std::invalid_argument("measure: points/masses size mismatch");
    std::vector<std::size_t> idx(in.points.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return in.points[a] < in.points[b];
    });

    DiscreteMeasure out;
    out.x_b = in.x_b;
    out.points.reserve(in.points.size());
    out.masses.reserve(in.masses.size());
    for (std::size_t i : idx) {
        const double x = in.points[i];
        const double m = in.masses[i];
        if (!std::isfinite(x) || !std::isfinite(m))
            throw std::invalid_argument("measure: non-finite atom");
        if (m < 0.0)
            throw std::invalid_argument("measure: negative mass");
        if (!out.points.empty() && out.points.back() == x)
            out.masses.back() += m;
        else {
            out.points.push_back(x);
            out.masses.push_back(m);
        }
    }
    std::size_t kept = 0;
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        if (out.masses[i] == 0.0) continue;
        out.points[kept] = out.points[i];
        out.masses[kept] = out.masses[i];
        ++kept;
    }
    out.points.resize(kept);
    out.masses.resize(kept);
    return out;
}

/// Sum of masses, left to right.
inline double total_mass(const DiscreteMeasure& m) {
    double s = 0.0;
    for (double v : m.masses) s += v;
    return s;
}

/// Atoms with position in [lo, hi]; canonical order is preserved.
inline DiscreteMeasure restrict_measure(const DiscreteMeasure& m, double lo, double hi) {
    DiscreteMeasure out;
    out.x_b = m.x_b;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.points[i] >= lo && m.points[i] <= hi) {
            out.points.push_back(m.points[i]);
            out.masses.push_back(m.masses[i]);
        }
    }
    return out;
}

/// Density that is constant on each cell [breakpoints[i], breakpoints[i+1]).
struct PiecewiseConstantDensity {
    std::vector<double> breakpoints;  // size = values.size() + 1, increasing
    std::vector<double> values;       // nonnegative
    double domain_lo = 0.0;
    double domain_hi = 0.0;

    double operator()(double x) const {
        if (breakpoints.size() < 2 || x < breakpoints.front() || x >= breakpoints.back())
            return 0.0;
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
        const std::size_t cell = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
        return values[std::min(cell, values.size() - 1)];
    }

    double integral() const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            s += values[i] * (breakpoints[i + 1] - breakpoints[i]);
        return s;
    }
};

struct MollifyResult {
    PiecewiseConstantDensity density;
    double source_mass = 0.0;   // sum of the atom masses used
    double clipped_mass = 0.0;  // source_mass - integral of the density
};

/// Converts a Dirac sum to a piecewise constant density. Cell i around
/// atom x_i carries the value 2 m_i / (x_{i+1} - x_{i-1}) on
/// [(x_{i-1}+x_i)/2, (x_i+x_{i+1})/2). The missing neighbors at the ends
/// are the reflections x_0 = 2 x_1 - x_2 and x_{N+1} = 2 x_N - x_{N-1};
/// cell boundaries are then clipped to [lo, hi]. Only the two end cells
/// can lose mass to the clipping, which is reported as clipped_mass.
inline MollifyResult mollify(const DiscreteMeasure& measure, double lo, double hi) {
    std::vector<double> xs, ms;
    for (std::size_t i = 0; i < measure.size(); ++i) {
        if (measure.points[i] >= lo && measure.points[i] <= hi) {
            xs.push_back(measure.points[i]);
            ms.push_back(measure.masses[i]);
        }
    }
    const std::size_t n = xs.size();
    if (n < 2)
        throw std::invalid_argument("mollify: need at least 2 atoms inside the domain");

    MollifyResult out;
    out.density.domain_lo = lo;
    out.density.domain_hi = hi;
    auto neighbor = [&](std::size_t i) -> double {
        if (i == 0) return 2.0 * xs[0] - xs[1];
        if (i == n + 1) return 2.0 * xs[n - 1] - xs[n - 2];
        return xs[i - 1];
    };
    out.density.breakpoints.reserve(n + 1);
    out.density.values.reserve(n);
    out.density.breakpoints.push_back(std::clamp((neighbor(0) + xs[0]) / 2.0, lo, hi));
    for (std::size_t i = 0; i < n; ++i) {
        const double right = std::clamp((xs[i] + neighbor(i + 2)) / 2.0, lo, hi);
        out.density.values.push_back(2.0 * ms[i] / (neighbor(i + 2) - neighbor(i)));
        out.density.breakpoints.push_back(right);
        out.source_mass += ms[i];
    }
    out.clipped_mass = out.source_mass - out.density.integral();
    return out;
}

/// L1 distance between a piecewise constant density and a (continuous)
/// reference on [lo, hi]. Each density cell, plus the uncovered gaps at
/// the domain ends, is split into 64 uniform subintervals integrated by
/// the midpoint rule.
inline double l1_error(const PiecewiseConstantDensity& density,
                       const std::function<double(double)>& exact,
                       double lo, double hi) {
    constexpr int kSub = 64;
    double total = 0.0;
    auto add_cell = [&](double a, double b, double value) {
        if (b <= a) return;
        const double w = (b - a) / kSub;
        double s = 0.0;
        for (int k = 0; k < kSub; ++k) {
            const double x = a + (k + 0.5) * w;
            s += std::abs(value - exact(x));
        }
        total += s * w;
    };
    if (density.values.empty()) {
        add_cell(lo, hi, 0.0);
        return total;
    }
    add_cell(lo, std::max(lo, density.breakpoints.front()), 0.0);
    for (std::size_t i = 0; i < density.values.size(); ++i)
        add_cell(std::max(lo, density.breakpoints[i]),
                 std::min(hi, density.breakpoints[i + 1]), density.values[i]);
    add_cell(std::min(hi, density.breakpoints.back()), hi, 0.0);
    return total;
}

}  // namespace ebt
