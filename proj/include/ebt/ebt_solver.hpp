#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ebt/coefficients.hpp"
#include "ebt/measure.hpp"

namespace ebt {

enum class EbtVariant { original, star, simplified };

inline const char* variant_name(EbtVariant v) {
    switch (v) {
        case EbtVariant::original: return "ebt";
        case EbtVariant::star: return "ebt-star";
        case EbtVariant::simplified: return "sebt";
    }
    return "?";
}

enum class Anomaly {
    negative_boundary_mass,   // m^B < 0
    boundary_overtakes,       // x^B above the lowest cohort internalized in this run
    nonfinite,                // a cohort value left the representable range
    negative_boundary_offset  // pi^B < 0 (original / star bookkeeping)
};

inline const char* anomaly_token(Anomaly a) {
    switch (a) {
        case Anomaly::negative_boundary_mass: return "m^B<0";
        case Anomaly::boundary_overtakes: return "x^B>x^1";
        case Anomaly::nonfinite: return "nonfinite";
        case Anomaly::negative_boundary_offset: return "pi^B<0";
    }
    return "?";
}

/// Cohorts in creation order. The first initial_count entries approximate
/// the initial datum; later entries are internalized boundary cohorts.
/// The boundary cohort is described by (pi^B, m^B) for the original and
/// star variants and by (x^B, m^B) for the simplified one; the unused
/// field stays at its reset value.
struct CohortState {
    std::vector<double> positions;
    std::vector<double> masses;
    double boundary_offset = 0.0;    // pi^B
    double boundary_position = 0.0;  // x^B (simplified)
    double boundary_mass = 0.0;      // m^B
    double time = 0.0;
    std::size_t initial_count = 0;
};

/// Position of the boundary atom: pi^B/m^B + x_b while m^B > 0 for the
/// original and star variants, x_b otherwise; the stored x^B for the
/// simplified variant.
inline double boundary_atom_position(const CohortState& s, EbtVariant v, double x_b) {
    if (v == EbtVariant::simplified) return s.boundary_position;
    return s.boundary_mass > 0.0 ? x_b + s.boundary_offset / s.boundary_mass : x_b;
}

template <class Coeffs>
MeasureSummary summarize(const CohortState& s, const Coeffs& coeffs, EbtVariant v) {
    double p = 0.0;
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        p += coeffs.gamma(s.positions[i]) * s.masses[i];
    p += coeffs.gamma(boundary_atom_position(s, v, coeffs.x_b)) * s.boundary_mass;
    return {p, s.time};
}

/// dx^i/dt = b(x^i), dm^i/dt = -c(x^i) m^i for every internal cohort.
template <class Coeffs>
std::vector<std::pair<double, double>> rhs_internal(const CohortState& s, const Coeffs& coeffs,
                                                    EbtVariant v = EbtVariant::simplified) {
    const MeasureSummary sum = summarize(s, coeffs, v);
    std::vector<std::pair<double, double>> out(s.positions.size());
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        const Rates r = coeffs.rates(s.time, sum, s.positions[i]);
        out[i] = {r.b, -r.c * s.masses[i]};
    }
    return out;
}

namespace detail {

/// Derivatives of the boundary unknowns given the birth sum over all
/// cohorts (boundary included). Returns (d pi^B/dt, d m^B/dt) for
/// original/star and (d x^B/dt, d m^B/dt) for simplified.
template <class Coeffs>
std::pair<double, double> boundary_derivatives(const CohortState& s, const Coeffs& coeffs,
                                               EbtVariant v, const MeasureSummary& sum,
                                               double beta_sum) {
    if (v == EbtVariant::simplified) {
        const double xb = s.boundary_position;
        return {coeffs.b(s.time, sum, xb),
                -coeffs.c(s.time, sum, xb) * s.boundary_mass + beta_sum};
    }
    const double x0 = coeffs.x_b;
    const double b0 = coeffs.b(s.time, sum, x0);
    const double c0 = coeffs.c(s.time, sum, x0);
    const double db0 = coeffs.db_dx(s.time, sum, x0);
    const double dc0 = coeffs.dc_dx(s.time, sum, x0);
    double dpi = b0 * s.boundary_mass + db0 * s.boundary_offset - c0 * s.boundary_offset;
    if (v == EbtVariant::star)
        dpi -= dc0 * s.boundary_offset * boundary_atom_position(s, v, x0);
    const double dm = -c0 * s.boundary_mass - dc0 * s.boundary_offset + beta_sum;
    return {dpi, dm};
}

}  // namespace detail

/// Boundary-cohort derivatives with the birth sum over the boundary cohort
/// and all internal cohorts.
template <class Coeffs>
std::pair<double, double> rhs_boundary(const CohortState& s, const Coeffs& coeffs, EbtVariant v) {
    const MeasureSummary sum = summarize(s, coeffs, v);
    double beta_sum = 0.0;
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        beta_sum += coeffs.beta(s.time, sum, s.positions[i]) * s.masses[i];
    beta_sum += coeffs.beta(s.time, sum, boundary_atom_position(s, v, coeffs.x_b)) *
                s.boundary_mass;
    return detail::boundary_derivatives(s, coeffs, v, sum, beta_sum);
}

struct StepStatus {
    bool finite = true;
    std::size_t bad_cohort = std::numeric_limits<std::size_t>::max();  // max = boundary
    double min_mass = std::numeric_limits<double>::infinity();
};

/// One explicit Euler step of size h: all derivatives are taken at the
/// pre-step state, with the coefficient summary computed once.
template <class Coeffs>
StepStatus euler_step_inplace(CohortState& s, const Coeffs& coeffs, double h, EbtVariant v) {
    if (!(h > 0.0)) throw std::invalid_argument("euler_step: h must be positive");
    const MeasureSummary sum = summarize(s, coeffs, v);
    const double t = s.time;
    StepStatus status;

    double beta_sum = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < s.positions.size(); ++i) {
        const double x = s.positions[i];
        const double m = s.masses[i];
        const Rates r = coeffs.rates(t, sum, x);
        beta_sum += r.beta * m;
        const double xn = x + h * r.b;
        const double mn = m - h * r.c * m;
        s.positions[i] = xn;
        s.masses[i] = mn;
        status.min_mass = std::min(status.min_mass, mn);
        if (!(std::isfinite(xn) && std::isfinite(mn))) {
            if (ok) status.bad_cohort = i;
            ok = false;
        }
    }
    beta_sum += coeffs.beta(t, sum, boundary_atom_position(s, v, coeffs.x_b)) * s.boundary_mass;
    const auto [da, dm] = detail::boundary_derivatives(s, coeffs, v, sum, beta_sum);
    if (v == EbtVariant::simplified)
        s.boundary_position += h * da;
    else
        s.boundary_offset += h * da;
    s.boundary_mass += h * dm;
    status.min_mass = std::min(status.min_mass, s.boundary_mass);
    if (!(std::isfinite(s.boundary_mass) && std::isfinite(s.boundary_offset) &&
          std::isfinite(s.boundary_position)))
        ok = false;
    s.time = t + h;
    status.finite = ok;
    return status;
}

template <class Coeffs>
CohortState euler_step(const CohortState& s, const Coeffs& coeffs, double h, EbtVariant v) {
    CohortState out = s;
    euler_step_inplace(out, coeffs, h, v);
    return out;
}

struct InternalizeOutcome {
    bool negative_mass = false;
    bool dropped = false;  // empty boundary cohort discarded
};

/// Freezes the boundary cohort into an internal one at its atom position
/// and opens a fresh empty boundary cohort. An exactly empty cohort is
/// dropped rather than kept as a zero atom.
inline InternalizeOutcome internalize_inplace(CohortState& s, EbtVariant v, double x_b) {
    InternalizeOutcome out;
    out.negative_mass = s.boundary_mass < 0.0;
    if (s.boundary_mass == 0.0) {
        out.dropped = true;
    } else {
        s.positions.push_back(boundary_atom_position(s, v, x_b));
        s.masses.push_back(s.boundary_mass);
    }
    s.boundary_offset = 0.0;
    s.boundary_position = x_b;
    s.boundary_mass = 0.0;
    return out;
}

inline CohortState internalize(const CohortState& s, EbtVariant v, double x_b) {
    CohortState out = s;
    internalize_inplace(out, v, x_b);
    return out;
}

/// Anomaly flags of a state snapshot. The overtake check compares x^B with
/// the smallest internal position, i.e. the paper's x^1: the leftmost
/// internal cohort, whether it came from the initial datum or from an
/// internalization.
inline std::vector<Anomaly> detect_anomalies(const CohortState& s, EbtVariant v, double x_b) {
    std::vector<Anomaly> flags;
    if (s.boundary_mass < 0.0) flags.push_back(Anomaly::negative_boundary_mass);
    double lowest = std::numeric_limits<double>::infinity();
    for (double x : s.positions) lowest = std::min(lowest, x);
    if (boundary_atom_position(s, v, x_b) > lowest)
        flags.push_back(Anomaly::boundary_overtakes);
    bool finite = std::isfinite(s.boundary_mass) && std::isfinite(s.boundary_offset) &&
                  std::isfinite(s.boundary_position);
    for (std::size_t i = 0; finite && i < s.positions.size(); ++i)
        finite = std::isfinite(s.positions[i]) && std::isfinite(s.masses[i]);
    if (!finite) flags.push_back(Anomaly::nonfinite);
    if (v != EbtVariant::simplified && s.boundary_offset < 0.0)
        flags.push_back(Anomaly::negative_boundary_offset);
    return flags;
}

struct AnomalyEvent {
    Anomaly kind;
    double first_time = 0.0;
};

struct BlowUp {
    double time = 0.0;
    std::size_t cohort = 0;  // index, or size() for the boundary cohort
};

struct SolveReport {
    DiscreteMeasure final_measure;  // canonical; meaningful when measure_valid
    bool completed = false;         // reached t = T without a non-finite abort
    bool measure_valid = false;     // final masses all finite and nonnegative
    std::optional<BlowUp> blow_up;
    std::vector<AnomalyEvent> anomalies;
    std::vector<std::pair<double, double>> mass_checkpoints;  // (t_k, total mass)
    double min_mass = std::numeric_limits<double>::infinity();
    std::size_t boundary_cohorts_created = 0;

    bool has(Anomaly kind) const {
        for (const auto& a : anomalies)
            if (a.kind == kind) return true;
        return false;
    }
};

struct SolverGrid {
    std::size_t boundary_cohorts = 1;  // K
    std::size_t euler_substeps = 1;    // J
    double t_final = 1.0;
};

/// Full EBT run: K internalization intervals of J Euler substeps each
/// (h = T/(K J)). A boundary cohort is opened at t = 0 and after each of
/// the K-1 internalizations; the final measure reports the last one as an
/// atom at its current position. Anomalies are recorded with their first
/// occurrence; a non-finite value aborts the run.
template <class Coeffs>
SolveReport run_ebt(const Coeffs& coeffs, EbtVariant v, const DiscreteMeasure& initial,
                    const SolverGrid& grid) {
    const std::size_t K = grid.boundary_cohorts;
    const std::size_t J = grid.euler_substeps;
    const double T = grid.t_final;
    if (K < 1 || J < 1 || !(T > 0.0))
        throw std::invalid_argument("run_ebt: need K >= 1, J >= 1, T > 0");

    CohortState s;
    s.positions = initial.points;
    s.masses = initial.masses;
    s.initial_count = initial.size();
    s.boundary_position = coeffs.x_b;
    const double h = T / (static_cast<double>(K) * static_cast<double>(J));

    SolveReport report;
    report.boundary_cohorts_created = 1;
    auto record = [&](Anomaly kind, double t) {
        for (const auto& a : report.anomalies)
            if (a.kind == kind) return;
        report.anomalies.push_back({kind, t});
    };
    auto mass_now = [&]() {
        double m = s.boundary_mass;
        for (double v2 : s.masses) m += v2;
        return m;
    };
    report.mass_checkpoints.emplace_back(0.0, mass_now());

    // Index of the leftmost internal cohort (the paper's x^1). Between
    // internalizations the Euler map x -> x + h b(x) preserves cohort order
    // whenever h Lip(b) < 1 -- true on the whole acceptance grid -- so the
    // argmin only changes when a new cohort is internalized below it.
    std::size_t argmin = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        if (argmin == std::numeric_limits<std::size_t>::max() ||
            s.positions[i] < s.positions[argmin])
            argmin = i;

    for (std::size_t k = 1; k <= K; ++k) {
        const double t_prev = T * static_cast<double>(k - 1) / static_cast<double>(K);
        for (std::size_t j = 1; j <= J; ++j) {
            const StepStatus st = euler_step_inplace(s, coeffs, h, v);
            s.time = t_prev + static_cast<double>(j) * h;
            if (!st.finite) {
                record(Anomaly::nonfinite, s.time);
                report.blow_up = BlowUp{s.time, st.bad_cohort == std::numeric_limits<std::size_t>::max()
                                                    ? s.positions.size()
                                                    : st.bad_cohort};
                report.completed = false;
                report.measure_valid = false;
                return report;
            }
            report.min_mass = std::min(report.min_mass, st.min_mass);
            if (s.boundary_mass < 0.0) record(Anomaly::negative_boundary_mass, s.time);
            if (v != EbtVariant::simplified && s.boundary_offset < 0.0)
                record(Anomaly::negative_boundary_offset, s.time);
            if (argmin != std::numeric_limits<std::size_t>::max() &&
                boundary_atom_position(s, v, coeffs.x_b) > s.positions[argmin])
                record(Anomaly::boundary_overtakes, s.time);
        }
        s.time = T * static_cast<double>(k) / static_cast<double>(K);
        if (k < K) {
            const double internalized_at = boundary_atom_position(s, v, coeffs.x_b);
            const InternalizeOutcome io = internalize_inplace(s, v, coeffs.x_b);
            if (io.negative_mass) record(Anomaly::negative_boundary_mass, s.time);
            ++report.boundary_cohorts_created;
            if (!io.dropped && (argmin == std::numeric_limits<std::size_t>::max() ||
                                internalized_at <= s.positions[argmin]))
                argmin = s.positions.size() - 1;
        }
        report.mass_checkpoints.emplace_back(s.time, mass_now());
    }

    report.completed = true;
    DiscreteMeasure raw;
    raw.x_b = coeffs.x_b;
    raw.points = s.positions;
    raw.masses = s.masses;
    if (s.boundary_mass != 0.0) {
        raw.points.push_back(boundary_atom_position(s, v, coeffs.x_b));
        raw.masses.push_back(s.boundary_mass);
    }
    bool valid = true;
    for (std::size_t i = 0; i < raw.points.size(); ++i)
        valid = valid && std::isfinite(raw.points[i]) && raw.masses[i] >= 0.0;
    report.measure_valid = valid;
    if (valid) report.final_measure = canonicalize(raw);
    return report;
}

}  // namespace ebt
