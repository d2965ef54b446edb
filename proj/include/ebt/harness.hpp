#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ebt/ebt_solver.hpp"
#include "ebt/flat_metric.hpp"
#include "ebt/measure.hpp"
#include "ebt/measure_io.hpp"
#include "ebt/splitup.hpp"
#include "ebt/test_cases.hpp"

namespace ebt {

enum class Scheme { ebt, ebt_star, sebt, splitup };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::ebt: return "ebt";
        case Scheme::ebt_star: return "ebt-star";
        case Scheme::sebt: return "sebt";
        case Scheme::splitup: return "splitup";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& name) {
    if (name == "ebt") return Scheme::ebt;
    if (name == "ebt-star") return Scheme::ebt_star;
    if (name == "sebt") return Scheme::sebt;
    if (name == "splitup") return Scheme::splitup;
    return std::nullopt;
}

enum class Metric { flat, l1, both };

struct SimulationConfig {
    Scheme scheme = Scheme::sebt;
    int test_case = 1;
    std::size_t initial_nodes = 16;     // I
    std::size_t boundary_cohorts = 4;   // K
    std::size_t euler_substeps = 4;     // J
    double t_final = 1.0;
    Metric metric = Metric::flat;
    std::string reference_path;  // required to score test case 3
};

struct InitialApproximation {
    DiscreteMeasure measure;
    double e_x = 0.0;  // flat-metric bound sum_cells int |x - midpoint| u0 dx
};

/// Midpoint-cell approximation of a nonnegative density: one atom per cell
/// at the cell midpoint carrying the cell integral (64-subinterval midpoint
/// quadrature). The reported e_x bounds the flat distance to u0 since an
/// admissible test function varies by at most |x - x_i| across a cell.
inline InitialApproximation approximate_initial(const std::function<double(double)>& u0,
                                                double lo, double hi, std::size_t cells) {
    if (cells < 1 || !(hi > lo))
        throw std::invalid_argument("approximate_initial: bad domain or cell count");
    constexpr int kSub = 64;
    InitialApproximation out;
    out.measure.x_b = lo;
    const double w = (hi - lo) / static_cast<double>(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double a = lo + static_cast<double>(i) * w;
        const double mid = a + 0.5 * w;
        double mass = 0.0, spread = 0.0;
        for (int k = 0; k < kSub; ++k) {
            const double x = a + (k + 0.5) * (w / kSub);
            const double u = u0(x);
            if (!(u >= 0.0) || !std::isfinite(u))
                throw std::invalid_argument("approximate_initial: u0 must be finite and >= 0");
            mass += u;
            spread += std::abs(x - mid) * u;
        }
        out.measure.points.push_back(mid);
        out.measure.masses.push_back(mass * (w / kSub));
        out.e_x += spread * (w / kSub);
    }
    out.measure = canonicalize(out.measure);
    return out;
}

struct DiscretizedExact {
    DiscreteMeasure measure;
    double bias_bound = 0.0;
};

/// Cell-midpoint discretization of the exact solution at time t, used as
/// the second argument of the flat metric. bias_bound is the e_x of the
/// construction, i.e. the scoring error it can introduce.
inline DiscretizedExact discretize_exact(const ExactSolution& exact, double t,
                                         std::size_t cells, double x_b = 0.0) {
    if (!exact.known)
        throw std::invalid_argument(
            "discretize_exact: no analytic solution; score against a reference measure");
    const auto ia = approximate_initial([&](double x) { return exact.u(t, x); }, x_b,
                                        exact.x_max, cells);
    return {ia.measure, ia.e_x};
}

struct ScoreResult {
    double e_flat = std::numeric_limits<double>::quiet_NaN();
    double e_l1 = std::numeric_limits<double>::quiet_NaN();
    double flat_bias_bound = std::numeric_limits<double>::quiet_NaN();
    std::size_t flat_resolution = 0;  // atoms in the discretized exact solution
    bool bias_ok = true;              // bias_bound <= e_flat / 10
};

inline constexpr std::size_t kMaxExactResolution = std::size_t{1} << 20;

/// Flat error against the analytic solution: the exact density is
/// discretized at resolution M (at least 64 I, capped at 2^20 atoms) and M
/// is doubled until the discretization bias is below a tenth of the
/// measured error.
inline void score_flat_vs_exact(ScoreResult& score, const DiscreteMeasure& sim,
                                const ExactSolution& exact, double t,
                                std::size_t initial_nodes, double x_b) {
    std::size_t m = std::clamp<std::size_t>(64 * initial_nodes, 4096, kMaxExactResolution);
    for (;;) {
        const DiscretizedExact de = discretize_exact(exact, t, m, x_b);
        score.e_flat = flat_distance(sim, de.measure).distance;
        score.flat_bias_bound = de.bias_bound;
        score.flat_resolution = m;
        score.bias_ok = de.bias_bound <= score.e_flat / 10.0;
        if (score.bias_ok || m >= kMaxExactResolution) break;
        m = std::min(2 * m, kMaxExactResolution);
    }
}

struct RunOutcome {
    SimulationConfig config;
    SolveReport report;
    ScoreResult score;
    double e_x = 0.0;
    double runtime_ms = 0.0;  // solver only, excludes scoring
};

namespace detail {

template <class Coeffs>
SolveReport dispatch_run(const Coeffs& coeffs, Scheme scheme, const DiscreteMeasure& initial,
                         const SolverGrid& grid) {
    switch (scheme) {
        case Scheme::sebt: return run_ebt(coeffs, EbtVariant::simplified, initial, grid);
        case Scheme::ebt: return run_ebt(coeffs, EbtVariant::original, initial, grid);
        case Scheme::ebt_star: return run_ebt(coeffs, EbtVariant::star, initial, grid);
        case Scheme::splitup: return run_splitup(coeffs, initial, grid);
    }
    throw std::logic_error("dispatch_run: unknown scheme");
}

}  // namespace detail

/// Runs one simulation and scores it on [x_b, x_max] in the requested
/// metrics. Test case 3 needs a reference measure for the flat metric and
/// does not support L1. Invalid final measures (negative masses, aborts)
/// are left unscored.
inline RunOutcome simulate_and_score(const SimulationConfig& cfg,
                                     const DiscreteMeasure* reference = nullptr) {
    const TestCaseBundle tc = test_case(cfg.test_case);
    const bool want_l1 = cfg.metric == Metric::l1 || cfg.metric == Metric::both;
    const bool want_flat = cfg.metric == Metric::flat || cfg.metric == Metric::both;
    if (!tc.exact.known && want_l1)
        throw std::invalid_argument("L1 scoring needs an analytic exact solution");

    RunOutcome out;
    out.config = cfg;
    const double x_b = tc.coeffs.x_b;
    const auto init = approximate_initial(tc.initial, x_b, tc.exact.x_max, cfg.initial_nodes);
    out.e_x = init.e_x;

    const SolverGrid grid{cfg.boundary_cohorts, cfg.euler_substeps, cfg.t_final};
    const auto t0 = std::chrono::steady_clock::now();
    out.report = with_test_case_coefficients(cfg.test_case, [&](auto coeffs) {
        return detail::dispatch_run(coeffs, cfg.scheme, init.measure, grid);
    });
    out.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    if (!out.report.measure_valid) return out;
    const DiscreteMeasure sim = restrict_measure(out.report.final_measure, x_b, tc.exact.x_max);

    if (want_flat) {
        if (tc.exact.known) {
            score_flat_vs_exact(out.score, sim, tc.exact, cfg.t_final, cfg.initial_nodes, x_b);
        } else {
            const DiscreteMeasure* ref = reference;
            MeasureFile loaded;
            if (!ref) {
                if (cfg.reference_path.empty())
                    throw std::invalid_argument(
                        "test case 3 needs --reference to compute the flat error");
                loaded = read_measure_csv(cfg.reference_path);
                ref = &loaded.measure;
            }
            out.score.e_flat = flat_distance(sim, *ref).distance;
        }
    }
    if (want_l1) {
        const auto mol = mollify(sim, x_b, tc.exact.x_max);
        out.score.e_l1 = l1_error(
            mol.density, [&](double x) { return tc.exact.u(cfg.t_final, x); }, x_b,
            tc.exact.x_max);
    }
    return out;
}

/// o = log2(e_half / e_full), the per-doubling convergence order.
inline double convergence_order(double e_half, double e_full) {
    return std::log2(e_half / e_full);
}

struct ConvergenceRow {
    std::size_t initial_nodes = 0;
    std::size_t boundary_cohorts = 0;
    std::size_t euler_substeps = 0;
    double e_flat = std::numeric_limits<double>::quiet_NaN();
    double e_l1 = std::numeric_limits<double>::quiet_NaN();
    double o_flat = std::numeric_limits<double>::quiet_NaN();
    double o_l1 = std::numeric_limits<double>::quiet_NaN();
    double runtime_ms = 0.0;
    std::vector<Anomaly> anomalies;
    double e_x = 0.0;
    double flat_bias_bound = std::numeric_limits<double>::quiet_NaN();
};

struct StudyConfig {
    Scheme scheme = Scheme::sebt;
    int test_case = 1;
    std::size_t base_nodes = 16;
    int doublings = 0;           // rows at I = base, 2 base, ..., 2^doublings base
    std::size_t node_divisor = 4;  // K = I / node_divisor
    std::size_t euler_substeps = 4;
    Metric metric = Metric::both;
    double t_final = 1.0;
    std::string reference_path;
};

/// Doubling study: runs I, 2I, 4I, ... with K = I/divisor and fixed J, and
/// derives the order of each row from its half-resolution predecessor.
inline std::vector<ConvergenceRow> convergence_study(const StudyConfig& study) {
    if (study.base_nodes % study.node_divisor != 0)
        throw std::invalid_argument("convergence_study: base I must be divisible by the K policy");
    std::vector<ConvergenceRow> rows;
    for (int d = 0; d <= study.doublings; ++d) {
        SimulationConfig cfg;
        cfg.scheme = study.scheme;
        cfg.test_case = study.test_case;
        cfg.initial_nodes = study.base_nodes << d;
        cfg.boundary_cohorts = cfg.initial_nodes / study.node_divisor;
        cfg.euler_substeps = study.euler_substeps;
        cfg.t_final = study.t_final;
        cfg.metric = study.metric;
        cfg.reference_path = study.reference_path;
        const RunOutcome run = simulate_and_score(cfg);

        ConvergenceRow row;
        row.initial_nodes = cfg.initial_nodes;
        row.boundary_cohorts = cfg.boundary_cohorts;
        row.euler_substeps = cfg.euler_substeps;
        row.e_flat = run.score.e_flat;
        row.e_l1 = run.score.e_l1;
        row.runtime_ms = run.runtime_ms;
        row.e_x = run.e_x;
        row.flat_bias_bound = run.score.flat_bias_bound;
        for (const auto& a : run.report.anomalies) row.anomalies.push_back(a.kind);
        if (!rows.empty()) {
            const ConvergenceRow& prev = rows.back();
            if (std::isfinite(prev.e_flat) && std::isfinite(row.e_flat))
                row.o_flat = convergence_order(prev.e_flat, row.e_flat);
            if (std::isfinite(prev.e_l1) && std::isfinite(row.e_l1))
                row.o_l1 = convergence_order(prev.e_l1, row.e_l1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string anomaly_tokens(const std::vector<Anomaly>& list) {
    std::string out;
    for (const Anomaly a : list) {
        if (!out.empty()) out += ';';
        out += anomaly_token(a);
    }
    return out;
}

/// CSV schema: I,K,J,e_flat,e_l1,o_flat,o_l1,runtime_ms,anomalies with
/// empty fields for absent values.
inline void write_convergence_csv(const std::string& path,
                                  const std::vector<ConvergenceRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "I,K,J,e_flat,e_l1,o_flat,o_l1,runtime_ms,anomalies\n";
    char buf[64];
    auto field = [&](double v) -> std::string {
        if (!std::isfinite(v)) return "";
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    };
    for (const auto& r : rows) {
        out << r.initial_nodes << ',' << r.boundary_cohorts << ',' << r.euler_substeps << ','
            << field(r.e_flat) << ',' << field(r.e_l1) << ',' << field(r.o_flat) << ','
            << field(r.o_l1) << ',' << field(r.runtime_ms) << ',' << anomaly_tokens(r.anomalies)
            << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct Table5Cell {
    std::size_t nodes = 0;     // I = K
    std::size_t substeps = 0;  // J
    Scheme scheme = Scheme::sebt;
    double error = std::numeric_limits<double>::quiet_NaN();
    std::vector<Anomaly> anomalies;
    bool aborted = false;
    double runtime_ms = 0.0;
};

/// Test case 3 sweep over I = K in sizes and J in substeps for all four
/// schemes, scored in flat metric against a stored reference run. Cells
/// whose run hit an anomaly report it instead of an error value.
inline std::vector<Table5Cell> table5_sweep(
    const DiscreteMeasure& reference,
    const std::vector<std::size_t>& sizes = {32, 128, 1024},
    const std::vector<std::size_t>& substeps = {1, 2, 8, 32}) {
    const Scheme order[] = {Scheme::sebt, Scheme::ebt, Scheme::splitup, Scheme::ebt_star};
    std::vector<Table5Cell> cells;
    for (std::size_t n : sizes) {
        for (std::size_t j : substeps) {
            for (Scheme s : order) {
                SimulationConfig cfg;
                cfg.scheme = s;
                cfg.test_case = 3;
                cfg.initial_nodes = n;
                cfg.boundary_cohorts = n;
                cfg.euler_substeps = j;
                cfg.metric = Metric::flat;
                const RunOutcome run = simulate_and_score(cfg, &reference);
                Table5Cell cell;
                cell.nodes = n;
                cell.substeps = j;
                cell.scheme = s;
                cell.error = run.score.e_flat;
                cell.aborted = !run.report.completed;
                cell.runtime_ms = run.runtime_ms;
                for (const auto& a : run.report.anomalies) cell.anomalies.push_back(a.kind);
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

/// Reference solution for test case 3: a simplified-EBT run with
/// I = K = nodes and the given substep count, written as a measure CSV
/// with the generating parameters in the metadata header.
inline SolveReport generate_reference(const std::string& out_path, std::size_t nodes,
                                      std::size_t substeps, double t_final = 1.0) {
    const TestCaseBundle tc = test_case(3);
    const auto init = approximate_initial(tc.initial, tc.coeffs.x_b, tc.exact.x_max, nodes);
    SolveReport report;
    if (t_final == 0.0) {
        report.completed = true;
        report.measure_valid = true;
        report.final_measure = init.measure;
    } else {
        report = run_ebt(Tc3Coefficients{}, EbtVariant::simplified, init.measure,
                         SolverGrid{nodes, substeps, t_final});
    }
    if (!report.measure_valid)
        throw std::runtime_error("generate_reference: run did not produce a valid measure");
    char t_buf[32];
    std::snprintf(t_buf, sizeof t_buf, "%.17g", t_final);
    write_measure_csv(out_path, report.final_measure,
                      {{"scheme", "sebt"},
                       {"test_case", "3"},
                       {"I", std::to_string(nodes)},
                       {"K", std::to_string(nodes)},
                       {"J", std::to_string(substeps)},
                       {"T", t_buf}});
    return report;
}

}  // namespace ebt
