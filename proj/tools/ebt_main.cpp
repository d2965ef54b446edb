#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ebt/harness.hpp"

namespace {

constexpr double kLongRunCost = 8e9;  // cohort updates, (I+K) K J

double run_cost(std::size_t nodes, std::size_t cohorts, std::size_t substeps) {
    return (static_cast<double>(nodes) + static_cast<double>(cohorts)) *
           static_cast<double>(cohorts) * static_cast<double>(substeps);
}

std::string fmt(double v, const char* spec = "%.6g") {
    if (!std::isfinite(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

ebt::Scheme scheme_from(const std::string& name) {
    const auto s = ebt::parse_scheme(name);
    if (!s) throw CLI::ValidationError("--scheme", "expected ebt, ebt-star, sebt or splitup");
    return *s;
}

ebt::Metric metric_from(const std::string& name) {
    if (name == "flat") return ebt::Metric::flat;
    if (name == "l1") return ebt::Metric::l1;
    if (name == "both") return ebt::Metric::both;
    throw CLI::ValidationError("--metric", "expected flat, l1 or both");
}

// "K=I/4,J=4"
std::pair<std::size_t, std::size_t> parse_policy(const std::string& policy) {
    std::size_t divisor = 0, substeps = 0;
    unsigned long d = 0, j = 0;
    if (std::sscanf(policy.c_str(), "K=I/%lu,J=%lu", &d, &j) == 2) {
        divisor = d;
        substeps = j;
    } else if (std::sscanf(policy.c_str(), "K=I,J=%lu", &j) == 1) {
        divisor = 1;
        substeps = j;
    }
    if (divisor == 0 || substeps == 0)
        throw CLI::ValidationError("--policy", "expected K=I/<d>,J=<j>");
    return {divisor, substeps};
}

void print_run(const ebt::RunOutcome& run) {
    const auto& cfg = run.config;
    std::printf("scheme=%s test-case=%d I=%zu K=%zu J=%zu T=%s\n", ebt::scheme_name(cfg.scheme),
                cfg.test_case, cfg.initial_nodes, cfg.boundary_cohorts, cfg.euler_substeps,
                fmt(cfg.t_final).c_str());
    std::printf("e_x=%s runtime_ms=%s\n", fmt(run.e_x).c_str(), fmt(run.runtime_ms).c_str());
    if (std::isfinite(run.score.e_flat)) {
        std::printf("e_flat=%s", fmt(run.score.e_flat, "%.10g").c_str());
        if (run.score.flat_resolution > 0)
            std::printf(" (exact discretized at M=%zu, bias_bound=%s%s)",
                        run.score.flat_resolution, fmt(run.score.flat_bias_bound).c_str(),
                        run.score.bias_ok ? "" : ", above e/10");
        std::printf("\n");
    }
    if (std::isfinite(run.score.e_l1))
        std::printf("e_l1=%s\n", fmt(run.score.e_l1, "%.10g").c_str());
    if (!run.report.completed) {
        std::printf("aborted at t=%s", fmt(run.report.blow_up ? run.report.blow_up->time : 0).c_str());
        if (run.report.blow_up) std::printf(" (cohort %zu non-finite)", run.report.blow_up->cohort);
        std::printf("\n");
    } else if (!run.report.measure_valid) {
        std::printf("final measure invalid (negative masses); errors not computed\n");
    }
    std::vector<ebt::Anomaly> kinds;
    for (const auto& a : run.report.anomalies) kinds.push_back(a.kind);
    if (!kinds.empty()) {
        std::printf("anomalies=%s", ebt::anomaly_tokens(kinds).c_str());
        for (const auto& a : run.report.anomalies)
            std::printf(" [%s at t=%s]", ebt::anomaly_token(a.kind), fmt(a.first_time).c_str());
        std::printf("\n");
    }
}

int cmd_simulate(const ebt::SimulationConfig& cfg, const std::string& out_path, bool allow_long) {
    if (run_cost(cfg.initial_nodes, cfg.boundary_cohorts, cfg.euler_substeps) > kLongRunCost &&
        !allow_long) {
        std::fprintf(stderr, "this configuration is paper-scale; pass --allow-long to run it\n");
        return 1;
    }
    const ebt::RunOutcome run = ebt::simulate_and_score(cfg);
    print_run(run);
    if (!out_path.empty() && run.report.measure_valid) {
        ebt::write_measure_csv(out_path, run.report.final_measure,
                               {{"scheme", ebt::scheme_name(cfg.scheme)},
                                {"test_case", std::to_string(cfg.test_case)},
                                {"I", std::to_string(cfg.initial_nodes)},
                                {"K", std::to_string(cfg.boundary_cohorts)},
                                {"J", std::to_string(cfg.euler_substeps)},
                                {"T", fmt(cfg.t_final, "%.17g")}});
        std::printf("measure written to %s\n", out_path.c_str());
    }
    return run.report.anomalies.empty() && run.report.completed ? 0 : 2;
}

int cmd_study(const ebt::StudyConfig& study, const std::string& out_path, bool allow_long) {
    const std::size_t top = study.base_nodes << study.doublings;
    if (run_cost(top, top / study.node_divisor, study.euler_substeps) > kLongRunCost &&
        !allow_long) {
        std::fprintf(stderr, "this study is paper-scale; pass --allow-long to run it\n");
        return 1;
    }
    const auto rows = ebt::convergence_study(study);
    std::printf("%8s %8s %4s  %-12s %-6s %-12s %-6s %-10s %-10s %s\n", "I", "K", "J", "e_flat",
                "o", "e_l1", "o", "e_x", "time_ms", "anomalies");
    for (const auto& r : rows)
        std::printf("%8zu %8zu %4zu  %-12s %-6s %-12s %-6s %-10s %-10s %s\n", r.initial_nodes,
                    r.boundary_cohorts, r.euler_substeps, fmt(r.e_flat, "%.4e").c_str(),
                    fmt(r.o_flat, "%.2f").c_str(), fmt(r.e_l1, "%.4e").c_str(),
                    fmt(r.o_l1, "%.2f").c_str(), fmt(r.e_x, "%.2e").c_str(),
                    fmt(r.runtime_ms, "%.1f").c_str(), ebt::anomaly_tokens(r.anomalies).c_str());
    if (!out_path.empty()) {
        ebt::write_convergence_csv(out_path, rows);
        std::printf("table written to %s\n", out_path.c_str());
    }
    for (const auto& r : rows)
        if (!r.anomalies.empty()) return 2;
    return 0;
}

int cmd_reference(std::size_t nodes, std::size_t substeps, double t_final,
                  const std::string& out_path, bool allow_long) {
    if (run_cost(nodes, nodes, substeps) > kLongRunCost && !allow_long) {
        std::fprintf(stderr, "this reference is paper-scale; pass --allow-long to run it\n");
        return 1;
    }
    const ebt::SolveReport report = ebt::generate_reference(out_path, nodes, substeps, t_final);
    std::printf("reference with %zu atoms written to %s\n", report.final_measure.size(),
                out_path.c_str());
    return report.anomalies.empty() ? 0 : 2;
}

int cmd_dist(const std::string& a, const std::string& b) {
    const ebt::DiscreteMeasure mu = ebt::read_measure_csv(a).measure;
    const ebt::DiscreteMeasure nu = ebt::read_measure_csv(b).measure;
    std::printf("%.12g\n", ebt::flat_distance(mu, nu).distance);
    return 0;
}

int cmd_table5(const std::string& reference_path, const std::string& out_path) {
    const ebt::DiscreteMeasure reference = ebt::read_measure_csv(reference_path).measure;
    const auto cells = ebt::table5_sweep(reference);
    std::printf("%6s %4s  %-14s %-14s %-14s %-14s\n", "I=K", "J", "sEBT", "EBT", "SU", "EBT*");
    bool any_anomaly = false;
    for (std::size_t i = 0; i < cells.size(); i += 4) {
        std::printf("%6zu %4zu", cells[i].nodes, cells[i].substeps);
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& c = cells[i + k];
            any_anomaly = any_anomaly || !c.anomalies.empty() || c.aborted;
            std::string text = c.anomalies.empty() ? fmt(c.error, "%.4e")
                                                   : ebt::anomaly_tokens(c.anomalies);
            if (c.aborted) text += "(abort)";
            std::printf("  %-14s", text.c_str());
        }
        std::printf("\n");
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
        out << "scheme,I,K,J,error,anomalies,runtime_ms\n";
        for (const auto& c : cells)
            out << ebt::scheme_name(c.scheme) << ',' << c.nodes << ',' << c.nodes << ','
                << c.substeps << ',' << fmt(c.error, "%.10g") << ','
                << ebt::anomaly_tokens(c.anomalies) << ',' << fmt(c.runtime_ms, "%.3f") << "\n";
        std::printf("table written to %s\n", out_path.c_str());
    }
    return any_anomaly ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Particle methods (EBT variants and split-up) for the size-structured "
                 "population equation, with a flat-metric error engine"};
    app.require_subcommand(1);
    bool allow_long = false;
    app.add_flag("--allow-long", allow_long, "allow paper-scale (long-running) configurations");

    std::string scheme = "sebt", metric = "flat", reference, out_path, policy = "K=I/4,J=4";
    int test_case = 1;
    std::size_t nodes = 16, cohorts = 4, substeps = 4;
    double t_final = 1.0;
    int doublings = 0;

    auto* simulate = app.add_subcommand("simulate", "run one scheme on one grid and score it");
    simulate->add_option("--scheme", scheme, "ebt | ebt-star | sebt | splitup");
    simulate->add_option("--test-case", test_case, "1, 2 or 3")->required();
    simulate->add_option("--initial-nodes", nodes, "I, atoms approximating u_0")->required();
    simulate->add_option("--boundary-cohorts", cohorts, "K, internalization intervals")->required();
    simulate->add_option("--euler-substeps", substeps, "J, Euler steps per interval")->required();
    simulate->add_option("--t-final", t_final, "final time (default 1)");
    simulate->add_option("--metric", metric, "flat | l1 | both");
    simulate->add_option("--reference", reference, "reference measure CSV (test case 3)");
    simulate->add_option("--out", out_path, "write the final measure CSV here");

    auto* study = app.add_subcommand("study", "doubling convergence study with CSV output");
    study->add_option("--scheme", scheme, "ebt | ebt-star | sebt | splitup");
    study->add_option("--test-case", test_case, "1, 2 or 3")->required();
    study->add_option("--initial-nodes", nodes, "base I (default 16)");
    study->add_option("--doublings", doublings, "extra rows at 2I, 4I, ...")->required();
    study->add_option("--policy", policy, "grid policy, e.g. K=I/4,J=4");
    study->add_option("--metric", metric, "flat | l1 | both");
    study->add_option("--reference", reference, "reference measure CSV (test case 3)");
    study->add_option("--t-final", t_final, "final time (default 1)");
    study->add_option("--out", out_path, "write the convergence CSV here");

    auto* ref = app.add_subcommand("reference", "store a fine simplified-EBT reference run");
    int ref_tc = 3;
    ref->add_option("--test-case", ref_tc, "must be 3")->required();
    ref->add_option("--nodes", nodes, "I = K of the reference run")->required();
    ref->add_option("--substeps", substeps, "J of the reference run")->required();
    ref->add_option("--t-final", t_final, "final time (default 1)");
    ref->add_option("--out", out_path, "output CSV path")->required();

    auto* dist = app.add_subcommand("dist", "flat distance between two measure CSV files");
    std::string file_a, file_b;
    dist->add_option("a", file_a, "first measure CSV")->required();
    dist->add_option("b", file_b, "second measure CSV")->required();

    auto* table5 = app.add_subcommand("table5", "test-case-3 pathology sweep vs a reference");
    table5->add_option("--reference", reference, "reference measure CSV")->required();
    table5->add_option("--out", out_path, "write the sweep CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) {
            ebt::SimulationConfig cfg;
            cfg.scheme = scheme_from(scheme);
            cfg.test_case = test_case;
            cfg.initial_nodes = nodes;
            cfg.boundary_cohorts = cohorts;
            cfg.euler_substeps = substeps;
            cfg.t_final = t_final;
            cfg.metric = metric_from(metric);
            cfg.reference_path = reference;
            return cmd_simulate(cfg, out_path, allow_long);
        }
        if (study->parsed()) {
            ebt::StudyConfig sc;
            sc.scheme = scheme_from(scheme);
            sc.test_case = test_case;
            sc.base_nodes = nodes;
            sc.doublings = doublings;
            std::tie(sc.node_divisor, sc.euler_substeps) = parse_policy(policy);
            sc.metric = metric_from(metric);
            sc.t_final = t_final;
            sc.reference_path = reference;
            return cmd_study(sc, out_path, allow_long);
        }
        if (ref->parsed()) {
            if (ref_tc != 3) {
                std::fprintf(stderr, "reference generation is defined for test case 3 only\n");
                return 1;
            }
            return cmd_reference(nodes, substeps, t_final, out_path, allow_long);
        }
        if (dist->parsed()) return cmd_dist(file_a, file_b);
        if (table5->parsed()) return cmd_table5(reference, out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
