#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ebt/harness.hpp"

namespace {

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("approximate_initial: unit density, four cells") {
    const auto ia = ebt::approximate_initial([](double) { return 1.0; }, 0.0, 1.0, 4);
    REQUIRE(ia.measure.points == std::vector<double>{0.125, 0.375, 0.625, 0.875});
    REQUIRE(ia.measure.masses == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    // per cell: int |x - mid| dx = (w/2)^2, everything dyadic so the
    // quadrature is exact
    REQUIRE(ia.e_x == 1.0 / 16.0);
}

TEST_CASE("approximate_initial: zero density gives the empty measure") {
    const auto ia = ebt::approximate_initial([](double) { return 0.0; }, 0.0, 1.0, 8);
    REQUIRE(ia.measure.empty());
    REQUIRE(ia.e_x == 0.0);
}

TEST_CASE("approximate_initial rejects negative densities") {
    REQUIRE_THROWS_AS(
        ebt::approximate_initial([](double x) { return x - 0.5; }, 0.0, 1.0, 4),
        std::invalid_argument);
}

TEST_CASE("approximate_initial: 1024 cells are exact for u = 1") {
    const auto ia = ebt::approximate_initial([](double) { return 1.0; }, 0.0, 1.0, 1024);
    REQUIRE(ebt::total_mass(ia.measure) == 1.0);
    REQUIRE(ia.e_x == 1.0 / 4096.0);
}

TEST_CASE("discretize_exact: bias bound and mass") {
    const auto tc1 = ebt::test_case(1);
    const auto d1 = ebt::discretize_exact(tc1.exact, 1.0, 65536);
    REQUIRE(d1.bias_bound == 1.0 / 262144.0);
    REQUIRE(ebt::total_mass(d1.measure) == 1.0);

    const auto tc2 = ebt::test_case(2);
    const auto d2 = ebt::discretize_exact(tc2.exact, 1.0, 65536);
    REQUIRE_THAT(ebt::total_mass(d2.measure),
                 Catch::Matchers::WithinAbs(ebt::tc2_total_mass(1.0), 1e-10));

    const auto tc3 = ebt::test_case(3);
    REQUIRE_THROWS_AS(ebt::discretize_exact(tc3.exact, 1.0, 4096), std::invalid_argument);
}

TEST_CASE("convergence order formula") {
    REQUIRE_THAT(ebt::convergence_order(1.53e-02, 7.56e-03),
                 Catch::Matchers::WithinAbs(std::log2(1.53e-02 / 7.56e-03), 1e-12));
    REQUIRE(ebt::convergence_order(3.7e-4, 3.7e-4) == 0.0);
}

TEST_CASE("measure CSV round trip is bitwise") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pos(0.0, 1.0), mass(1e-12, 2.0);
    ebt::DiscreteMeasure m;
    for (int i = 0; i < 200; ++i) {
        m.points.push_back(pos(rng));
        m.masses.push_back(mass(rng));
    }
    m.points.push_back(1.0 / 3.0);
    m.masses.push_back(0.1 + 0.2);  // not exactly 0.3
    m = ebt::canonicalize(m);
    const std::string path = temp_path("ebt_roundtrip.csv");
    ebt::write_measure_csv(path, m, {{"I", "200"}, {"T", "1"}});
    const auto file = ebt::read_measure_csv(path);
    REQUIRE(file.measure.points == m.points);
    REQUIRE(file.measure.masses == m.masses);
    REQUIRE(file.metadata.size() == 2);
    REQUIRE(file.metadata[0] == std::pair<std::string, std::string>{"I", "200"});
    std::filesystem::remove(path);
}

TEST_CASE("measure CSV rejects malformed input") {
    const std::string path = temp_path("ebt_bad.csv");
    {
        std::ofstream out(path);
        out << "not,a,measure\n";
    }
    REQUIRE_THROWS_AS(ebt::read_measure_csv(path), std::runtime_error);
    std::filesystem::remove(path);
    REQUIRE_THROWS_AS(ebt::read_measure_csv(temp_path("ebt_missing.csv")),
                      std::runtime_error);
}

TEST_CASE("simulate_and_score reproduces the coarse flat errors") {
    // paper values at I=16, K=4, J=4: sEBT 1.53e-02, EBT 1.31e-02, SU 1.49e-02
    const struct {
        ebt::Scheme scheme;
        double expected;
    } rows[] = {{ebt::Scheme::sebt, 1.53e-02},
                {ebt::Scheme::ebt, 1.31e-02},
                {ebt::Scheme::splitup, 1.49e-02}};
    for (const auto& row : rows) {
        ebt::SimulationConfig cfg;
        cfg.scheme = row.scheme;
        cfg.test_case = 1;
        cfg.initial_nodes = 16;
        cfg.boundary_cohorts = 4;
        cfg.euler_substeps = 4;
        cfg.metric = ebt::Metric::both;
        const auto run = ebt::simulate_and_score(cfg);
        REQUIRE(run.report.completed);
        REQUIRE(run.score.e_flat >= row.expected / 2.0);
        REQUIRE(run.score.e_flat <= row.expected * 2.0);
        REQUIRE(run.score.bias_ok);
        REQUIRE(std::isfinite(run.score.e_l1));
        REQUIRE(run.score.flat_bias_bound <= run.score.e_flat / 10.0);
    }
}

TEST_CASE("simulate_and_score: test case 3 needs a reference") {
    ebt::SimulationConfig cfg;
    cfg.scheme = ebt::Scheme::sebt;
    cfg.test_case = 3;
    cfg.initial_nodes = 32;
    cfg.boundary_cohorts = 32;
    cfg.euler_substeps = 1;
    cfg.metric = ebt::Metric::flat;
    REQUIRE_THROWS_AS(ebt::simulate_and_score(cfg), std::invalid_argument);
    cfg.metric = ebt::Metric::l1;
    REQUIRE_THROWS_AS(ebt::simulate_and_score(cfg), std::invalid_argument);
}

TEST_CASE("convergence_study: first doubling of test case 1") {
    ebt::StudyConfig study;
    study.scheme = ebt::Scheme::sebt;
    study.test_case = 1;
    study.base_nodes = 16;
    study.doublings = 1;
    study.metric = ebt::Metric::flat;
    const auto rows = ebt::convergence_study(study);
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].boundary_cohorts == 4);
    REQUIRE(rows[1].initial_nodes == 32);
    REQUIRE_FALSE(std::isfinite(rows[0].o_flat));
    REQUIRE(rows[1].o_flat > 0.8);
    REQUIRE(rows[1].o_flat < 1.25);
}

TEST_CASE("convergence_study rejects an indivisible base") {
    ebt::StudyConfig study;
    study.base_nodes = 10;
    study.node_divisor = 4;
    REQUIRE_THROWS_AS(ebt::convergence_study(study), std::invalid_argument);
}

TEST_CASE("convergence CSV schema") {
    ebt::ConvergenceRow row;
    row.initial_nodes = 16;
    row.boundary_cohorts = 4;
    row.euler_substeps = 4;
    row.e_flat = 1.5e-2;
    row.runtime_ms = 3.25;
    row.anomalies = {ebt::Anomaly::negative_boundary_mass, ebt::Anomaly::boundary_overtakes};
    const std::string path = temp_path("ebt_rows.csv");
    ebt::write_convergence_csv(path, {row});
    std::ifstream in(path);
    std::string header, line;
    std::getline(in, header);
    std::getline(in, line);
    REQUIRE(header == "I,K,J,e_flat,e_l1,o_flat,o_l1,runtime_ms,anomalies");
    REQUIRE(line == "16,4,4,0.015,,,,3.25,m^B<0;x^B>x^1");
    std::filesystem::remove(path);
}

TEST_CASE("generate_reference at T = 0 stores the initial approximation") {
    const std::string path = temp_path("ebt_ref0.csv");
    ebt::generate_reference(path, 64, 2, 0.0);
    const auto file = ebt::read_measure_csv(path);
    const auto ia = ebt::approximate_initial([](double) { return 1.0; }, 0.0, 1.0, 64);
    REQUIRE(file.measure.points == ia.measure.points);
    REQUIRE(file.measure.masses == ia.measure.masses);
    bool has_t = false;
    for (const auto& [k, v] : file.metadata) has_t = has_t || (k == "T" && v == "0");
    REQUIRE(has_t);
    std::filesystem::remove(path);
}

TEST_CASE("generate_reference row count is I + K") {
    const std::string path = temp_path("ebt_ref16.csv");
    const auto report = ebt::generate_reference(path, 16, 2, 1.0);
    // births are strictly positive in test case 3, so no cohort is dropped
    REQUIRE(report.final_measure.size() == 32);
    const auto file = ebt::read_measure_csv(path);
    REQUIRE(file.measure.size() == 32);
    std::filesystem::remove(path);
}

TEST_CASE("table5_sweep scores against a reference measure") {
    const std::string path = temp_path("ebt_ref_sweep.csv");
    ebt::generate_reference(path, 256, 4, 1.0);
    const auto reference = ebt::read_measure_csv(path).measure;
    const auto cells = ebt::table5_sweep(reference, {32}, {1, 2});
    REQUIRE(cells.size() == 8);  // 1 size x 2 substeps x 4 schemes
    for (const auto& cell : cells) {
        if (cell.scheme == ebt::Scheme::sebt) {
            REQUIRE(cell.anomalies.empty());
            REQUIRE(std::isfinite(cell.error));
        }
    }
    std::filesystem::remove(path);
}
