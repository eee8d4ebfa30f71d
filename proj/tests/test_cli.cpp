#include "arotnep/cli.hpp"
#include "arotnep/errors.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace arotnep;
namespace fs = std::filesystem;

namespace {

const fs::path kData = AROTNEP_DATA_DIR;

// Scratch directory that is also the output override for the CLI.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("arotnep_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        setenv(kOutputDirEnv, (dir / "out").c_str(), 1);
    }
    ~Scratch() {
        unsetenv(kOutputDirEnv);
        fs::remove_all(dir);
    }
    fs::path write(const std::string& name, const std::string& text) const {
        write_text_file(dir / name, text);
        return dir / name;
    }
};

int run(std::vector<std::string> args) {
    args.insert(args.begin(), "arotnep");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string toy_study(const std::string& extra = "") {
    return R"({"network": ")" + (kData / "toy2.json").string() +
           R"(", "uncertainty": {"std_dev": {"generators": [20, 4], "demands": [6]}, "beta": 1.28155},
              "simulation": {"samples": 400, "seed": 3})" + extra + "}";
}

void rejects(const std::string& text, const std::string& field) {
    try {
        const auto config = parse_study(text, kData);
        build_uncertainty(load_study_network(config), config); // size checks need the network
        FAIL("accepted a study with bad " << field);
    } catch (const ValidationError& e) {
        INFO(std::string(e.what()));
        CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
}

} // namespace

TEST_CASE("study parsing") {
    const auto config = parse_study(toy_study(), kData);
    CHECK(config.beta() == doctest::Approx(1.28155));
    CHECK(config.samples == 400);
    CHECK(config.output_dir == kData / "out");

    const auto q = parse_study(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, 1], "demands": [1]}, "quantile": 0.99}})",
                               kData);
    CHECK(q.beta() == doctest::Approx(2.3263).epsilon(1e-4));
    CHECK(q.network_path == kData / "toy2.json");

    rejects(toy_study(R"(, "simulation": {"samples": 0})"), "samples");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, 1], "demands": [1]}, "beta": 1, "quantile": 0.9}})",
            "beta");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1], "demands": [1]}, "beta": 1}})",
            "generators");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, -1], "demands": [1]}, "beta": 1}})",
            "generators");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, 1], "demands": [1]}, "beta": 1,
                "correlations": [{"a": "G1", "b": "D1", "rho": 1.5}]}})",
            "correlations");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, 1], "demands": [1]}, "beta": 1,
                "correlations": [{"a": "G9", "b": "D1", "rho": 0.5}]}})",
            "correlations");
    rejects(R"({"network": "toy2.json", "uncertainty": {"beta": 1}})", "std_dev");
    rejects(R"({"network": "toy2.json", "uncertainty": {"std_dev": {"generators": [1, 1], "demands": [1]}, "beta": 1,
                "covariance": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}})",
            "covariance");
    const auto cov = parse_study(R"({"network": "toy2.json", "uncertainty": {"beta": 1,
                                     "covariance": [[4, 0, 0], [0, 0, 0], [0, 0, 9]]}})",
                                 kData);
    const auto model = build_uncertainty(load_study_network(cov), cov);
    CHECK(model.uncertain() == std::vector<std::size_t>{0, 2}); // zero variance: fixed
    rejects(toy_study(R"(, "tolerance": -1)"), "tolerance");
    rejects(toy_study(R"(, "annualization": {"return_period": 25, "discount_rate": 0})"), "annualization");
}

TEST_CASE("correlated fixture builds a correlated set") {
    const auto config = load_study(kData / "garver_beta43_correlated.json");
    const Network net = load_study_network(config);
    CHECK(net.annualized);
    const auto model = build_uncertainty(net, config);
    const auto& s = model.set().covariance();
    const auto g2 = parameter_index(net, "G2"), g3 = parameter_index(net, "G3");
    const auto& u = model.uncertain();
    const auto pos = [&](std::size_t i) { return static_cast<Eigen::Index>(std::find(u.begin(), u.end(), i) - u.begin()); };
    CHECK(s(pos(g2), pos(g3)) / std::sqrt(s(pos(g2), pos(g2)) * s(pos(g3), pos(g3))) == doctest::Approx(-0.8));
    CHECK(model.set().beta() == doctest::Approx(4.3));
    CHECK(model.set().has_box());
    CHECK_THROWS_AS(parameter_index(net, "X1"), ValidationError);
}

TEST_CASE("plan then validate on the toy study") {
    Scratch s("plan");
    const auto study = s.write("toy.json", toy_study());
    REQUIRE(run({"plan", "--config", study.string()}) == exit_ok);
    const auto plan_path = s.dir / "out" / "plan.json";
    REQUIRE(fs::exists(plan_path));
    CHECK(fs::exists(s.dir / "out" / "iterations.csv"));
    const auto record = parse_plan(read_text_file(plan_path));
    CHECK(record.network_hash == file_hash(kData / "toy2.json"));
    CHECK(record.status == "converged");
    CHECK(record.objective == doctest::Approx(record.investment_cost + record.q_beta));

    // Same inputs, same bytes.
    const std::string first = read_text_file(plan_path);
    REQUIRE(run({"plan", "--config", study.string()}) == exit_ok);
    CHECK(read_text_file(plan_path) == first);

    REQUIRE(run({"validate", "--config", study.string(), "--plan", plan_path.string()}) == exit_ok);
    const auto report = parse_report_csv(read_text_file(s.dir / "out" / "simulation.csv"));
    CHECK(report.samples == 400);
    CHECK(report.target == record.q_beta);
    CHECK(report.probability > 0.8);
    CHECK(fs::exists(s.dir / "out" / "simulation.json"));
}

TEST_CASE("validate refuses a plan that does not belong to the network") {
    Scratch s("mismatch");
    const auto study = s.write("toy.json", toy_study());
    REQUIRE(run({"plan", "--config", study.string()}) == exit_ok);
    const auto plan_path = s.dir / "out" / "plan.json";
    std::string text = read_text_file(plan_path);

    SUBCASE("edited plan fails its checksum") {
        const auto pos = text.find("\"q_beta\"");
        REQUIRE(pos != std::string::npos);
        text.insert(text.find_first_of("0123456789", pos), "1");
        const auto bad = s.write("tampered.json", text);
        CHECK_THROWS_AS(parse_plan(text), ParseError);
        CHECK(run({"validate", "--config", study.string(), "--plan", bad.string()}) == exit_plan_mismatch);
    }
    SUBCASE("plan for a different network") {
        Network other = load_network(kData / "toy2.json");
        other.demands[0].nominal_load += 1.0;
        save_network(other, s.dir / "other.json");
        const auto other_study = s.write("other_study.json", [&] {
            std::string t = toy_study();
            const std::string from = (kData / "toy2.json").string();
            t.replace(t.find(from), from.size(), (s.dir / "other.json").string());
            return t;
        }());
        fs::remove(s.dir / "out" / "simulation.csv");
        CHECK(run({"validate", "--config", other_study.string(), "--plan", plan_path.string()}) == exit_plan_mismatch);
        CHECK(!fs::exists(s.dir / "out" / "simulation.csv"));
    }
}

TEST_CASE("error exits") {
    Scratch s("errors");
    const auto missing = s.write("missing.json", R"({"network": "nowhere.json",
        "uncertainty": {"std_dev": {"generators": [1], "demands": [1]}, "beta": 1}})");
    CHECK(run({"plan", "--config", missing.string()}) == exit_io);
    CHECK(!fs::exists(s.dir / "out" / "plan.json"));
    CHECK(run({"plan", "--config", (s.dir / "absent.json").string()}) == exit_io);

    const auto bad = s.write("bad.json", toy_study(R"(, "simulation": {"samples": -5})"));
    CHECK(run({"plan", "--config", bad.string()}) == exit_config);
    const auto garbage = s.write("garbage.json", "{ not json");
    CHECK(run({"plan", "--config", garbage.string()}) == exit_config);

    CHECK(run({"plan"}) == exit_failure);
    CHECK(run({"frobnicate"}) == exit_failure);

    const auto capped = s.write("capped.json", toy_study(R"(, "outer_max_iterations": 1)"));
    CHECK(run({"plan", "--config", capped.string()}) == exit_iteration_limit);
    CHECK(fs::exists(s.dir / "out" / "plan.json")); // the partial plan is still written
    CHECK(exit_code_for(OuterStatus::stalled) == exit_stalled);
}

TEST_CASE("sweep writes one row per radius with nondecreasing objective") {
    Scratch s("sweep");
    const auto study = s.write("toy.json", toy_study());
    REQUIRE(run({"sweep", "--config", study.string(), "--betas", "0,0.5,1,2,3", "--repeats", "2"}) == exit_ok);
    std::istringstream csv(read_text_file(s.dir / "out" / "sweep.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "beta,status,objective,investment,q_beta,iterations,built_lines,runtime_mean,runtime_std");
    double prev = -1e300;
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 9);
        CHECK(cells[1] == "converged");
        const double obj = std::stod(cells[2]);
        CHECK(obj >= prev - 1e-6 * std::abs(prev));
        prev = obj;
        ++rows;
    }
    CHECK(rows == 5);
    CHECK(run({"sweep", "--config", study.string(), "--betas", "1,x"}) == exit_config);
}
