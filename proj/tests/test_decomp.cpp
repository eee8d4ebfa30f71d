#include "oracles.hpp"

#include "arotnep/decomp.hpp"
#include "arotnep/errors.hpp"
#include "arotnep/study.hpp"

#include <doctest.h>

#include <numbers>

using namespace arotnep;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Network two_bus(double gen_capacity = 100.0) {
    Network net;
    net.name = "two";
    net.buses = {{1, true}, {2, false}};
    net.lines = {{1, 1, 2, 4.0, 50.0, LineStatus::existing, std::nullopt},
                 {2, 1, 2, 4.0, 50.0, LineStatus::candidate, 10.0}};
    net.generators = {{1, 1, gen_capacity, 20.0}};
    net.demands = {{1, 2, 60.0, 100.0, 100.0}};
    net.budget = 10.0;
    net.weighting_factor = 1.0;
    return net;
}

// Independent normal spreads proportional to the nominal values.
UncertaintyModel spread_model(const Network& net, double fraction, double beta) {
    const ScenarioRealization d = nominal_scenario(net);
    const VectorXd mean = d.flat();
    VectorXd var = (fraction * mean).array().square();
    return UncertaintyModel::full(d, EllipsoidalSet(mean, var.asDiagonal(), beta));
}

double worst(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model, int starts) {
    DecompOptions opt;
    opt.inner_starts = starts;
    return inner_solve_multistart(net, x, model, opt).q_beta;
}

} // namespace

TEST_CASE("β = 0 collapses the inner loop to the nominal point") {
    const Network net = two_bus();
    const auto model = spread_model(net, 0.1, 0.0);
    const auto r = inner_solve(net, no_investment(net), model, model.restrict(model.nominal().flat()));
    CHECK(r.iterations <= 2);
    CHECK(r.d_ml == model.nominal());
    CHECK(r.q_beta == doctest::Approx(solve_operational(net, no_investment(net), model.nominal()).cost));
}

TEST_CASE("uncertain demand moves to the one-sigma boundary") {
    const Network net = two_bus();
    const ScenarioRealization nominal = nominal_scenario(net);
    // Only the demand is uncertain, std 5 MW, β = 1.
    const UncertaintyModel model(nominal, {1}, EllipsoidalSet(VectorXd::Constant(1, 60.0), MatrixXd::Constant(1, 1, 25.0), 1.0));
    const auto x = make_decision(net, {true});
    const auto r = inner_solve_multistart(net, x, model);
    CHECK(r.d_ml.demand[0] == doctest::Approx(65.0));
    CHECK(r.d_ml.generation[0] == nominal.generation[0]);
    CHECK(r.q_beta == doctest::Approx(20.0 * 65));
    CHECK(r.descent_violations == 0);
}

TEST_CASE("a parameter with no marginal effect keeps its nominal value") {
    // Generation capacity far above demand: η_G = 0, so the ellipsoid budget
    // is spent entirely on demand.
    const Network net = two_bus(1000.0);
    const auto model = spread_model(net, 0.1, 2.0);
    const auto r = inner_solve_multistart(net, make_decision(net, {true}), model);
    CHECK(r.eta[0] == 0.0);
    CHECK(r.d_ml.generation[0] == doctest::Approx(1000.0));
    CHECK(r.d_ml.demand[0] == doctest::Approx(60.0 * 1.2));
}

TEST_CASE("uncertainty model maps between full and reduced coordinates") {
    const ScenarioRealization nominal{{10, 20}, {30}};
    const UncertaintyModel model(nominal, {0, 2}, EllipsoidalSet(Eigen::Vector2d(10, 30), MatrixXd::Identity(2, 2), 1.0));
    const auto d = model.realize(Eigen::Vector2d(10.5, 29.5));
    CHECK(d == ScenarioRealization{{10.5, 20}, {29.5}});
    CHECK(model.restrict(d.flat()) == Eigen::Vector2d(10.5, 29.5));
    CHECK(model.contains(d));
    CHECK(!model.contains(ScenarioRealization{{10.5, 21}, {29.5}})); // fixed parameter moved
    CHECK(!model.contains(ScenarioRealization{{11, 20}, {29}}));     // Mahalanobis √2
    CHECK_THROWS_AS(UncertaintyModel(nominal, {2, 0}, EllipsoidalSet(Eigen::Vector2d(30, 10), MatrixXd::Identity(2, 2), 1.0)),
                    DomainError);
    CHECK_THROWS_AS(UncertaintyModel(nominal, {0, 2}, EllipsoidalSet(Eigen::Vector2d(0, 0), MatrixXd::Identity(2, 2), 1.0)),
                    DomainError);
}

TEST_CASE("recommended start lies in the set and leans against the system") {
    oracle::Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        const Network net = oracle::random_network(rng);
        const auto model = spread_model(net, rng.uniform(0.05, 0.3), rng.uniform(0.3, 3.0));
        const VectorXd s = recommended_start(model);
        CHECK(model.set().contains(s, 1e-9));
        const auto d = model.realize(s);
        for (std::size_t g = 0; g < d.generation.size(); ++g) CHECK(d.generation[g] <= model.nominal().generation[g]);
        for (std::size_t k = 0; k < d.demand.size(); ++k) CHECK(d.demand[k] >= model.nominal().demand[k]);
    }
}

TEST_CASE("inner ascent returns an evaluated point of the set") {
    oracle::Rng rng(19);
    for (int t = 0; t < 30; ++t) {
        const Network net = oracle::random_network(rng);
        const auto model = spread_model(net, rng.uniform(0.05, 0.3), rng.uniform(0.3, 3.0));
        const auto plans = oracle::all_decisions(net);
        const auto x = plans[static_cast<std::size_t>(rng.integer(0, static_cast<int>(plans.size()) - 1))];
        const auto r = inner_solve_multistart(net, x, model);
        CAPTURE(t);
        CHECK(model.contains(r.d_ml));
        CHECK(r.q_beta == doctest::Approx(solve_operational(net, x, r.d_ml).cost).epsilon(1e-12));
        CHECK(r.q_beta >= solve_operational(net, x, model.nominal()).cost - 1e-9 * std::abs(r.q_beta));
        // Restarting at the answer is a fixed point.
        const auto again = inner_solve(net, x, model, model.restrict(r.d_ml.flat()));
        CHECK(again.q_beta == doctest::Approx(r.q_beta).epsilon(1e-9));
    }
}

TEST_CASE("inner ascent finds the boundary maximum of a two-parameter model") {
    // With two uncertain parameters the boundary is a closed curve that can
    // be swept densely.
    oracle::Rng rng(41);
    int agree = 0, total = 0;
    for (int t = 0; t < 15; ++t) {
        const Network net = oracle::random_network(rng);
        const ScenarioRealization nominal = nominal_scenario(net);
        const std::size_t i = 0, j = nominal.generation.size(); // first generator, first demand
        const VectorXd mean = Eigen::Vector2d(nominal.flat()[static_cast<Eigen::Index>(i)],
                                              nominal.flat()[static_cast<Eigen::Index>(j)]);
        MatrixXd sigma(2, 2);
        const double sg = 0.15 * mean[0], sd = 0.15 * mean[1], rho = rng.uniform(-0.8, 0.8);
        sigma << sg * sg, rho * sg * sd, rho * sg * sd, sd * sd;
        const UncertaintyModel model(nominal, {i, j}, EllipsoidalSet(mean, sigma, rng.uniform(0.5, 2.5)));
        const auto x = no_investment(net);
        const auto r = inner_solve_multistart(net, x, model);
        double best = -1e300;
        const int pts = 4000;
        for (int k = 0; k < pts; ++k) {
            const double a = 2.0 * std::numbers::pi * k / pts;
            const VectorXd p = model.set().map_z_to_d(model.set().beta() * Eigen::Vector2d(std::cos(a), std::sin(a)));
            best = std::max(best, solve_operational(net, x, model.realize(p)).cost);
        }
        CAPTURE(t);
        CHECK(r.q_beta <= best * (1 + 1e-6) + 1e-9); // the grid is on the boundary, where the max sits
        ++total;
        if (r.q_beta >= best * (1 - 1e-5)) ++agree;
    }
    CHECK(agree >= total - 1);
}

TEST_CASE("master problem") {
    const Network net = two_bus();
    SUBCASE("no scenarios: nothing built") {
        const auto m = solve_master(net, {});
        CHECK(m.decision.build == std::vector<bool>{false});
        CHECK(m.gamma == 0.0);
        CHECK(m.z_lo == 0.0);
    }
    SUBCASE("builds the line when it saves more than it costs") {
        const auto m = solve_master(net, {nominal_scenario(net)});
        CHECK(m.decision.build == std::vector<bool>{true});
        CHECK(m.z_lo == doctest::Approx(10.0 + 20.0 * 60));
    }
    SUBCASE("budget below the cheapest candidate") {
        Network tight = net;
        tight.budget = 5.0;
        const auto m = solve_master(tight, {nominal_scenario(tight)});
        CHECK(m.decision.build == std::vector<bool>{false});
        CHECK(m.z_lo == doctest::Approx(20.0 * 50 + 100.0 * 10));
    }
    SUBCASE("γ covers every scenario") {
        const ScenarioRealization a{{100}, {40}}, b{{100}, {90}};
        const auto m = solve_master(net, {a, b});
        for (const auto& d : {a, b}) CHECK(m.gamma >= solve_operational(net, m.decision, d).cost - 1e-6);
    }
}

TEST_CASE("master matches enumeration over plans for fixed scenarios") {
    oracle::Rng rng(23);
    for (int t = 0; t < 25; ++t) {
        const Network net = oracle::random_network(rng);
        std::vector<ScenarioRealization> scen;
        for (int s = 0, n = rng.integer(1, 3); s < n; ++s) {
            auto d = nominal_scenario(net);
            for (auto& v : d.demand) v *= rng.uniform(0.7, 1.4);
            for (auto& v : d.generation) v *= rng.uniform(0.6, 1.1);
            scen.push_back(d);
        }
        const auto want = oracle::enumerate_min_max(net, [&](const ExpansionDecision& x) {
            double q = 0;
            for (const auto& d : scen) q = std::max(q, solve_operational(net, x, d).cost);
            return q;
        });
        const auto m = solve_master(net, scen);
        CAPTURE(t);
        CHECK(m.z_lo == doctest::Approx(want.first).epsilon(1e-8));
    }
}

TEST_CASE("outer loop agrees with enumeration over plans") {
    oracle::Rng rng(2017);
    for (int t = 0; t < 12; ++t) {
        const Network net = oracle::random_network(rng);
        const auto model = spread_model(net, rng.uniform(0.05, 0.25), rng.uniform(0.5, 3.0));
        const auto r = outer_solve(net, model);
        CAPTURE(t);
        REQUIRE(r.status == OuterStatus::converged);
        for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k].z_lo >= r.log[k - 1].z_lo - 1e-9 * std::abs(r.log[k].z_lo));
        CHECK(r.log.back().gap <= 1e-6);
        const auto want = oracle::enumerate_min_max(net, [&](const ExpansionDecision& x) { return worst(net, x, model, 6); });
        CHECK(r.objective == doctest::Approx(want.first).epsilon(1e-5));
        CHECK(r.objective == doctest::Approx(r.decision.investment_cost + r.q_beta));
    }
}

TEST_CASE("stored scenarios reproduce the final lower bound") {
    const Network net = two_bus();
    const auto model = spread_model(net, 0.2, 2.0);
    const auto r = outer_solve(net, model);
    REQUIRE(r.status == OuterStatus::converged);
    const auto m = solve_master(net, r.scenarios);
    CHECK(m.z_lo == doctest::Approx(r.log.back().z_lo).epsilon(1e-9));
    CHECK(m.decision == r.decision);
}

TEST_CASE("deterministic fixture converges in two iterations") {
    const auto config = load_study(std::filesystem::path(AROTNEP_DATA_DIR) / "garver_deterministic.json");
    const Network net = load_study_network(config);
    const auto model = build_uncertainty(net, config);
    const auto r = outer_solve(net, model, config.decomp_options());
    CHECK(r.status == OuterStatus::converged);
    CHECK(r.log.size() <= 2);
    const auto nominal = solve_master(net, {nominal_scenario(net)});
    CHECK(r.objective == doctest::Approx(nominal.z_lo).epsilon(1e-6));
    CHECK(oracle::corridor_counts(net, r.decision) == oracle::corridor_counts(net, nominal.decision));
}

TEST_CASE("iteration cap is a status, not an exception") {
    const Network net = two_bus();
    const auto model = spread_model(net, 0.2, 2.0);
    DecompOptions opt;
    opt.outer_max_iterations = 1;
    const auto r = outer_solve(net, model, opt);
    CHECK(r.status == OuterStatus::iteration_limit);
    CHECK(r.log.size() == 1);
    CHECK(to_string(OuterStatus::stalled) == "stalled");
    CHECK(relative_gap(0.0, -1e-13) == doctest::Approx(1e-13));
    CHECK(relative_gap(100.0, 99.0) == doctest::Approx(0.01));
}
