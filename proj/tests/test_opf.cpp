#include "oracles.hpp"

#include "arotnep/errors.hpp"
#include "arotnep/opf.hpp"

#include <doctest.h>

using namespace arotnep;

namespace {

// Gen at bus 1 (cost 20/MWh), demand at bus 2 (60 MW, shed 100/MWh),
// one 50 MW line and one 50 MW candidate.
Network two_bus(double gen_capacity = 100.0) {
    Network net;
    net.name = "two";
    net.buses = {{1, true}, {2, false}};
    Line existing{1, 1, 2, 4.0, 50.0, LineStatus::existing, std::nullopt};
    Line cand{2, 1, 2, 4.0, 50.0, LineStatus::candidate, 10.0};
    net.lines = {existing, cand};
    net.generators = {{1, 1, gen_capacity, 20.0}};
    net.demands = {{1, 2, 60.0, 100.0, 100.0}};
    net.budget = 10.0;
    net.weighting_factor = 1.0;
    return net;
}

double finite_difference(const Network& net, const ExpansionDecision& x, ScenarioRealization d, std::size_t i,
                         double h, double* left, double* right) {
    auto at = [&](double delta) {
        auto e = d;
        if (i < e.generation.size())
            e.generation[i] += delta;
        else
            e.demand[i - e.generation.size()] += delta;
        return solve_operational(net, x, e).cost;
    };
    const double f0 = at(0.0), fp = at(h), fm = at(-h);
    *right = (fp - f0) / h;
    *left = (f0 - fm) / h;
    return (fp - fm) / (2.0 * h);
}

} // namespace

TEST_CASE("congested line forces shedding; the candidate relieves it") {
    const Network net = two_bus();
    const auto d = nominal_scenario(net);

    const auto none = solve_operational(net, no_investment(net), d);
    CHECK(none.cost == doctest::Approx(20.0 * 50 + 100.0 * 10));
    CHECK(none.point.shed[0] == doctest::Approx(10.0));
    CHECK(none.point.flows[0] == doctest::Approx(50.0));
    CHECK(none.point.flows[1] == 0.0);
    CHECK(none.sensitivity[0] == 0.0);                       // generator cap slack
    CHECK(none.sensitivity[1] == doctest::Approx(100.0));    // marginal MW is shed

    const auto built = solve_operational(net, make_decision(net, {true}), d);
    CHECK(built.cost == doctest::Approx(20.0 * 60));
    CHECK(built.point.shed[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(built.point.flows[0] == doctest::Approx(30.0));
    CHECK(built.point.flows[1] == doctest::Approx(30.0));
    CHECK(built.sensitivity[1] == doctest::Approx(20.0)); // marginal MW is generated
}

TEST_CASE("binding generation cap has a negative sensitivity") {
    const Network net = two_bus(55.0);
    const auto r = solve_operational(net, make_decision(net, {true}), nominal_scenario(net));
    CHECK(r.cost == doctest::Approx(20.0 * 55 + 100.0 * 5));
    CHECK(r.sensitivity[0] == doctest::Approx(-(100.0 - 20.0)));
    CHECK(r.sensitivity[1] == doctest::Approx(100.0));
}

TEST_CASE("weighting factor scales operating costs unless already annualized") {
    Network net = two_bus();
    net.weighting_factor = 8760.0;
    const auto d = nominal_scenario(net);
    const double q = solve_operational(net, no_investment(net), d).cost;
    CHECK(q == doctest::Approx(8760.0 * (20.0 * 50 + 100.0 * 10)));
    const Network ann = annualize_costs(net, 25, 0.1);
    CHECK(solve_operational(ann, no_investment(ann), d).cost == doctest::Approx(q));
}

TEST_CASE("operating point satisfies the DC network equations") {
    oracle::Rng rng(77);
    for (int t = 0; t < 40; ++t) {
        const Network net = oracle::random_network(rng);
        std::vector<bool> b(net.candidate_count());
        for (std::size_t k = 0; k < b.size(); ++k) b[k] = rng.coin();
        const auto x = make_decision(net, b);
        const auto r = solve_operational(net, x, nominal_scenario(net));
        const auto& y = r.point;
        std::vector<double> injection(net.buses.size(), 0.0);
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            CHECK(y.generation[g] >= -1e-9);
            CHECK(y.generation[g] <= net.generators[g].nominal_capacity + 1e-9);
            injection[static_cast<std::size_t>(net.generators[g].bus - 1)] += y.generation[g];
        }
        for (std::size_t k = 0; k < net.demands.size(); ++k) {
            CHECK(y.shed[k] >= -1e-9);
            CHECK(y.served[k] + y.shed[k] == doctest::Approx(net.demands[k].nominal_load));
            injection[static_cast<std::size_t>(net.demands[k].bus - 1)] -= y.served[k];
        }
        std::size_t cand = 0;
        for (std::size_t l = 0; l < net.lines.size(); ++l) {
            const Line& line = net.lines[l];
            const bool active = !line.is_candidate() || x.build[cand++];
            const double f = y.flows[l];
            if (!active) {
                CHECK(f == 0.0);
                continue;
            }
            CHECK(std::abs(f) <= line.capacity + 1e-9);
            const double ohm = net.base_mva * line.susceptance *
                               (y.angles[static_cast<std::size_t>(line.from_bus - 1)] -
                                y.angles[static_cast<std::size_t>(line.to_bus - 1)]);
            CHECK(f == doctest::Approx(ohm).epsilon(1e-9).scale(1.0));
            injection[static_cast<std::size_t>(line.from_bus - 1)] -= f;
            injection[static_cast<std::size_t>(line.to_bus - 1)] += f;
        }
        for (double v : injection) CHECK(std::abs(v) < 1e-7);
        CHECK(y.angles[net.reference_bus_index()] == doctest::Approx(0.0));
        CHECK(y.operating_cost == doctest::Approx(r.cost));
    }
}

TEST_CASE("sensitivities match central finite differences where the cost is smooth") {
    oracle::Rng rng(404);
    int checked = 0;
    for (int t = 0; t < 400 && checked < 60; ++t) {
        const Network net = oracle::random_network(rng);
        ScenarioRealization d = nominal_scenario(net);
        for (auto& g : d.generation) g *= rng.uniform(0.5, 1.2);
        for (auto& l : d.demand) l *= rng.uniform(0.7, 1.5);
        std::vector<bool> b(net.candidate_count());
        for (std::size_t k = 0; k < b.size(); ++k) b[k] = rng.coin();
        const auto x = make_decision(net, b);
        const auto r = solve_operational(net, x, d);
        for (std::size_t i = 0; i < d.size(); ++i) {
            double left = 0, right = 0;
            const double fd = finite_difference(net, x, d, i, 1e-3, &left, &right);
            if (std::abs(left - right) > 1e-6 * std::max(1.0, std::abs(fd))) continue; // kink
            CHECK(r.sensitivity[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(fd).epsilon(1e-6).scale(1.0));
            ++checked;
        }
    }
    CHECK(checked >= 60);
}

TEST_CASE("negative scenario entries are clipped and counted") {
    const Network net = two_bus();
    ScenarioRealization d = nominal_scenario(net);
    d.generation[0] = -5.0;
    const auto r = solve_operational(net, no_investment(net), d);
    CHECK(r.clipped == 1);
    CHECK(r.point.generation[0] == doctest::Approx(0.0));
    CHECK(r.cost == doctest::Approx(100.0 * 60));
}

TEST_CASE("shape mismatches are rejected") {
    const Network net = two_bus();
    ScenarioRealization d = nominal_scenario(net);
    d.demand.push_back(1.0);
    CHECK_THROWS_AS(solve_operational(net, no_investment(net), d), DimensionMismatch);
    CHECK_THROWS_AS(make_decision(net, {true, false}), DimensionMismatch);
    CHECK(make_decision(net, {true}).investment_cost == 10.0);
}

TEST_CASE("scenario flattening round-trips") {
    ScenarioRealization d{{1, 2}, {3, 4, 5}};
    const auto v = d.flat();
    CHECK(v.size() == 5);
    CHECK(v[2] == 3.0);
    CHECK(ScenarioRealization::from_flat(v, 2) == d);
}
