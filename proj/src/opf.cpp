#include "arotnep/opf.hpp"

#include "arotnep/errors.hpp"

#include <algorithm>
#include <cmath>

namespace arotnep {

ExpansionDecision make_decision(const Network& net, std::vector<bool> build) {
    const auto cand = net.candidate_line_indices();
    if (build.size() != cand.size())
        throw DimensionMismatch("expansion decision has " + std::to_string(build.size()) +
                                " flags, network has " + std::to_string(cand.size()) + " candidates");
    ExpansionDecision x;
    x.build = std::move(build);
    for (std::size_t k = 0; k < cand.size(); ++k)
        if (x.build[k]) x.investment_cost += *net.lines[cand[k]].build_cost;
    return x;
}

ExpansionDecision no_investment(const Network& net) {
    return make_decision(net, std::vector<bool>(net.candidate_count(), false));
}

Eigen::VectorXd ScenarioRealization::flat() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    Eigen::Index k = 0;
    for (double g : generation) v[k++] = g;
    for (double d : demand) v[k++] = d;
    return v;
}

ScenarioRealization ScenarioRealization::from_flat(const Eigen::VectorXd& v, std::size_t generators) {
    if (static_cast<std::size_t>(v.size()) < generators)
        throw DimensionMismatch("scenario vector shorter than generator count");
    ScenarioRealization d;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        if (static_cast<std::size_t>(k) < generators)
            d.generation.push_back(v[k]);
        else
            d.demand.push_back(v[k]);
    }
    return d;
}

ScenarioRealization nominal_scenario(const Network& net) {
    ScenarioRealization d;
    for (const auto& g : net.generators) d.generation.push_back(g.nominal_capacity);
    for (const auto& l : net.demands) d.demand.push_back(l.nominal_load);
    return d;
}

int clip_negative(ScenarioRealization& d) {
    int clipped = 0;
    for (auto* vec : {&d.generation, &d.demand})
        for (double& v : *vec)
            if (v < 0.0) {
                v = 0.0;
                ++clipped;
            }
    return clipped;
}

double generation_cost_rate(const Network& net, std::size_t g) {
    const double c = net.generators[g].marginal_cost;
    return net.annualized ? c : c * net.weighting_factor;
}

double shedding_cost_rate(const Network& net, std::size_t d) {
    const double c = net.demands[d].shed_cost;
    return net.annualized ? c : c * net.weighting_factor;
}

OperatingBlock append_operating_block(LpBuilder& builder, const Network& net,
                                      const ScenarioRealization& d, const CandidateLinks& links,
                                      bool in_objective) {
    if (d.generation.size() != net.generators.size() || d.demand.size() != net.demands.size())
        throw DimensionMismatch("scenario does not match the network's generators/demands");
    const auto cand = net.candidate_line_indices();
    if ((links.built && links.built->size() != cand.size()) ||
        (links.columns && links.columns->size() != cand.size()))
        throw DimensionMismatch("expansion decision does not match the candidate lines");

    OperatingBlock blk;
    const std::size_t nb = net.buses.size();
    std::vector<LpBuilder::Terms> balance(nb);
    auto bus_index = [](int id) { return static_cast<std::size_t>(id - 1); };

    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const double rate = generation_cost_rate(net, g);
        const auto col = builder.add_variable(0.0, kInf, in_objective ? rate : 0.0);
        blk.generation.push_back(col);
        blk.cost.emplace_back(col, rate);
        balance[bus_index(net.generators[g].bus)].emplace_back(col, 1.0);
    }
    for (std::size_t k = 0; k < net.demands.size(); ++k) {
        const auto consumed = builder.add_variable(-kInf, kInf);
        const double rate = shedding_cost_rate(net, k);
        const auto shed = builder.add_variable(0.0, kInf, in_objective ? rate : 0.0);
        blk.consumed.push_back(consumed);
        blk.shed.push_back(shed);
        blk.cost.emplace_back(shed, rate);
        auto& row = balance[bus_index(net.demands[k].bus)];
        row.emplace_back(consumed, -1.0);
        row.emplace_back(shed, 1.0);
    }
    for (std::size_t b = 0; b < nb; ++b)
        blk.angle.push_back(builder.add_variable(-kAngleLimit, kAngleLimit));

    std::size_t cand_pos = 0;
    for (const auto& line : net.lines) {
        const auto i = bus_index(line.from_bus);
        const auto j = bus_index(line.to_bus);
        const double coupling = net.base_mva * line.susceptance;
        LpBuilder::Terms ohm = {{0, 1.0}, {blk.angle[i], -coupling}, {blk.angle[j], coupling}};

        if (!line.is_candidate()) {
            const auto f = builder.add_variable(-line.capacity, line.capacity);
            blk.flow.push_back(f);
            ohm[0].first = f;
            builder.add_equality(ohm, 0.0);
            balance[i].emplace_back(f, -1.0);
            balance[j].emplace_back(f, 1.0);
            continue;
        }

        const std::size_t k = cand_pos++;
        if (links.columns) {
            // Disjunctive model: the Ohm's-law row is relaxed by M when the
            // line is not built and the flow is forced to zero.
            const auto x = (*links.columns)[k];
            const double big_m = coupling * 2.0 * kAngleLimit;
            const auto f = builder.add_variable(-line.capacity, line.capacity);
            blk.flow.push_back(f);
            ohm[0].first = f;
            LpBuilder::Terms upper = ohm;
            upper.emplace_back(x, big_m);
            builder.add_inequality(upper, big_m);
            LpBuilder::Terms lower;
            for (const auto& [col, v] : ohm) lower.emplace_back(col, -v);
            lower.emplace_back(x, big_m);
            builder.add_inequality(lower, big_m);
            builder.add_inequality({{f, 1.0}, {x, -line.capacity}}, 0.0);
            builder.add_inequality({{f, -1.0}, {x, -line.capacity}}, 0.0);
            balance[i].emplace_back(f, -1.0);
            balance[j].emplace_back(f, 1.0);
        } else {
            const bool built = links.built && (*links.built)[k];
            if (built) {
                const auto f = builder.add_variable(-line.capacity, line.capacity);
                blk.flow.push_back(f);
                ohm[0].first = f;
                builder.add_equality(ohm, 0.0);
                balance[i].emplace_back(f, -1.0);
                balance[j].emplace_back(f, 1.0);
            } else {
                blk.flow.push_back(builder.add_variable(0.0, 0.0));
            }
        }
    }

    for (std::size_t b = 0; b < nb; ++b) builder.add_equality(balance[b], 0.0);
    builder.add_equality({{blk.angle[net.reference_bus_index()], 1.0}}, 0.0);

    for (std::size_t k = 0; k < net.demands.size(); ++k)
        blk.demand_rows.push_back(builder.add_equality({{blk.consumed[k], 1.0}}, d.demand[k]));
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        blk.generation_cap.push_back(builder.add_inequality({{blk.generation[g], 1.0}}, d.generation[g]));
    for (std::size_t k = 0; k < net.demands.size(); ++k)
        blk.shed_cap.push_back(builder.add_inequality({{blk.shed[k], 1.0}}, d.demand[k]));
    return blk;
}

OperationalLP build_operational_lp(const Network& net, const ExpansionDecision& x,
                                   const ScenarioRealization& d) {
    LpBuilder builder;
    CandidateLinks links;
    links.built = &x.build;
    OperationalLP out;
    out.index = append_operating_block(builder, net, d, links, true);
    out.lp = builder.build(Sense::minimize);
    return out;
}

OperatingPoint extract_operating_point(const OperatingBlock& index, const Eigen::VectorXd& primal) {
    OperatingPoint y;
    for (auto c : index.generation) y.generation.push_back(primal[c]);
    for (std::size_t k = 0; k < index.consumed.size(); ++k) {
        const double shed = primal[index.shed[k]];
        y.shed.push_back(shed);
        y.served.push_back(primal[index.consumed[k]] - shed);
    }
    for (auto c : index.flow) y.flows.push_back(primal[c]);
    for (auto c : index.angle) y.angles.push_back(primal[c]);
    for (const auto& [col, rate] : index.cost) y.operating_cost += rate * primal[col];
    return y;
}

OperationalResult solve_operational(const Network& net, const ExpansionDecision& x,
                                    const ScenarioRealization& d) {
    ScenarioRealization clipped = d;
    OperationalResult res;
    res.clipped = clip_negative(clipped);

    const auto model = build_operational_lp(net, x, clipped);
    const auto sol = solve_lp(model.lp);
    if (sol.status != LPStatus::optimal)
        throw InfeasibleOperation("operational problem is " + to_string(sol.status) +
                                  "; shedding should make it feasible, check the dataset");

    res.cost = sol.objective;
    res.point = extract_operating_point(model.index, sol.primal);

    const auto& idx = model.index;
    const std::size_t ng = net.generators.size();
    res.sensitivity.resize(static_cast<Eigen::Index>(d.size()));
    for (std::size_t g = 0; g < ng; ++g)
        res.sensitivity[static_cast<Eigen::Index>(g)] = -sol.inequality_duals[idx.generation_cap[g]];
    for (std::size_t k = 0; k < net.demands.size(); ++k)
        res.sensitivity[static_cast<Eigen::Index>(ng + k)] =
            sol.equality_duals[idx.demand_rows[k]] - sol.inequality_duals[idx.shed_cap[k]];

    // Duals of degenerate rows come back as round-off rather than exact zeros;
    // a flat direction must stay flat for the worst-case update.
    double scale = 1.0;
    for (std::size_t g = 0; g < ng; ++g) scale = std::max(scale, std::abs(generation_cost_rate(net, g)));
    for (std::size_t k = 0; k < net.demands.size(); ++k)
        scale = std::max(scale, std::abs(shedding_cost_rate(net, k)));
    for (auto& v : res.sensitivity)
        if (std::abs(v) <= 1e-9 * scale) v = 0.0;
    return res;
}

} // namespace arotnep
