#include "arotnep/cli.hpp"

#include "arotnep/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace arotnep {

using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string built_ids(const Network& net, const ExpansionDecision& x) {
    const auto cand = net.candidate_line_indices();
    std::string out;
    for (std::size_t k = 0; k < cand.size(); ++k)
        if (x.build[k]) {
            if (!out.empty()) out += ' ';
            out += std::to_string(net.lines[cand[k]].id);
        }
    return out.empty() ? "-" : out;
}

ojson scenario_json(const Network& net, const ScenarioRealization& d) {
    ojson g = ojson::object(), l = ojson::object();
    for (std::size_t i = 0; i < d.generation.size(); ++i)
        g["G" + std::to_string(net.generators[i].id)] = d.generation[i];
    for (std::size_t i = 0; i < d.demand.size(); ++i) l["D" + std::to_string(net.demands[i].id)] = d.demand[i];
    return {{"generators", g}, {"demands", l}};
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IOError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

} // namespace

std::filesystem::path output_directory(const StudyConfig& config) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return config.output_dir;
}

int exit_code_for(OuterStatus status) {
    switch (status) {
    case OuterStatus::converged: return exit_ok;
    case OuterStatus::iteration_limit: return exit_iteration_limit;
    case OuterStatus::stalled: return exit_stalled;
    }
    return exit_iteration_limit;
}

std::string plan_document(const Network& net, const std::string& network_hash, double beta,
                          const OuterResult& result) {
    const auto cand = net.candidate_line_indices();
    ojson doc;
    doc["network"] = net.name;
    doc["network_hash"] = network_hash;
    doc["currency"] = net.currency;
    doc["beta"] = beta;
    doc["status"] = to_string(result.status);
    ojson lines = ojson::array();
    ojson flags = ojson::array();
    for (std::size_t k = 0; k < cand.size(); ++k) {
        flags.push_back(static_cast<bool>(result.decision.build[k]));
        if (result.decision.build[k]) {
            const Line& l = net.lines[cand[k]];
            lines.push_back({{"id", l.id}, {"from", l.from_bus}, {"to", l.to_bus}, {"build_cost", *l.build_cost}});
        }
    }
    doc["build"] = flags;
    doc["built_lines"] = lines;
    doc["investment_cost"] = result.decision.investment_cost;
    doc["q_beta"] = result.q_beta;
    doc["objective"] = result.objective;
    doc["worst_case"] = scenario_json(net, result.worst_case.d_ml);
    ojson iters = ojson::array();
    for (const auto& row : result.log)
        iters.push_back({{"iteration", row.iteration},
                         {"z_up", row.z_up},
                         {"z_lo", row.z_lo},
                         {"gap", row.gap},
                         {"built", built_ids(net, row.decision)},
                         {"q_beta", row.q_beta},
                         {"inner_iterations", row.inner_iterations}});
    doc["iterations"] = iters;
    doc["checksum"] = fnv1a_hex(doc.dump(2));
    return doc.dump(2) + "\n";
}

PlanRecord parse_plan(const std::string& text) {
    ojson doc;
    try {
        doc = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
        throw ParseError(std::string("plan: not valid JSON (") + e.what() + ")");
    }
    if (!doc.is_object() || !doc.contains("checksum") || !doc["checksum"].is_string())
        throw ParseError("plan: missing checksum");
    const std::string stored = doc["checksum"].get<std::string>();
    doc.erase("checksum");
    if (fnv1a_hex(doc.dump(2)) != stored) throw ParseError("plan: checksum does not match its contents");

    PlanRecord p;
    try {
        p.network_hash = doc.at("network_hash").get<std::string>();
        p.beta = doc.at("beta").get<double>();
        p.status = doc.at("status").get<std::string>();
        for (const auto& f : doc.at("build")) p.build.push_back(f.get<bool>());
        p.investment_cost = doc.at("investment_cost").get<double>();
        p.q_beta = doc.at("q_beta").get<double>();
        p.objective = doc.at("objective").get<double>();
    } catch (const ojson::exception& e) {
        throw ParseError(std::string("plan: ") + e.what());
    }
    return p;
}

std::string iteration_log_csv(const Network& net, const OuterResult& result) {
    std::ostringstream out;
    out << "iteration,z_up,z_lo,gap,built_lines,investment,q_beta,inner_iterations,seconds\n";
    for (const auto& r : result.log)
        out << r.iteration << ',' << num(r.z_up) << ',' << num(r.z_lo) << ',' << num(r.gap) << ','
            << built_ids(net, r.decision) << ',' << num(r.decision.investment_cost) << ',' << num(r.q_beta) << ','
            << r.inner_iterations << ',' << num(r.seconds) << '\n';
    return out.str();
}

int cmd_plan(const StudyConfig& config, std::ostream& log) {
    const Network net = load_study_network(config);
    const std::string hash = file_hash(config.network_path);
    const UncertaintyModel model = build_uncertainty(net, config);
    const double beta = model.set().beta();

    const OuterResult result = outer_solve(net, model, config.decomp_options());
    for (const auto& r : result.log)
        log << "iter " << r.iteration << "  z_up " << num(r.z_up) << "  z_lo " << num(r.z_lo) << "  gap "
            << num(r.gap) << "  built " << built_ids(net, r.decision) << "  " << num(r.seconds) << " s\n";
    log << to_string(result.status) << ": objective " << num(result.objective) << ' ' << net.currency
        << ", investment " << num(result.decision.investment_cost) << ", q_beta " << num(result.q_beta)
        << ", beta " << num(beta) << '\n';

    const std::string plan = plan_document(net, hash, beta, result);
    const std::string csv = iteration_log_csv(net, result);
    const auto dir = output_directory(config);
    ensure_dir(dir);
    write_text_file(dir / "plan.json", plan);
    write_text_file(dir / "iterations.csv", csv);
    log << "wrote " << (dir / "plan.json").string() << '\n';
    return exit_code_for(result.status);
}

int cmd_validate(const StudyConfig& config, const std::filesystem::path& plan_path, std::ostream& log) {
    const Network net = load_study_network(config);
    const std::string hash = file_hash(config.network_path);
    PlanRecord plan;
    try {
        plan = parse_plan(read_text_file(plan_path));
    } catch (const ParseError& e) {
        log << "refusing to validate: " << e.what() << '\n';
        return exit_plan_mismatch;
    }
    if (plan.network_hash != hash) {
        log << "refusing to validate: plan was computed for a different network file\n";
        return exit_plan_mismatch;
    }
    if (plan.build.size() != net.candidate_count()) {
        log << "refusing to validate: plan does not match the network's candidate lines\n";
        return exit_plan_mismatch;
    }
    if (plan.status != "converged") log << "warning: plan status is " << plan.status << '\n';

    const UncertaintyModel model = build_uncertainty(net, config);
    const ExpansionDecision x = make_decision(net, plan.build);
    SimulationStudy study;
    study.samples = config.samples;
    study.seed = config.simulation_seed;
    study.target = plan.q_beta;
    study.beta = plan.beta;
    const SimulationReport rep = run_simulation(net, x, model, study);
    log << "P(cost <= q*) = " << num(rep.probability) << " over " << rep.solved << " samples (expected "
        << num(rep.expected_probability) << "), clipped " << rep.clipped << ", failed " << rep.failed << '\n';

    const auto dir = output_directory(config);
    ensure_dir(dir);
    emit_report(rep, dir / "simulation.csv", ReportFormat::csv);
    emit_report(rep, dir / "simulation.json", ReportFormat::json);
    return exit_ok;
}

int cmd_sweep(const StudyConfig& config, const std::vector<double>& betas, int repeats, std::ostream& log) {
    if (betas.empty()) throw ValidationError("sweep: need at least one beta");
    for (double b : betas)
        if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("sweep: betas must be finite and nonnegative");
    if (repeats < 1) throw ValidationError("sweep: repeats must be at least 1");

    const Network net = load_study_network(config);
    const UncertaintyModel base = build_uncertainty(net, config);
    const DecompOptions options = config.decomp_options();

    std::ostringstream table;
    table << "beta,status,objective,investment,q_beta,iterations,built_lines,runtime_mean,runtime_std\n";
    int code = exit_ok;
    double previous = -std::numeric_limits<double>::infinity();
    for (double beta : betas) {
        const UncertaintyModel model = base.with_beta(beta);
        std::vector<double> times;
        OuterResult first;
        try {
            for (int r = 0; r < repeats; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                OuterResult res = outer_solve(net, model, options);
                times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
                if (r == 0) first = std::move(res);
            }
        } catch (const Error& e) {
            log << "beta " << num(beta) << ": " << e.what() << '\n';
            table << num(beta) << ",error,,,,,,,\n";
            if (code == exit_ok) code = exit_iteration_limit;
            continue;
        }
        double mean = 0.0;
        for (double t : times) mean += t;
        mean /= static_cast<double>(times.size());
        double var = 0.0;
        for (double t : times) var += (t - mean) * (t - mean);
        const double sd = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;

        table << num(beta) << ',' << to_string(first.status) << ',' << num(first.objective) << ','
              << num(first.decision.investment_cost) << ',' << num(first.q_beta) << ',' << first.log.size() << ','
              << built_ids(net, first.decision) << ',' << num(mean) << ',' << num(sd) << '\n';
        log << "beta " << num(beta) << ": " << to_string(first.status) << ", objective " << num(first.objective)
            << ", built " << built_ids(net, first.decision) << '\n';
        if (first.objective < previous - 1e-6 * std::abs(previous))
            log << "warning: objective decreased from the previous beta\n";
        previous = std::max(previous, first.objective);
        if (code == exit_ok) code = exit_code_for(first.status);
    }

    const auto dir = output_directory(config);
    ensure_dir(dir);
    write_text_file(dir / "sweep.csv", table.str());
    log << "wrote " << (dir / "sweep.csv").string() << '\n';
    return code;
}

namespace {

std::vector<double> parse_betas(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) throw std::invalid_argument(cell);
        } catch (const std::logic_error&) {
            throw ValidationError("--betas: '" + cell + "' is not a number");
        }
    }
    return out;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Robust transmission expansion planning with ellipsoidal uncertainty"};
    app.require_subcommand(1);

    std::string config_path, plan_path, betas_csv;
    int repeats = 1;
    auto* plan = app.add_subcommand("plan", "Solve the robust expansion problem for a study");
    plan->add_option("--config", config_path, "Study file")->required();
    auto* validate = app.add_subcommand("validate", "Monte Carlo check of a plan's cost quantile");
    validate->add_option("--config", config_path, "Study file")->required();
    validate->add_option("--plan", plan_path, "Plan file written by 'plan'")->required();
    auto* sweep = app.add_subcommand("sweep", "Solve for a list of radii");
    sweep->add_option("--config", config_path, "Study file")->required();
    sweep->add_option("--betas", betas_csv, "Comma-separated radii")->required();
    sweep->add_option("--repeats", repeats, "Runs per radius for timing statistics")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_failure;
    }

    try {
        const StudyConfig config = load_study(config_path);
        if (plan->parsed()) return cmd_plan(config, std::cout);
        if (validate->parsed()) return cmd_validate(config, plan_path, std::cout);
        return cmd_sweep(config, parse_betas(betas_csv), repeats, std::cout);
    } catch (const IOError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const ValidationError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const IterationLimit& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_iteration_limit;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
}

} // namespace arotnep
