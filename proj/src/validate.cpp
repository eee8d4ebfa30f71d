#include "arotnep/validate.hpp"

#include "arotnep/errors.hpp"
#include "arotnep/sampling.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace arotnep {

std::vector<Eigen::VectorXd> sample_points(const EllipsoidalSet& set, long n, std::uint64_t seed) {
    if (n < 1) throw DomainError("sample_points: need at least one sample");
    NormalStream normals(seed);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) out.push_back(set.map_z_to_d(normals.vector(set.dimension())));
    return out;
}

std::vector<ScenarioRealization> sample_scenarios(const UncertaintyModel& model, long n, std::uint64_t seed) {
    std::vector<ScenarioRealization> out;
    for (const auto& p : sample_points(model.set(), n, seed)) out.push_back(model.realize(p));
    return out;
}

double sorted_quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw DomainError("sorted_quantile: no data");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sorted_quantile: p must lie in [0, 1]");
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<HistogramBin> histogram(const std::vector<double>& values) {
    if (values.empty()) return {};
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    const double lo = v.front();
    const double hi = v.back();
    if (!(hi > lo)) return {HistogramBin{lo, hi, static_cast<long>(v.size())}};

    const double iqr = sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(v.size()));
    std::size_t bins = 10;
    if (width > 0.0) bins = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil((hi - lo) / width)));
    bins = std::min<std::size_t>(bins, 1000);

    const double step = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lower = lo + step * static_cast<double>(b);
        out[b].upper = b + 1 == bins ? hi : lo + step * static_cast<double>(b + 1);
    }
    for (double x : v) {
        auto b = static_cast<std::size_t>((x - lo) / step);
        if (b >= bins) b = bins - 1;
        ++out[b].count;
    }
    return out;
}

SimulationReport run_simulation(const Network& net, const ExpansionDecision& x, const UncertaintyModel& model,
                                const SimulationStudy& study) {
    if (study.samples < 1) throw ValidationError("simulation: samples must be at least 1");
    if (x.investment_cost > net.budget * (1.0 + 1e-12))
        throw DomainError("simulation: expansion decision exceeds the budget");

    const auto draws = sample_scenarios(model, study.samples, study.seed);
    const auto n = draws.size();
    std::vector<double> costs(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> clipped(n, 0);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                const auto r = solve_operational(net, x, draws[i]);
                costs[i] = r.cost;
                clipped[i] = r.clipped > 0;
            } catch (const Error&) {
                // left as NaN, counted below
            }
        }
    };
    unsigned threads = study.threads > 0 ? static_cast<unsigned>(study.threads) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    SimulationReport rep;
    rep.samples = static_cast<long>(n);
    rep.target = study.target;
    rep.beta = study.beta;
    rep.expected_probability = standard_normal_cdf(study.beta);
    std::vector<double> ok;
    for (std::size_t i = 0; i < n; ++i) {
        rep.clipped += clipped[i];
        if (std::isnan(costs[i])) {
            ++rep.failed;
            continue;
        }
        ok.push_back(costs[i]);
        if (costs[i] <= study.target) ++rep.not_exceeding;
    }
    rep.solved = static_cast<long>(ok.size());
    rep.sample_costs = std::move(costs);
    if (ok.empty()) return rep;

    rep.probability = static_cast<double>(rep.not_exceeding) / static_cast<double>(rep.solved);
    double sum = 0.0;
    for (double c : ok) sum += c;
    rep.costs.mean = sum / static_cast<double>(ok.size());
    if (ok.size() > 1) {
        double ss = 0.0;
        for (double c : ok) ss += (c - rep.costs.mean) * (c - rep.costs.mean);
        rep.costs.std_dev = std::sqrt(ss / static_cast<double>(ok.size() - 1));
    }
    rep.histogram = histogram(ok);
    std::sort(ok.begin(), ok.end());
    rep.costs.min = ok.front();
    rep.costs.max = ok.back();
    rep.costs.p05 = sorted_quantile(ok, 0.05);
    rep.costs.p50 = sorted_quantile(ok, 0.50);
    rep.costs.p90 = sorted_quantile(ok, 0.90);
    rep.costs.p95 = sorted_quantile(ok, 0.95);
    rep.costs.p99 = sorted_quantile(ok, 0.99);
    return rep;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::pair<std::string, std::string>> summary_fields(const SimulationReport& r) {
    return {
        {"samples", std::to_string(r.samples)},
        {"solved", std::to_string(r.solved)},
        {"failed", std::to_string(r.failed)},
        {"clipped", std::to_string(r.clipped)},
        {"not_exceeding", std::to_string(r.not_exceeding)},
        {"probability", num(r.probability)},
        {"target", num(r.target)},
        {"beta", num(r.beta)},
        {"expected_probability", num(r.expected_probability)},
        {"mean", num(r.costs.mean)},
        {"std_dev", num(r.costs.std_dev)},
        {"min", num(r.costs.min)},
        {"max", num(r.costs.max)},
        {"p05", num(r.costs.p05)},
        {"p50", num(r.costs.p50)},
        {"p90", num(r.costs.p90)},
        {"p95", num(r.costs.p95)},
        {"p99", num(r.costs.p99)},
    };
}

} // namespace

std::string report_csv(const SimulationReport& r) {
    std::ostringstream out;
    out << "# summary\nkey,value\n";
    for (const auto& [k, v] : summary_fields(r)) out << k << ',' << v << '\n';
    out << "# histogram\nbin,lower,upper,count\n";
    for (std::size_t b = 0; b < r.histogram.size(); ++b)
        out << b << ',' << num(r.histogram[b].lower) << ',' << num(r.histogram[b].upper) << ','
            << r.histogram[b].count << '\n';
    return out.str();
}

std::string report_json(const SimulationReport& r) {
    nlohmann::ordered_json doc;
    doc["samples"] = r.samples;
    doc["solved"] = r.solved;
    doc["failed"] = r.failed;
    doc["clipped"] = r.clipped;
    doc["not_exceeding"] = r.not_exceeding;
    doc["probability"] = r.probability;
    doc["target"] = r.target;
    doc["beta"] = r.beta;
    doc["expected_probability"] = r.expected_probability;
    doc["fitted_normal"] = {{"mean", r.costs.mean}, {"std_dev", r.costs.std_dev}};
    doc["costs"] = {{"min", r.costs.min}, {"max", r.costs.max}, {"p05", r.costs.p05}, {"p50", r.costs.p50},
                    {"p90", r.costs.p90}, {"p95", r.costs.p95}, {"p99", r.costs.p99}};
    doc["histogram"] = nlohmann::ordered_json::array();
    for (const auto& b : r.histogram)
        doc["histogram"].push_back({{"lower", b.lower}, {"upper", b.upper}, {"count", b.count}});
    return doc.dump(2) + "\n";
}

void emit_report(const SimulationReport& report, const std::filesystem::path& path, ReportFormat format) {
    write_text_file(path, format == ReportFormat::csv ? report_csv(report) : report_json(report));
}

SimulationReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    enum { none, summary, bins } section = none;
    std::map<std::string, std::string> kv;
    SimulationReport r;

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    auto to_double = [](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw ParseError("report: bad number '" + s + "'");
            return v;
        } catch (const std::logic_error&) {
            throw ParseError("report: bad number '" + s + "'");
        }
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "# summary") {
            section = summary;
            continue;
        }
        if (line == "# histogram") {
            section = bins;
            continue;
        }
        if (line == "key,value" || line == "bin,lower,upper,count") continue;
        const auto cells = split(line);
        if (section == summary && cells.size() == 2) {
            kv[cells[0]] = cells[1];
        } else if (section == bins && cells.size() == 4) {
            r.histogram.push_back(HistogramBin{to_double(cells[1]), to_double(cells[2]),
                                               static_cast<long>(to_double(cells[3]))});
        } else {
            throw ParseError("report: unexpected line '" + line + "'");
        }
    }

    auto get = [&](const char* key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(std::string("report: missing summary field '") + key + "'");
        return to_double(it->second);
    };
    r.samples = static_cast<long>(get("samples"));
    r.solved = static_cast<long>(get("solved"));
    r.failed = static_cast<long>(get("failed"));
    r.clipped = static_cast<long>(get("clipped"));
    r.not_exceeding = static_cast<long>(get("not_exceeding"));
    r.probability = get("probability");
    r.target = get("target");
    r.beta = get("beta");
    r.expected_probability = get("expected_probability");
    r.costs.mean = get("mean");
    r.costs.std_dev = get("std_dev");
    r.costs.min = get("min");
    r.costs.max = get("max");
    r.costs.p05 = get("p05");
    r.costs.p50 = get("p50");
    r.costs.p90 = get("p90");
    r.costs.p95 = get("p95");
    r.costs.p99 = get("p99");
    return r;
}

} // namespace arotnep
