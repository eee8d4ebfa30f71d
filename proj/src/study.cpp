#include "arotnep/study.hpp"

#include "arotnep/errors.hpp"

#include <json.hpp>

#include <cmath>

namespace arotnep {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    throw ValidationError("study: '" + field + "' " + why);
}

double number(const json& j, const std::string& field) {
    if (!j.is_number()) bad(field, "must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) bad(field, "must be finite");
    return v;
}

std::vector<double> number_list(const json& j, const std::string& field) {
    if (!j.is_array()) bad(field, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

Eigen::MatrixXd matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) bad(field, "must be a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = number_list(j[static_cast<std::size_t>(r)], field + "[" + std::to_string(r) + "]");
        if (static_cast<Eigen::Index>(row.size()) != n) bad(field, "must be square");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

template <class Int>
Int integer(const json& j, const std::string& field, Int min) {
    if (!j.is_number_integer()) bad(field, "must be an integer");
    const auto v = j.get<long long>();
    if (v < static_cast<long long>(min)) bad(field, "must be at least " + std::to_string(min));
    return static_cast<Int>(v);
}

// A {"generators": …, "demands": …} pair given either as full lists or as
// fractions of the nominal values.
struct PerKind {
    std::optional<std::vector<double>> generators, demands;
    std::optional<double> gen_fraction, dem_fraction;
    double divisor = 1.0;
    double scale = 1.0;
};

PerKind per_kind(const json& j, const std::string& field, bool fractions) {
    if (!j.is_object()) bad(field, "must be an object");
    PerKind p;
    for (const auto& [key, value] : j.items()) {
        const std::string f = field + "." + key;
        if (key == "generators") {
            if (fractions)
                p.gen_fraction = number(value, f);
            else
                p.generators = number_list(value, f);
        } else if (key == "demands") {
            if (fractions)
                p.dem_fraction = number(value, f);
            else
                p.demands = number_list(value, f);
        } else if (fractions && key == "divisor") {
            p.divisor = number(value, f);
            if (!(p.divisor > 0.0)) bad(f, "must be positive");
        } else if (fractions && key == "scale") {
            p.scale = number(value, f);
            if (!(p.scale >= 0.0)) bad(f, "must be nonnegative");
        } else {
            bad(f, "is not a recognized field");
        }
    }
    return p;
}

} // namespace

double StudyConfig::beta() const {
    if (uncertainty.beta) return *uncertainty.beta;
    return beta_for_quantile(*uncertainty.quantile);
}

DecompOptions StudyConfig::decomp_options() const {
    DecompOptions o;
    o.tolerance = tolerance;
    o.inner_max_iterations = inner_max_iterations;
    o.outer_max_iterations = outer_max_iterations;
    o.inner_starts = inner_starts;
    o.seed = seed;
    return o;
}

// Fractional spreads and half-widths, resolved once the network is read.
namespace {
struct Fractions {
    std::optional<PerKind> std_dev;
    std::optional<PerKind> half_width;
};
} // namespace

StudyConfig parse_study(const std::string& json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("study: not valid JSON (") + e.what() + ")");
    }
    if (!doc.is_object()) throw ParseError("study: top level must be an object");

    StudyConfig c;
    for (const auto& [key, value] : doc.items()) {
        if (key == "network") {
            if (!value.is_string() || value.get<std::string>().empty()) bad("network", "must be a file path");
            c.network_path = base_dir / value.get<std::string>();
        } else if (key == "annualization") {
            Annualization a;
            if (!value.is_object() || !value.contains("return_period") || !value.contains("discount_rate"))
                bad("annualization", "needs return_period and discount_rate");
            a.return_period = number(value["return_period"], "annualization.return_period");
            a.discount_rate = number(value["discount_rate"], "annualization.discount_rate");
            if (!(a.return_period > 0.0)) bad("annualization.return_period", "must be positive");
            if (!(a.discount_rate > 0.0 && a.discount_rate <= 1.0))
                bad("annualization.discount_rate", "must lie in (0, 1]");
            c.annualization = a;
        } else if (key == "uncertainty") {
            // handled below, needs no ordering
        } else if (key == "tolerance") {
            c.tolerance = number(value, key);
            if (!(c.tolerance > 0.0)) bad(key, "must be positive");
        } else if (key == "inner_max_iterations") {
            c.inner_max_iterations = integer<int>(value, key, 1);
        } else if (key == "outer_max_iterations") {
            c.outer_max_iterations = integer<int>(value, key, 1);
        } else if (key == "inner_starts") {
            c.inner_starts = integer<int>(value, key, 1);
        } else if (key == "seed") {
            c.seed = integer<std::uint64_t>(value, key, 0);
        } else if (key == "simulation") {
            if (!value.is_object()) bad(key, "must be an object");
            for (const auto& [k, v] : value.items()) {
                if (k == "samples")
                    c.samples = integer<long>(v, "simulation.samples", 1);
                else if (k == "seed")
                    c.simulation_seed = integer<std::uint64_t>(v, "simulation.seed", 0);
                else
                    bad("simulation." + k, "is not a recognized field");
            }
        } else if (key == "output_dir") {
            if (!value.is_string()) bad(key, "must be a path");
            c.output_dir = base_dir / value.get<std::string>();
        } else if (key == "comment") {
            // free text
        } else {
            bad(key, "is not a recognized field");
        }
    }
    if (c.network_path.empty()) bad("network", "is required");
    if (c.output_dir.empty()) c.output_dir = base_dir / "out";

    if (!doc.contains("uncertainty")) bad("uncertainty", "is required");
    const json& u = doc["uncertainty"];
    if (!u.is_object()) bad("uncertainty", "must be an object");
    UncertaintySpec& s = c.uncertainty;
    Fractions frac;
    for (const auto& [key, value] : u.items()) {
        const std::string f = "uncertainty." + key;
        if (key == "std_dev") {
            const auto p = per_kind(value, f, false);
            if (p.generators) s.std_generators = *p.generators;
            if (p.demands) s.std_demands = *p.demands;
        } else if (key == "std_dev_fraction") {
            frac.std_dev = per_kind(value, f, true);
        } else if (key == "correlations") {
            if (!value.is_array()) bad(f, "must be an array");
            for (std::size_t i = 0; i < value.size(); ++i) {
                const auto& e = value[i];
                const std::string fi = f + "[" + std::to_string(i) + "]";
                if (!e.is_object() || !e.contains("a") || !e.contains("b") || !e.contains("rho") ||
                    !e["a"].is_string() || !e["b"].is_string())
                    bad(fi, "needs string fields a, b and a number rho");
                Correlation r{e["a"].get<std::string>(), e["b"].get<std::string>(), number(e["rho"], fi + ".rho")};
                if (!(r.rho > -1.0 && r.rho < 1.0)) bad(fi + ".rho", "must lie strictly between -1 and 1");
                s.correlations.push_back(r);
            }
        } else if (key == "correlation_matrix") {
            s.correlation_matrix = matrix(value, f);
        } else if (key == "covariance") {
            s.covariance = matrix(value, f);
        } else if (key == "beta") {
            s.beta = number(value, f);
            if (!(*s.beta >= 0.0)) bad(f, "must be nonnegative");
        } else if (key == "quantile") {
            s.quantile = number(value, f);
            if (!(*s.quantile > 0.0 && *s.quantile < 1.0)) bad(f, "must lie strictly between 0 and 1");
        } else if (key == "half_widths") {
            const auto p = per_kind(value, f, false);
            s.half_generators = p.generators;
            s.half_demands = p.demands;
        } else if (key == "half_width_fraction") {
            frac.half_width = per_kind(value, f, true);
        } else if (key == "sign_restricted") {
            if (!value.is_boolean()) bad(f, "must be true or false");
            s.sign_restricted = value.get<bool>();
        } else {
            bad(f, "is not a recognized field");
        }
    }
    if (s.beta.has_value() == s.quantile.has_value())
        bad("uncertainty", "needs exactly one of beta and quantile");
    const bool has_std = !s.std_generators.empty() || !s.std_demands.empty() || frac.std_dev;
    if (s.covariance && (has_std || s.correlation_matrix || !s.correlations.empty()))
        bad("uncertainty.covariance", "cannot be combined with std_dev or correlations");
    if (!s.covariance && !has_std) bad("uncertainty", "needs std_dev, std_dev_fraction or covariance");
    if (frac.std_dev && (!s.std_generators.empty() || !s.std_demands.empty()))
        bad("uncertainty.std_dev_fraction", "cannot be combined with std_dev");
    if (frac.half_width && (s.half_generators || s.half_demands))
        bad("uncertainty.half_width_fraction", "cannot be combined with half_widths");
    if (s.correlation_matrix && !s.correlations.empty())
        bad("uncertainty.correlation_matrix", "cannot be combined with correlations");

    // Fractions need the nominal values, so the network is read here.
    if (frac.std_dev || frac.half_width) {
        const Network net = load_network(c.network_path);
        auto expand = [&](const PerKind& p, std::vector<double>& gens, std::vector<double>& dems) {
            for (const auto& g : net.generators)
                gens.push_back(p.gen_fraction.value_or(0.0) * g.nominal_capacity / p.divisor * p.scale);
            for (const auto& d : net.demands)
                dems.push_back(p.dem_fraction.value_or(0.0) * d.nominal_load / p.divisor * p.scale);
        };
        if (frac.std_dev) expand(*frac.std_dev, s.std_generators, s.std_demands);
        if (frac.half_width) {
            s.half_generators.emplace();
            s.half_demands.emplace();
            expand(*frac.half_width, *s.half_generators, *s.half_demands);
        }
    }
    return c;
}

StudyConfig load_study(const std::filesystem::path& path) {
    return parse_study(read_text_file(path), path.parent_path());
}

Network load_study_network(const StudyConfig& config) {
    Network net = load_network(config.network_path);
    if (config.annualization)
        net = annualize_costs(net, config.annualization->return_period, config.annualization->discount_rate);
    return net;
}

std::size_t parameter_index(const Network& net, const std::string& name) {
    if (name.size() >= 2 && (name[0] == 'G' || name[0] == 'D')) {
        int id = 0;
        try {
            std::size_t used = 0;
            id = std::stoi(name.substr(1), &used);
            if (used != name.size() - 1) throw std::invalid_argument(name);
        } catch (const std::logic_error&) {
            throw ValidationError("study: bad parameter name '" + name + "'");
        }
        if (name[0] == 'G') {
            for (std::size_t g = 0; g < net.generators.size(); ++g)
                if (net.generators[g].id == id) return g;
        } else {
            for (std::size_t d = 0; d < net.demands.size(); ++d)
                if (net.demands[d].id == id) return net.generators.size() + d;
        }
    }
    throw ValidationError("study: no parameter named '" + name + "'");
}

UncertaintyModel build_uncertainty(const Network& net, const StudyConfig& config) {
    const UncertaintySpec& s = config.uncertainty;
    const std::size_t ng = net.generators.size();
    const std::size_t n = ng + net.demands.size();
    const auto N = static_cast<Eigen::Index>(n);

    Eigen::MatrixXd cov;
    if (s.covariance) {
        cov = *s.covariance;
        if (cov.rows() != N) bad("uncertainty.covariance", "must be " + std::to_string(n) + "x" + std::to_string(n));
    } else {
        auto fill = [&](const std::vector<double>& v, std::size_t expected, const char* field) {
            if (v.empty()) return std::vector<double>(expected, 0.0);
            if (v.size() != expected)
                bad(field, "must list " + std::to_string(expected) + " values");
            for (double x : v)
                if (!(x >= 0.0)) bad(field, "must be nonnegative");
            return v;
        };
        const auto sg = fill(s.std_generators, ng, "uncertainty.std_dev.generators");
        const auto sd = fill(s.std_demands, net.demands.size(), "uncertainty.std_dev.demands");
        Eigen::VectorXd sdev(N);
        for (std::size_t i = 0; i < ng; ++i) sdev[static_cast<Eigen::Index>(i)] = sg[i];
        for (std::size_t i = 0; i < sd.size(); ++i) sdev[static_cast<Eigen::Index>(ng + i)] = sd[i];

        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(N, N);
        if (s.correlation_matrix) {
            corr = *s.correlation_matrix;
            if (corr.rows() != N)
                bad("uncertainty.correlation_matrix", "must be " + std::to_string(n) + "x" + std::to_string(n));
        }
        for (const auto& r : s.correlations) {
            auto index = [&](const std::string& name) {
                try {
                    return static_cast<Eigen::Index>(parameter_index(net, name));
                } catch (const ValidationError&) {
                    bad("uncertainty.correlations", "names unknown parameter '" + name + "'");
                }
            };
            const auto a = index(r.a);
            const auto b = index(r.b);
            if (a == b) bad("uncertainty.correlations", "pairs a parameter with itself (" + r.a + ")");
            if (sdev[a] == 0.0 || sdev[b] == 0.0)
                bad("uncertainty.correlations", "involves a parameter without spread (" + r.a + ", " + r.b + ")");
            corr(a, b) = corr(b, a) = r.rho;
        }
        cov = sdev.asDiagonal() * corr * sdev.asDiagonal();
    }

    std::vector<std::size_t> free;
    for (Eigen::Index i = 0; i < N; ++i) {
        if (cov(i, i) > 0.0) {
            free.push_back(static_cast<std::size_t>(i));
        } else {
            if (cov(i, i) < 0.0) bad("uncertainty", "has a negative variance");
            if (cov.row(i).cwiseAbs().maxCoeff() > 0.0 || cov.col(i).cwiseAbs().maxCoeff() > 0.0)
                bad("uncertainty", "correlates a parameter without spread");
        }
    }
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd sub(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b)
            sub(a, b) = cov(static_cast<Eigen::Index>(free[static_cast<std::size_t>(a)]),
                            static_cast<Eigen::Index>(free[static_cast<std::size_t>(b)]));

    const ScenarioRealization nominal = nominal_scenario(net);
    const Eigen::VectorXd full_mean = nominal.flat();
    Eigen::VectorXd mean(m);
    for (Eigen::Index a = 0; a < m; ++a) mean[a] = full_mean[static_cast<Eigen::Index>(free[static_cast<std::size_t>(a)])];

    std::optional<BoxOffsets> box;
    const bool has_half = s.half_generators || s.half_demands;
    if (has_half || s.sign_restricted) {
        BoxOffsets bx{Eigen::VectorXd::Constant(m, -kInf), Eigen::VectorXd::Constant(m, kInf)};
        if (s.half_generators && s.half_generators->size() != ng)
            bad("uncertainty.half_widths.generators", "must list " + std::to_string(ng) + " values");
        if (s.half_demands && s.half_demands->size() != net.demands.size())
            bad("uncertainty.half_widths.demands", "must list " + std::to_string(net.demands.size()) + " values");
        for (Eigen::Index a = 0; a < m; ++a) {
            const std::size_t i = free[static_cast<std::size_t>(a)];
            const bool gen = i < ng;
            const auto& list = gen ? s.half_generators : s.half_demands;
            if (list) {
                const double h = (*list)[gen ? i : i - ng];
                if (!(h >= 0.0)) bad("uncertainty.half_widths", "must be nonnegative");
                bx.lower[a] = -h;
                bx.upper[a] = h;
            }
            if (s.sign_restricted) (gen ? bx.upper[a] : bx.lower[a]) = 0.0;
        }
        box = bx;
    }

    double beta = 0.0;
    try {
        beta = config.beta();
    } catch (const DomainError& e) {
        bad("uncertainty.quantile", e.what());
    }
    try {
        return UncertaintyModel(nominal, std::move(free), EllipsoidalSet(mean, sub, beta, box));
    } catch (const NotPositiveDefinite& e) {
        throw ValidationError(std::string("study: covariance is not positive definite (") + e.what() + ")");
    } catch (const DomainError& e) {
        throw ValidationError(std::string("study: invalid uncertainty set (") + e.what() + ")");
    }
}

} // namespace arotnep
