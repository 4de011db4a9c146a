#include "bmolab/integrand_config.hpp"

#include "bmolab/errors.hpp"

namespace bmolab {

namespace {

WeightFn weight_from_json(const nlohmann::json& spec) {
    WeightFn w;
    if (!spec.contains("weight")) return w;
    const nlohmann::json& j = spec.at("weight");
    w.base = j.value("base", 1.0);
    w.amp = j.value("amp", 0.0);
    w.freq = j.value("freq", 1.0);
    if (!(w.min_value() > 0.0))
        throw ConfigError("integrand.weight: base - |amp| must be positive");
    return w;
}

} // namespace

Integrand integrand_from_json(const nlohmann::json& spec, int rows, int cols) {
    if (!spec.contains("family"))
        throw ConfigError("integrand.family is required");
    const std::string family = spec.at("family").get<std::string>();
    const WeightFn weight = weight_from_json(spec);
    const nlohmann::json params =
        spec.contains("parameters") ? spec.at("parameters") : nlohmann::json::object();

    Integrand w = [&] {
        if (family == "quadratic") {
            std::vector<double> mu;
            if (params.contains("mu")) mu = params.at("mu").get<std::vector<double>>();
            return Integrand::quadratic(rows, cols, std::move(mu), spec.value("k", 2), weight);
        }
        if (family == "double_well")
            return Integrand::double_well(rows, cols, spec.value("k", 3), weight);
        if (family == "p_growth")
            return Integrand::p_growth(rows, cols, params.value("m", 4), spec.value("k", 3),
                                       weight);
        throw ConfigError("integrand.family '" + family +
                          "' is unknown; known families: quadratic, double_well, p_growth");
    }();

    if (spec.contains("r") || spec.contains("c_k")) {
        const double r = spec.value("r", w.growth_r());
        const double c_k = spec.value("c_k", w.growth_c());
        if (!(r > 0.0)) throw ConfigError("integrand.r must be positive");
        if (!(c_k > 0.0)) throw ConfigError("integrand.c_k must be positive");
        w.with_growth(r, c_k);
    }
    return w;
}

} // namespace bmolab
