#pragma once

#include <json.hpp>

#include "bmolab/integrand.hpp"

namespace bmolab {

/// Builds an Integrand from its JSON description:
///   {"family": ..., "k": ..., "parameters": {...}, "r": ..., "c_k": ...,
///    "weight": {"base": ..., "amp": ..., "freq": ...}}
/// Unknown families raise ConfigError naming the known ones.
Integrand integrand_from_json(const nlohmann::json& spec, int rows, int cols);

} // namespace bmolab
