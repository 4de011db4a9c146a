#pragma once

#include "bmolab/bmo.hpp"
#include "bmolab/grid.hpp"
#include "bmolab/integrand.hpp"
#include "bmolab/json_out.hpp"
#include "bmolab/taylor.hpp"
#include "bmolab/variational.hpp"

namespace bmolab {

JsonValue json_of(const Grid& grid);
JsonValue json_of(const Grid& grid, const Cube& cube);
JsonValue json_of(const Grid& grid, const NormReport& report);
JsonValue json_of(const InterpolationReport& report);
JsonValue json_of(const CalibrationReport& report);
JsonValue json_of(const TaylorReport& report);
JsonValue json_of(const Equilibrium& eq, bool include_state = true);
JsonValue json_of(const StressReport& report);
JsonValue json_of(const QVariantReport& report);
JsonValue json_of(const GrowthCheckReport& report);

} // namespace bmolab
