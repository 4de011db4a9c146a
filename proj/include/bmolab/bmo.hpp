#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmolab/grid.hpp"
#include "bmolab/grid_ops.hpp"

namespace bmolab {

/// Outcome of a seminorm sweep.  bmo_norm = seminorm + mean_abs, and
/// seminorm equals cube_oscillation(field, argmax_cube).
struct NormReport {
    double seminorm = 0.0;
    double mean_abs = 0.0;
    double bmo_norm = 0.0;
    Cube argmax_cube;
    CubeMode mode = CubeMode::all;
    std::int64_t cubes_examined = 0;
};

/// Sup of the mean oscillation over the enumerated cubes.  Uses prefix-table
/// means plus a per-cube scan, OpenMP over the cubes of each size, and an
/// early exit once the running sup reaches the global cap
/// 2*max|F - <F>_grid| (no later cube can beat it, and ties keep the first
/// cube in enumeration order).  Bit-identical to the brute-force sweep.
NormReport bmo_seminorm(const TensorField& field, CubeMode mode);

/// Serial reference: two passes per cube, no tables, no pruning, mode all.
/// Throws ResourceError when the total cube count exceeds the budget.
NormReport bmo_seminorm_bruteforce(const TensorField& field,
                                   std::int64_t cube_budget = 10'000'000);

/// seminorm + |<F>_Omega|, the norm that makes BMO definite on a bounded box.
double bmo_norm_value(const TensorField& field);

struct DominationReport {
    bool ok = false;
    double margin = 0.0;   // 2*linf - seminorm
    double seminorm = 0.0;
    double linf = 0.0;
};

/// Checks the factor-2 bound seminorm <= 2*linf.
DominationReport linf_domination_check(const TensorField& field);

struct InterpolationReport {
    double p = 0.0;
    double q = 0.0;
    double lhs = 0.0;         // ||F||_q
    double rhs_factor = 0.0;  // (||F||_BMO)^(1-p/q) (||F||_p)^(p/q)
    double ratio = 0.0;
    double j2_estimate = 0.0;
};

/// Ratio ||F||_q / ((||F||_BMO)^(1-p/q) (||F||_p)^(p/q)); scale invariant.
/// Requires 1 <= p < q and a nonzero field.
InterpolationReport interpolation_ratio(const TensorField& field, double p, double q);

struct CalibrationMember {
    std::string name;
    double ratio = 0.0;
};

struct CalibrationReport {
    double p = 0.0, q = 0.0;
    double j2_estimate = 0.0; // sup of ratio over the family
    double j1_estimate = 0.0; // sup of (mean integral |F|^q)^(1/q) / ||F||_BMO
    std::vector<CalibrationMember> members;
};

struct CalibrationField {
    std::string name;
    TensorField field;
};

/// Sup of the interpolation ratio over a family of fields.
double calibrate_j2(std::span<const TensorField> family, double p, double q);

/// Sup of (average integral |F|^q)^(1/q) / ||F||_BMO over a family.
double calibrate_j1(std::span<const TensorField> family, double q);

CalibrationReport calibrate(std::span<const CalibrationField> family, double p, double q);

/// Canonical calibration family on a grid: constants, axis steps, discretized
/// log-distance profiles (singularity offset by h/3 from a cell center), and
/// seeded random fields.
std::vector<CalibrationField> calibration_family_named(const Grid& grid, int rows,
                                                       std::uint64_t seed,
                                                       int random_members = 8);
std::vector<TensorField> calibration_family(const Grid& grid, int rows, std::uint64_t seed,
                                            int random_members = 8);

} // namespace bmolab
