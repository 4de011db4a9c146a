#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmolab/grid.hpp"
#include "bmolab/prefix_table.hpp"

namespace bmolab {

enum class CubeMode { all, dyadic };

const char* cube_mode_name(CubeMode mode);

/// Average of each component of the field over the cube, as the flattened
/// N x n matrix.  Throws std::domain_error when the cube leaves the grid.
std::vector<double> cube_mean(const PrefixTable& table, const Cube& q);

/// Convenience overload; builds the O(cells) table internally.
std::vector<double> cube_mean(const TensorField& field, const Cube& q);

/// Mean over the cube of the Frobenius distance to the cube mean.
/// Exactly zero when the field is constant on the cube (in particular for
/// side = 1): constancy is detected bitwise before any arithmetic.
double cube_oscillation(const TensorField& field, const Cube& q);

/// Same value computed from a prefix-table mean plus a per-cube scan;
/// this is the kernel behind the fast seminorm sweep.
double cube_oscillation(const TensorField& field, const PrefixTable& table, const Cube& q);

/// Every cube of the grid in deterministic order: side ascending, origin
/// lexicographic.  mode dyadic restricts to sides 1,2,4,... at origins that
/// are multiples of the side.
std::vector<Cube> enumerate_cubes(const Grid& grid, CubeMode mode);

/// Number of cubes enumerate_cubes would yield, without materializing them.
std::int64_t count_cubes(const Grid& grid, CubeMode mode);

/// Integral of |F|^p over the grid (midpoint rule, Frobenius norm per cell).
double lp_integral(const TensorField& field, double p);

/// (integral |F|^p)^(1/p); requires finite p >= 1.
double lp_norm(const TensorField& field, double p);

/// Max over cells of the Frobenius norm.
double linf_norm(const TensorField& field);

/// Component means over the whole grid, as a flattened N x n matrix.
std::vector<double> field_mean(const TensorField& field);

/// Frobenius norm of a flattened matrix.
double frobenius(std::span<const double> values);

/// Cell-centered forward differences; the last cell along each axis falls
/// back to the backward difference.  Exact on affine inputs.
TensorField gradient(const ScalarGridFunction& u);

} // namespace bmolab
