#include "bmolab/grid_ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmolab/parallel.hpp"

namespace bmolab {

const char* cube_mode_name(CubeMode mode) {
    return mode == CubeMode::all ? "all" : "dyadic";
}

namespace {

void require_in_grid(const Grid& grid, const Cube& q) {
    if (!cube_in_grid(grid, q))
        throw std::domain_error("cube out of bounds: origin (" +
                                std::to_string(q.origin[0]) + "," + std::to_string(q.origin[1]) +
                                "," + std::to_string(q.origin[2]) + ") side " +
                                std::to_string(q.side));
}

Index3 cube_extent(const Grid& grid, const Cube& q) {
    Index3 n;
    for (int i = 0; i < kMaxDim; ++i) n[i] = i < grid.dim() ? q.side : 1;
    return n;
}

/// Bitwise constancy test; a constant cube has oscillation exactly zero.
bool cube_is_constant(const TensorField& field, const Cube& q) {
    const Grid& grid = field.grid();
    const Index3 ext = cube_extent(grid, q);
    const std::span<const double> first =
        field.cell_values(grid.linear_index(q.origin));
    for (int a = 0; a < ext[0]; ++a)
        for (int b = 0; b < ext[1]; ++b)
            for (int c = 0; c < ext[2]; ++c) {
                const std::int64_t cell = grid.linear_index(
                    {q.origin[0] + a, q.origin[1] + b, q.origin[2] + c});
                const std::span<const double> v = field.cell_values(cell);
                for (int e = 0; e < field.comps(); ++e)
                    if (v[e] != first[e]) return false;
            }
    return true;
}

double deviation_scan(const TensorField& field, const Cube& q,
                      std::span<const double> mean) {
    const Grid& grid = field.grid();
    const Index3 ext = cube_extent(grid, q);
    const int comps = field.comps();
    double sum = 0.0;
    for (int a = 0; a < ext[0]; ++a)
        for (int b = 0; b < ext[1]; ++b)
            for (int c = 0; c < ext[2]; ++c) {
                const std::int64_t cell = grid.linear_index(
                    {q.origin[0] + a, q.origin[1] + b, q.origin[2] + c});
                const std::span<const double> v = field.cell_values(cell);
                double dev2 = 0.0;
                for (int e = 0; e < comps; ++e) {
                    const double d = v[e] - mean[e];
                    dev2 += d * d;
                }
                sum += std::sqrt(dev2);
            }
    return sum / static_cast<double>(cube_cell_count(grid, q));
}

} // namespace

std::vector<double> cube_mean(const PrefixTable& table, const Cube& q) {
    require_in_grid(table.grid(), q);
    std::vector<double> out(static_cast<std::size_t>(table.comps()), 0.0);
    table.cube_mean_into(q, out);
    return out;
}

std::vector<double> cube_mean(const TensorField& field, const Cube& q) {
    return cube_mean(PrefixTable(field), q);
}

double cube_oscillation(const TensorField& field, const Cube& q) {
    require_in_grid(field.grid(), q);
    if (cube_is_constant(field, q)) return 0.0;
    // Two-pass direct computation: mean, then deviation scan.
    const Grid& grid = field.grid();
    const Index3 ext = cube_extent(grid, q);
    const int comps = field.comps();
    std::vector<double> mean(static_cast<std::size_t>(comps), 0.0);
    for (int a = 0; a < ext[0]; ++a)
        for (int b = 0; b < ext[1]; ++b)
            for (int c = 0; c < ext[2]; ++c) {
                const std::int64_t cell = grid.linear_index(
                    {q.origin[0] + a, q.origin[1] + b, q.origin[2] + c});
                const std::span<const double> v = field.cell_values(cell);
                for (int e = 0; e < comps; ++e) mean[e] += v[e];
            }
    const double inv = 1.0 / static_cast<double>(cube_cell_count(grid, q));
    for (double& m : mean) m *= inv;
    return deviation_scan(field, q, mean);
}

double cube_oscillation(const TensorField& field, const PrefixTable& table, const Cube& q) {
    require_in_grid(field.grid(), q);
    if (cube_is_constant(field, q)) return 0.0;
    std::vector<double> mean(static_cast<std::size_t>(field.comps()), 0.0);
    table.cube_mean_into(q, mean);
    return deviation_scan(field, q, mean);
}

std::vector<Cube> enumerate_cubes(const Grid& grid, CubeMode mode) {
    std::vector<Cube> cubes;
    const int max_side = *std::min_element(grid.shape().begin(),
                                           grid.shape().begin() + grid.dim());
    for (int side = 1; side <= max_side;
         side = mode == CubeMode::all ? side + 1 : side * 2) {
        const int step = mode == CubeMode::all ? 1 : side;
        Index3 count{1, 1, 1};
        for (int i = 0; i < grid.dim(); ++i)
            count[i] = (grid.shape(i) - side) / step + 1;
        for (int a = 0; a < count[0]; ++a)
            for (int b = 0; b < count[1]; ++b)
                for (int c = 0; c < count[2]; ++c)
                    cubes.push_back(Cube{{a * step, b * step, c * step}, side});
    }
    return cubes;
}

std::int64_t count_cubes(const Grid& grid, CubeMode mode) {
    std::int64_t total = 0;
    const int max_side = *std::min_element(grid.shape().begin(),
                                           grid.shape().begin() + grid.dim());
    for (int side = 1; side <= max_side;
         side = mode == CubeMode::all ? side + 1 : side * 2) {
        const int step = mode == CubeMode::all ? 1 : side;
        std::int64_t n = 1;
        for (int i = 0; i < grid.dim(); ++i)
            n *= (grid.shape(i) - side) / step + 1;
        total += n;
    }
    return total;
}

double lp_integral(const TensorField& field, double p) {
    if (!(p >= 1.0) || !std::isfinite(p))
        throw std::domain_error("lp norm requires finite p >= 1");
    const int comps = field.comps();
    const double half_p = 0.5 * p;
    const double sum = block_sum(field.grid().cell_count(), [&](std::int64_t cell) {
        const std::span<const double> v = field.cell_values(cell);
        double s = 0.0;
        for (int e = 0; e < comps; ++e) s += v[e] * v[e];
        return std::pow(s, half_p);
    });
    return sum * field.grid().cell_volume();
}

double lp_norm(const TensorField& field, double p) {
    return std::pow(lp_integral(field, p), 1.0 / p);
}

double linf_norm(const TensorField& field) {
    const int comps = field.comps();
    double max2 = 0.0;
#pragma omp parallel for schedule(static) reduction(max : max2)
    for (std::int64_t cell = 0; cell < field.grid().cell_count(); ++cell) {
        const std::span<const double> v = field.cell_values(cell);
        double s = 0.0;
        for (int e = 0; e < comps; ++e) s += v[e] * v[e];
        if (s > max2) max2 = s;
    }
    return std::sqrt(max2);
}

std::vector<double> field_mean(const TensorField& field) {
    const int comps = field.comps();
    std::vector<double> mean(static_cast<std::size_t>(comps), 0.0);
    const double inv = 1.0 / static_cast<double>(field.grid().cell_count());
    for (int e = 0; e < comps; ++e) {
        mean[e] = block_sum(field.grid().cell_count(),
                            [&](std::int64_t cell) { return field.cell_values(cell)[e]; }) *
                  inv;
    }
    return mean;
}

double frobenius(std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

TensorField gradient(const ScalarGridFunction& u) {
    const Grid& grid = u.grid();
    const int n = grid.dim();
    const int rows = u.components();
    const double inv_h = 1.0 / grid.spacing();
    std::vector<double> values(static_cast<std::size_t>(grid.cell_count()) * rows * n, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const Index3 idx = grid.multi_index(cell);
        double* out = values.data() + cell * rows * n;
        for (int axis = 0; axis < n; ++axis) {
            std::int64_t stride = 1;
            for (int i = axis + 1; i < kMaxDim; ++i) stride *= grid.shape(i);
            const bool last = idx[axis] == grid.shape(axis) - 1;
            const std::int64_t hi = last ? cell : cell + stride;
            const std::int64_t lo = last ? cell - stride : cell;
            for (int c = 0; c < rows; ++c)
                out[c * n + axis] = (u.value(hi, c) - u.value(lo, c)) * inv_h;
        }
    }
    return TensorField(grid, rows, std::move(values));
}

} // namespace bmolab
