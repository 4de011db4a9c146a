#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace bmolab {

inline constexpr int kMaxDim = 3;

using Index3 = std::array<int, 3>;

/// Uniform axis-aligned box grid of cell centers in 1, 2 or 3 dimensions.
///
/// Cells are addressed by a multi-index (i0, i1, i2); axis 0 is the slowest
/// varying index and the last real axis the fastest ("row-major cell order").
/// Internally the shape is padded with trailing 1s so every kernel can loop
/// over three axes unconditionally.
class Grid {
public:
    Grid(int dim, std::span<const int> shape, double spacing,
         std::span<const double> origin = {});

    int dim() const { return dim_; }
    double spacing() const { return spacing_; }
    const Index3& shape() const { return shape_; }
    int shape(int axis) const { return shape_[axis]; }
    const std::array<double, 3>& origin() const { return origin_; }

    std::int64_t cell_count() const { return cells_; }
    double cell_volume() const { return cell_volume_; } // h^n
    double measure() const { return cell_volume_ * static_cast<double>(cells_); }

    std::int64_t linear_index(const Index3& idx) const {
        return (static_cast<std::int64_t>(idx[0]) * shape_[1] + idx[1]) * shape_[2] + idx[2];
    }
    Index3 multi_index(std::int64_t lin) const {
        Index3 idx;
        idx[2] = static_cast<int>(lin % shape_[2]);
        lin /= shape_[2];
        idx[1] = static_cast<int>(lin % shape_[1]);
        idx[0] = static_cast<int>(lin / shape_[1]);
        return idx;
    }
    std::array<double, 3> cell_center(const Index3& idx) const {
        return {origin_[0] + spacing_ * idx[0],
                origin_[1] + spacing_ * idx[1],
                origin_[2] + spacing_ * idx[2]};
    }

    bool operator==(const Grid& other) const = default;

private:
    int dim_;
    Index3 shape_;
    double spacing_;
    std::array<double, 3> origin_;
    std::int64_t cells_;
    double cell_volume_;
};

/// Axis-aligned hypercube of whole cells: `side` cells along every real axis.
struct Cube {
    Index3 origin{0, 0, 0};
    int side = 1;
};

/// True when the cube lies inside the grid (virtual axes are ignored).
bool cube_in_grid(const Grid& grid, const Cube& q);

/// Number of cells covered: side^dim.
std::int64_t cube_cell_count(const Grid& grid, const Cube& q);

/// Grid function with an N x n matrix value per cell, stored row-major by
/// cell then component: values[cell*(N*n) + r*n + c].  Immutable after
/// construction; the constructor validates length and finiteness.
class TensorField {
public:
    TensorField(Grid grid, int rows, std::vector<double> values);

    static TensorField zeros(const Grid& grid, int rows);

    const Grid& grid() const { return grid_; }
    int rows() const { return rows_; }
    int cols() const { return grid_.dim(); }
    int comps() const { return comps_; }

    double value(std::int64_t cell, int r, int c) const {
        return values_[cell * comps_ + r * grid_.dim() + c];
    }
    std::span<const double> cell_values(std::int64_t cell) const {
        return {values_.data() + cell * comps_, static_cast<std::size_t>(comps_)};
    }
    std::span<const double> values() const { return values_; }

private:
    Grid grid_;
    int rows_;
    int comps_;
    std::vector<double> values_;
};

/// Grid function with N scalar components per cell (u, w, boundary data...).
/// Storage: values[cell*N + c].  Immutable after construction.
class ScalarGridFunction {
public:
    ScalarGridFunction(Grid grid, int components, std::vector<double> values);

    static ScalarGridFunction zeros(const Grid& grid, int components);

    const Grid& grid() const { return grid_; }
    int components() const { return components_; }

    double value(std::int64_t cell, int c) const { return values_[cell * components_ + c]; }
    std::span<const double> cell_values(std::int64_t cell) const {
        return {values_.data() + cell * components_, static_cast<std::size_t>(components_)};
    }
    std::span<const double> values() const { return values_; }

private:
    Grid grid_;
    int components_;
    std::vector<double> values_;
};

} // namespace bmolab
