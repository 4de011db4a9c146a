#include "bmolab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bmolab {

Grid::Grid(int dim, std::span<const int> shape, double spacing,
           std::span<const double> origin)
    : dim_(dim), shape_{1, 1, 1}, spacing_(spacing), origin_{0.0, 0.0, 0.0} {
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("Grid: dim must be 1, 2 or 3, got " + std::to_string(dim));
    if (static_cast<int>(shape.size()) != dim)
        throw std::invalid_argument("Grid: shape must have one entry per axis");
    if (!(spacing > 0.0) || !std::isfinite(spacing))
        throw std::invalid_argument("Grid: spacing must be positive and finite");
    for (int i = 0; i < dim; ++i) {
        if (shape[i] < 2)
            throw std::invalid_argument("Grid: shape must be >= 2 per axis");
        shape_[i] = shape[i];
    }
    if (!origin.empty()) {
        if (static_cast<int>(origin.size()) != dim)
            throw std::invalid_argument("Grid: origin must have one entry per axis");
        for (int i = 0; i < dim; ++i) {
            if (!std::isfinite(origin[i]))
                throw std::invalid_argument("Grid: origin must be finite");
            origin_[i] = origin[i];
        }
    }
    cells_ = static_cast<std::int64_t>(shape_[0]) * shape_[1] * shape_[2];
    cell_volume_ = 1.0;
    for (int i = 0; i < dim_; ++i) cell_volume_ *= spacing_;
}

bool cube_in_grid(const Grid& grid, const Cube& q) {
    if (q.side < 1) return false;
    for (int i = 0; i < grid.dim(); ++i) {
        if (q.origin[i] < 0 || q.origin[i] + q.side > grid.shape(i)) return false;
    }
    for (int i = grid.dim(); i < kMaxDim; ++i) {
        if (q.origin[i] != 0) return false;
    }
    return true;
}

std::int64_t cube_cell_count(const Grid& grid, const Cube& q) {
    std::int64_t n = 1;
    for (int i = 0; i < grid.dim(); ++i) n *= q.side;
    return n;
}

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw std::invalid_argument(std::string(what) + ": values must be finite");
    }
}

} // namespace

TensorField::TensorField(Grid grid, int rows, std::vector<double> values)
    : grid_(grid), rows_(rows), comps_(rows * grid.dim()), values_(std::move(values)) {
    if (rows_ < 1) throw std::invalid_argument("TensorField: rows must be >= 1");
    const std::int64_t expect = grid_.cell_count() * comps_;
    if (static_cast<std::int64_t>(values_.size()) != expect)
        throw std::invalid_argument("TensorField: expected " + std::to_string(expect) +
                                    " values, got " + std::to_string(values_.size()));
    require_finite(values_, "TensorField");
}

TensorField TensorField::zeros(const Grid& grid, int rows) {
    return TensorField(grid, rows,
                       std::vector<double>(grid.cell_count() * rows * grid.dim(), 0.0));
}

ScalarGridFunction::ScalarGridFunction(Grid grid, int components, std::vector<double> values)
    : grid_(grid), components_(components), values_(std::move(values)) {
    if (components_ < 1)
        throw std::invalid_argument("ScalarGridFunction: components must be >= 1");
    const std::int64_t expect = grid_.cell_count() * components_;
    if (static_cast<std::int64_t>(values_.size()) != expect)
        throw std::invalid_argument("ScalarGridFunction: expected " + std::to_string(expect) +
                                    " values, got " + std::to_string(values_.size()));
    require_finite(values_, "ScalarGridFunction");
}

ScalarGridFunction ScalarGridFunction::zeros(const Grid& grid, int components) {
    return ScalarGridFunction(grid, components,
                              std::vector<double>(grid.cell_count() * components, 0.0));
}

} // namespace bmolab
