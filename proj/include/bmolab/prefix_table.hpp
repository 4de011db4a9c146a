#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bmolab/grid.hpp"

namespace bmolab {

/// Per-component summed-area table over the cells of a TensorField.
/// Dimensions are shape+1 per axis; box_sum answers any axis-aligned
/// rectangle-of-cells query with 2^n table reads.
class PrefixTable {
public:
    explicit PrefixTable(const TensorField& field);

    const Grid& grid() const { return grid_; }
    int comps() const { return comps_; }

    /// Sum of component `comp` over cells [lo, hi) per axis (exclusive upper).
    double box_sum(int comp, const Index3& lo, const Index3& hi) const;

    /// Sum of component `comp` over the cube.
    double cube_sum(int comp, const Cube& q) const;

    /// Mean of all components over the cube, written to out (length comps).
    void cube_mean_into(const Cube& q, std::span<double> out) const;

private:
    std::int64_t at(int i0, int i1, int i2) const {
        return (static_cast<std::int64_t>(i0) * pad_[1] + i1) * pad_[2] + i2;
    }

    Grid grid_;
    int comps_;
    Index3 pad_; // shape + 1 per axis
    std::int64_t table_size_;
    std::vector<double> tables_; // comps_ tables back to back
};

} // namespace bmolab
