#include "bmolab/prefix_table.hpp"

#include <stdexcept>

namespace bmolab {

PrefixTable::PrefixTable(const TensorField& field)
    : grid_(field.grid()), comps_(field.comps()) {
    const Index3& shape = grid_.shape();
    pad_ = {shape[0] + 1, shape[1] + 1, shape[2] + 1};
    table_size_ = static_cast<std::int64_t>(pad_[0]) * pad_[1] * pad_[2];
    tables_.assign(static_cast<std::size_t>(table_size_) * comps_, 0.0);

    for (int comp = 0; comp < comps_; ++comp) {
        double* t = tables_.data() + static_cast<std::int64_t>(comp) * table_size_;
        // Seed the padded table, then prefix along each axis in turn.
        for (int i0 = 0; i0 < shape[0]; ++i0)
            for (int i1 = 0; i1 < shape[1]; ++i1)
                for (int i2 = 0; i2 < shape[2]; ++i2) {
                    const std::int64_t cell = grid_.linear_index({i0, i1, i2});
                    t[at(i0 + 1, i1 + 1, i2 + 1)] = field.cell_values(cell)[comp];
                }
        for (int i0 = 1; i0 < pad_[0]; ++i0)
            for (int i1 = 0; i1 < pad_[1]; ++i1)
                for (int i2 = 0; i2 < pad_[2]; ++i2)
                    t[at(i0, i1, i2)] += t[at(i0 - 1, i1, i2)];
        for (int i0 = 0; i0 < pad_[0]; ++i0)
            for (int i1 = 1; i1 < pad_[1]; ++i1)
                for (int i2 = 0; i2 < pad_[2]; ++i2)
                    t[at(i0, i1, i2)] += t[at(i0, i1 - 1, i2)];
        for (int i0 = 0; i0 < pad_[0]; ++i0)
            for (int i1 = 0; i1 < pad_[1]; ++i1)
                for (int i2 = 1; i2 < pad_[2]; ++i2)
                    t[at(i0, i1, i2)] += t[at(i0, i1, i2 - 1)];
    }
}

double PrefixTable::box_sum(int comp, const Index3& lo, const Index3& hi) const {
    const double* t = tables_.data() + static_cast<std::int64_t>(comp) * table_size_;
    double s = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        const int b0 = corner & 1, b1 = (corner >> 1) & 1, b2 = (corner >> 2) & 1;
        const int i0 = b0 ? hi[0] : lo[0];
        const int i1 = b1 ? hi[1] : lo[1];
        const int i2 = b2 ? hi[2] : lo[2];
        const int sign = ((3 - b0 - b1 - b2) & 1) ? -1 : 1;
        s += sign * t[at(i0, i1, i2)];
    }
    return s;
}

double PrefixTable::cube_sum(int comp, const Cube& q) const {
    Index3 lo = q.origin;
    Index3 hi;
    for (int i = 0; i < kMaxDim; ++i)
        hi[i] = lo[i] + (i < grid_.dim() ? q.side : 1);
    return box_sum(comp, lo, hi);
}

void PrefixTable::cube_mean_into(const Cube& q, std::span<double> out) const {
    if (static_cast<int>(out.size()) != comps_)
        throw std::invalid_argument("PrefixTable::cube_mean_into: bad output size");
    const double inv = 1.0 / static_cast<double>(cube_cell_count(grid_, q));
    for (int comp = 0; comp < comps_; ++comp) out[comp] = cube_sum(comp, q) * inv;
}

} // namespace bmolab
