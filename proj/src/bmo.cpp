#include "bmolab/bmo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmolab/errors.hpp"
#include "bmolab/parallel.hpp"
#include "bmolab/rng.hpp"

namespace bmolab {

namespace {

struct Best {
    double value = -1.0;
    std::int64_t index = -1; // global enumeration index
    Cube cube;

    // Higher oscillation wins; ties keep the earlier cube.
    void offer(double v, std::int64_t idx, const Cube& q) {
        if (v > value || (v == value && idx < index)) {
            value = v;
            index = idx;
            cube = q;
        }
    }
    void merge(const Best& other) {
        if (other.index >= 0) offer(other.value, other.index, other.cube);
    }
};

/// 2*max|F - <F>_grid|: no cube oscillation can exceed this.
double oscillation_cap(const TensorField& field) {
    const std::vector<double> mean = field_mean(field);
    const int comps = field.comps();
    double max2 = 0.0;
#pragma omp parallel for schedule(static) reduction(max : max2)
    for (std::int64_t cell = 0; cell < field.grid().cell_count(); ++cell) {
        const std::span<const double> v = field.cell_values(cell);
        double s = 0.0;
        for (int e = 0; e < comps; ++e) {
            const double d = v[e] - mean[e];
            s += d * d;
        }
        if (s > max2) max2 = s;
    }
    return 2.0 * std::sqrt(max2);
}

NormReport finish_report(const TensorField& field, Best best, CubeMode mode,
                         std::int64_t cubes_examined) {
    NormReport report;
    // Re-evaluate the winner through the direct two-pass path, so the
    // reported seminorm equals cube_oscillation(field, argmax_cube) exactly
    // (the table-path value can differ by an ulp).
    report.seminorm = best.index >= 0 ? cube_oscillation(field, best.cube) : 0.0;
    report.mean_abs = frobenius(field_mean(field));
    report.bmo_norm = report.seminorm + report.mean_abs;
    report.argmax_cube = best.cube;
    report.mode = mode;
    report.cubes_examined = cubes_examined;
    return report;
}

} // namespace

NormReport bmo_seminorm(const TensorField& field, CubeMode mode) {
    const Grid& grid = field.grid();
    const PrefixTable table(field);
    const double cap = oscillation_cap(field);
    const int max_side = *std::min_element(grid.shape().begin(),
                                           grid.shape().begin() + grid.dim());

    Best best;
    std::int64_t examined = 0;
    std::int64_t index_base = 0;
    for (int side = 1; side <= max_side;
         side = mode == CubeMode::all ? side + 1 : side * 2) {
        // Remaining sizes cannot beat a sup that already reached the cap,
        // and ties keep the earlier cube.
        if (best.index >= 0 && best.value >= cap) break;

        const int step = mode == CubeMode::all ? 1 : side;
        Index3 count{1, 1, 1};
        for (int i = 0; i < grid.dim(); ++i)
            count[i] = (grid.shape(i) - side) / step + 1;
        const std::int64_t n_origins =
            static_cast<std::int64_t>(count[0]) * count[1] * count[2];

#pragma omp parallel
        {
            Best local;
#pragma omp for schedule(static) nowait
            for (std::int64_t o = 0; o < n_origins; ++o) {
                const int c2 = static_cast<int>(o % count[2]);
                const int c1 = static_cast<int>((o / count[2]) % count[1]);
                const int c0 = static_cast<int>(o / (static_cast<std::int64_t>(count[1]) * count[2]));
                const Cube q{{c0 * step, c1 * step, c2 * step}, side};
                local.offer(cube_oscillation(field, table, q), index_base + o, q);
            }
#pragma omp critical(bmolab_bmo_best)
            best.merge(local);
        }
        examined += n_origins;
        index_base += n_origins;
    }
    return finish_report(field, best, mode, examined);
}

NormReport bmo_seminorm_bruteforce(const TensorField& field, std::int64_t cube_budget) {
    const Grid& grid = field.grid();
    const std::int64_t total = count_cubes(grid, CubeMode::all);
    if (total > cube_budget)
        throw ResourceError("bmo_seminorm_bruteforce: " + std::to_string(total) +
                            " cubes exceed budget " + std::to_string(cube_budget));

    Best best;
    std::int64_t index = 0;
    const int max_side = *std::min_element(grid.shape().begin(),
                                           grid.shape().begin() + grid.dim());
    for (int side = 1; side <= max_side; ++side) {
        Index3 count{1, 1, 1};
        for (int i = 0; i < grid.dim(); ++i) count[i] = grid.shape(i) - side + 1;
        for (int a = 0; a < count[0]; ++a)
            for (int b = 0; b < count[1]; ++b)
                for (int c = 0; c < count[2]; ++c) {
                    const Cube q{{a, b, c}, side};
                    best.offer(cube_oscillation(field, q), index++, q);
                }
    }
    return finish_report(field, best, CubeMode::all, index);
}

double bmo_norm_value(const TensorField& field) {
    const NormReport report = bmo_seminorm(field, CubeMode::all);
    return report.bmo_norm;
}

DominationReport linf_domination_check(const TensorField& field) {
    DominationReport report;
    report.seminorm = bmo_seminorm(field, CubeMode::all).seminorm;
    report.linf = linf_norm(field);
    report.margin = 2.0 * report.linf - report.seminorm;
    report.ok = report.margin >= 0.0;
    return report;
}

InterpolationReport interpolation_ratio(const TensorField& field, double p, double q) {
    if (!(p >= 1.0) || !(p < q) || !std::isfinite(q))
        throw std::domain_error("interpolation_ratio requires 1 <= p < q < inf");
    InterpolationReport report;
    report.p = p;
    report.q = q;
    report.lhs = lp_norm(field, q);
    const double bmo = bmo_norm_value(field);
    const double lp = lp_norm(field, p);
    report.rhs_factor = std::pow(bmo, 1.0 - p / q) * std::pow(lp, p / q);
    if (report.rhs_factor == 0.0)
        throw std::domain_error("interpolation_ratio undefined for the zero field");
    report.ratio = report.lhs / report.rhs_factor;
    report.j2_estimate = report.ratio;
    return report;
}

double calibrate_j2(std::span<const TensorField> family, double p, double q) {
    double sup = 0.0;
    for (const TensorField& f : family)
        sup = std::max(sup, interpolation_ratio(f, p, q).ratio);
    return sup;
}

double calibrate_j1(std::span<const TensorField> family, double q) {
    if (!(q >= 1.0) || !std::isfinite(q))
        throw std::domain_error("calibrate_j1 requires finite q >= 1");
    double sup = 0.0;
    for (const TensorField& f : family) {
        const double avg_q = std::pow(lp_integral(f, q) / f.grid().measure(), 1.0 / q);
        const double bmo = bmo_norm_value(f);
        if (bmo == 0.0)
            throw std::domain_error("calibrate_j1 undefined for the zero field");
        sup = std::max(sup, avg_q / bmo);
    }
    return sup;
}

CalibrationReport calibrate(std::span<const CalibrationField> family, double p, double q) {
    CalibrationReport report;
    report.p = p;
    report.q = q;
    double j1 = 0.0;
    for (const CalibrationField& member : family) {
        const double ratio = interpolation_ratio(member.field, p, q).ratio;
        report.members.push_back({member.name, ratio});
        report.j2_estimate = std::max(report.j2_estimate, ratio);
        const double avg_q =
            std::pow(lp_integral(member.field, q) / member.field.grid().measure(), 1.0 / q);
        j1 = std::max(j1, avg_q / bmo_norm_value(member.field));
    }
    report.j1_estimate = j1;
    return report;
}

std::vector<CalibrationField> calibration_family_named(const Grid& grid, int rows,
                                                       std::uint64_t seed,
                                                       int random_members) {
    std::vector<CalibrationField> family;
    const std::int64_t cells = grid.cell_count();
    const int comps = rows * grid.dim();

    // Constants (all components, and a single component).
    {
        std::vector<double> v(static_cast<std::size_t>(cells) * comps, 1.0);
        family.push_back({"constant_all", TensorField(grid, rows, std::move(v))});
    }
    {
        std::vector<double> v(static_cast<std::size_t>(cells) * comps, 0.0);
        for (std::int64_t cell = 0; cell < cells; ++cell) v[cell * comps] = 1.0;
        family.push_back({"constant_comp0", TensorField(grid, rows, std::move(v))});
    }

    // +-1 steps across the midplane of each axis.
    for (int axis = 0; axis < grid.dim(); ++axis) {
        std::vector<double> v(static_cast<std::size_t>(cells) * comps, 0.0);
        const int mid = grid.shape(axis) / 2;
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const double s = grid.multi_index(cell)[axis] < mid ? -1.0 : 1.0;
            for (int e = 0; e < comps; ++e) v[cell * comps + e] = s;
        }
        family.push_back({"step_axis" + std::to_string(axis),
                          TensorField(grid, rows, std::move(v))});
    }

    // log|x - x0| in the first component, the canonical unbounded BMO profile.
    // The singularity sits h/3 away from a cell center so log 0 never occurs.
    const auto log_field = [&](const std::array<double, 3>& center) {
        std::vector<double> v(static_cast<std::size_t>(cells) * comps, 0.0);
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const Index3 idx = grid.multi_index(cell);
            const std::array<double, 3> x = grid.cell_center(idx);
            double r2 = 0.0;
            for (int i = 0; i < grid.dim(); ++i) {
                const double d = x[i] - center[i];
                r2 += d * d;
            }
            v[cell * comps] = 0.5 * std::log(r2);
        }
        return TensorField(grid, rows, std::move(v));
    };
    {
        std::array<double, 3> center = grid.origin();
        const double offset = grid.spacing() / 3.0;
        for (int i = 0; i < grid.dim(); ++i) {
            // Midpoint cell center (integer index), nudged off by h/3.
            const int mid_cell = grid.shape(i) / 2;
            center[i] += grid.spacing() * static_cast<double>(mid_cell) + offset;
        }
        family.push_back({"log_center", log_field(center)});
        std::array<double, 3> corner = grid.origin();
        for (int i = 0; i < grid.dim(); ++i) corner[i] += offset;
        family.push_back({"log_corner", log_field(corner)});
    }

    // Seeded uniform random fields.
    for (int m = 0; m < random_members; ++m) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(m)));
        std::vector<double> v(static_cast<std::size_t>(cells) * comps);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        family.push_back({"random_" + std::to_string(m),
                          TensorField(grid, rows, std::move(v))});
    }
    return family;
}

std::vector<TensorField> calibration_family(const Grid& grid, int rows, std::uint64_t seed,
                                            int random_members) {
    std::vector<TensorField> family;
    for (CalibrationField& member : calibration_family_named(grid, rows, seed, random_members))
        family.push_back(std::move(member.field));
    return family;
}

} // namespace bmolab
