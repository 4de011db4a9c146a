#include "bmolab/variational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmolab/bmo.hpp"
#include "bmolab/grid_ops.hpp"
#include "bmolab/parallel.hpp"
#include "bmolab/rng.hpp"

namespace bmolab {

// ---------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------

BoundaryCondition BoundaryCondition::dirichlet(ScalarGridFunction data) {
    BoundaryCondition bc;
    bc.kind_ = BcKind::dirichlet;
    for (int axis = 0; axis < data.grid().dim(); ++axis)
        bc.faces_[static_cast<std::size_t>(axis)] = {true, true};
    bc.data_ = std::move(data);
    return bc;
}

BoundaryCondition BoundaryCondition::neumann() {
    return {};
}

BoundaryCondition BoundaryCondition::mixed(std::vector<Face> faces, ScalarGridFunction data) {
    BoundaryCondition bc;
    bc.kind_ = BcKind::mixed;
    const int dim = data.grid().dim();
    for (const Face& f : faces) {
        if (f.axis < 0 || f.axis >= dim)
            throw std::invalid_argument("BoundaryCondition::mixed: face axis out of range");
        bc.faces_[static_cast<std::size_t>(f.axis)][f.high ? 1 : 0] = true;
    }
    int count = 0;
    for (int axis = 0; axis < dim; ++axis)
        count += bc.faces_[static_cast<std::size_t>(axis)][0] +
                 bc.faces_[static_cast<std::size_t>(axis)][1];
    if (count == 0)
        throw std::invalid_argument("BoundaryCondition::mixed: needs a Dirichlet face");
    if (count == 2 * dim)
        throw std::invalid_argument("BoundaryCondition::mixed: needs a free face too");
    bc.data_ = std::move(data);
    return bc;
}

bool BoundaryCondition::is_dirichlet_cell(const Grid& grid, const Index3& idx) const {
    for (int axis = 0; axis < grid.dim(); ++axis) {
        if (faces_[static_cast<std::size_t>(axis)][0] && idx[axis] == 0) return true;
        if (faces_[static_cast<std::size_t>(axis)][1] && idx[axis] == grid.shape(axis) - 1)
            return true;
    }
    return false;
}

void BoundaryCondition::project_variation(const Grid& grid, int components,
                                          std::span<double> values) const {
    const std::int64_t cells = grid.cell_count();
    if (has_dirichlet()) {
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            if (!is_dirichlet_cell(grid, grid.multi_index(cell))) continue;
            for (int c = 0; c < components; ++c) values[cell * components + c] = 0.0;
        }
        return;
    }
    for (int c = 0; c < components; ++c) {
        double mean = 0.0;
        for (std::int64_t cell = 0; cell < cells; ++cell) mean += values[cell * components + c];
        mean /= static_cast<double>(cells);
        for (std::int64_t cell = 0; cell < cells; ++cell) values[cell * components + c] -= mean;
    }
}

void BoundaryCondition::enforce_data(const Grid& grid, int components,
                                     std::span<double> values) const {
    if (!has_dirichlet()) return;
    if (!data_ || !(data_->grid() == grid) || data_->components() != components)
        throw std::invalid_argument("BoundaryCondition: data does not match the grid");
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        if (!is_dirichlet_cell(grid, grid.multi_index(cell))) continue;
        for (int c = 0; c < components; ++c)
            values[cell * components + c] = data_->value(cell, c);
    }
}

double BoundaryCondition::variation_violation(const ScalarGridFunction& w) const {
    const Grid& grid = w.grid();
    const std::int64_t cells = grid.cell_count();
    double worst = 0.0;
    if (has_dirichlet()) {
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            if (!is_dirichlet_cell(grid, grid.multi_index(cell))) continue;
            for (int c = 0; c < w.components(); ++c)
                worst = std::max(worst, std::abs(w.value(cell, c)));
        }
        return worst;
    }
    for (int c = 0; c < w.components(); ++c) {
        double mean = 0.0;
        for (std::int64_t cell = 0; cell < cells; ++cell) mean += w.value(cell, c);
        worst = std::max(worst, std::abs(mean / static_cast<double>(cells)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Raw kernels shared by energy / residual / second variation
// ---------------------------------------------------------------------------

namespace {

std::int64_t axis_stride(const Grid& grid, int axis) {
    std::int64_t stride = 1;
    for (int i = axis + 1; i < kMaxDim; ++i) stride *= grid.shape(i);
    return stride;
}

/// Forward differences, last cell backward, into out (cells x comps x dim).
void raw_gradient(const Grid& grid, int comps, std::span<const double> u,
                  std::span<double> out) {
    const int n = grid.dim();
    const double inv_h = 1.0 / grid.spacing();
#pragma omp parallel for schedule(static)
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const Index3 idx = grid.multi_index(cell);
        double* g = out.data() + cell * comps * n;
        for (int axis = 0; axis < n; ++axis) {
            const std::int64_t stride = axis_stride(grid, axis);
            const bool last = idx[axis] == grid.shape(axis) - 1;
            const std::int64_t hi = last ? cell : cell + stride;
            const std::int64_t lo = last ? cell - stride : cell;
            for (int c = 0; c < comps; ++c)
                g[c * n + axis] = (u[hi * comps + c] - u[lo * comps + c]) * inv_h;
        }
    }
}

/// Adjoint of raw_gradient scaled by 1/h: accumulates the transpose of the
/// difference stencil applied to a per-cell N x n matrix field.  Serial so the
/// neighbor scatters stay deterministic.
void raw_scatter(const Grid& grid, int comps, std::span<const double> matrices,
                 std::span<double> out) {
    const int n = grid.dim();
    const double inv_h = 1.0 / grid.spacing();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const Index3 idx = grid.multi_index(cell);
        const double* p = matrices.data() + cell * comps * n;
        for (int axis = 0; axis < n; ++axis) {
            const std::int64_t stride = axis_stride(grid, axis);
            const bool last = idx[axis] == grid.shape(axis) - 1;
            const std::int64_t hi = last ? cell : cell + stride;
            const std::int64_t lo = last ? cell - stride : cell;
            for (int c = 0; c < comps; ++c) {
                const double v = p[c * n + axis] * inv_h;
                out[hi * comps + c] += v;
                out[lo * comps + c] -= v;
            }
        }
    }
}

void check_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::domain_error(std::string(what) + ": grids differ");
}

/// Applies fn(cell) over the cells of each non-Dirichlet boundary face;
/// a corner cell is visited once per face it belongs to.
template <class Fn>
void for_each_free_face_cell(const Grid& grid, const BoundaryCondition& bc, Fn&& fn) {
    for (int axis = 0; axis < grid.dim(); ++axis) {
        for (int side = 0; side < 2; ++side) {
            if (bc.dirichlet_face(axis, side == 1)) continue;
            const int fixed = side == 1 ? grid.shape(axis) - 1 : 0;
            Index3 limit = {1, 1, 1};
            for (int i = 0; i < grid.dim(); ++i) limit[i] = grid.shape(i);
            limit[axis] = 1;
            for (int a = 0; a < limit[0]; ++a)
                for (int b = 0; b < limit[1]; ++b)
                    for (int c = 0; c < limit[2]; ++c) {
                        Index3 idx{a, b, c};
                        idx[axis] = fixed;
                        fn(grid.linear_index(idx));
                    }
        }
    }
}

double load_energy(const Grid& grid, int comps, std::span<const double> u,
                   const BoundaryCondition* bc, const Loads* loads) {
    if (!loads) return 0.0;
    double e = 0.0;
    if (!loads->body.empty()) {
        if (static_cast<int>(loads->body.size()) != comps)
            throw std::invalid_argument("Loads: body must have one entry per component");
        double s = 0.0;
        for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell)
            for (int c = 0; c < comps; ++c) s += loads->body[c] * u[cell * comps + c];
        e += s * grid.cell_volume();
    }
    if (!loads->surface.empty()) {
        if (static_cast<int>(loads->surface.size()) != comps)
            throw std::invalid_argument("Loads: surface must have one entry per component");
        if (!bc)
            throw std::invalid_argument("Loads: surface load needs the boundary condition");
        const double face_weight = std::pow(grid.spacing(), grid.dim() - 1);
        double s = 0.0;
        for_each_free_face_cell(grid, *bc, [&](std::int64_t cell) {
            for (int c = 0; c < comps; ++c) s += loads->surface[c] * u[cell * comps + c];
        });
        e += s * face_weight;
    }
    return e;
}

} // namespace

ScalarGridFunction affine_function(const Grid& grid, int components,
                                   std::span<const double> a_matrix,
                                   std::span<const double> b_vector) {
    const int n = grid.dim();
    if (static_cast<int>(a_matrix.size()) != components * n)
        throw std::invalid_argument("affine_function: A must be N x n");
    if (static_cast<int>(b_vector.size()) != components)
        throw std::invalid_argument("affine_function: b must have N entries");
    std::vector<double> values(static_cast<std::size_t>(grid.cell_count()) * components);
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
        for (int c = 0; c < components; ++c) {
            double v = b_vector[c];
            for (int j = 0; j < n; ++j) v += a_matrix[c * n + j] * x[j];
            values[cell * components + c] = v;
        }
    }
    return ScalarGridFunction(grid, components, std::move(values));
}

double energy(const Integrand& w, const ScalarGridFunction& u, const BoundaryCondition* bc,
              const Loads* loads) {
    const Grid& grid = u.grid();
    if (w.rows() != u.components() || w.cols() != grid.dim())
        throw std::domain_error("energy: integrand dimensions do not match the state");
    const int comps = u.components();
    const int n = grid.dim();
    std::vector<double> grad(static_cast<std::size_t>(grid.cell_count()) * comps * n);
    raw_gradient(grid, comps, u.values(), grad);
    const double bulk = block_sum(grid.cell_count(), [&](std::int64_t cell) {
        const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
        const std::span<const double> k{grad.data() + cell * comps * n,
                                        static_cast<std::size_t>(comps * n)};
        return w.eval_equal(0, {x.data(), static_cast<std::size_t>(n)}, k, k);
    });
    return bulk * grid.cell_volume() - load_energy(grid, comps, u.values(), bc, loads);
}

double first_variation(const Integrand& w, const ScalarGridFunction& u,
                       const ScalarGridFunction& var, const BoundaryCondition& bc,
                       const Loads* loads) {
    check_same_grid(u.grid(), var.grid(), "first_variation");
    if (u.components() != var.components())
        throw std::domain_error("first_variation: component mismatch");
    const double violation = bc.variation_violation(var);
    double scale = 0.0;
    for (double v : var.values()) scale = std::max(scale, std::abs(v));
    if (violation > 1e-10 * (1.0 + scale))
        throw std::domain_error("first_variation: direction violates the variation space "
                                "(violation " + std::to_string(violation) + ")");

    const Grid& grid = u.grid();
    const int comps = u.components();
    const int n = grid.dim();
    std::vector<double> grad_u(static_cast<std::size_t>(grid.cell_count()) * comps * n);
    std::vector<double> grad_w(grad_u.size());
    raw_gradient(grid, comps, u.values(), grad_u);
    raw_gradient(grid, comps, var.values(), grad_w);

    const double bulk = block_sum(grid.cell_count(), [&](std::int64_t cell) {
        const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
        const std::span<const double> k{grad_u.data() + cell * comps * n,
                                        static_cast<std::size_t>(comps * n)};
        const std::span<const double> gw{grad_w.data() + cell * comps * n,
                                         static_cast<std::size_t>(comps * n)};
        const std::span<const double> dirs[1] = {gw};
        return w.eval(1, {x.data(), static_cast<std::size_t>(n)}, k, {dirs, 1});
    });
    return bulk * grid.cell_volume() -
           load_energy(grid, comps, var.values(), &bc, loads);
}

ScalarGridFunction el_residual_field(const Integrand& w, const ScalarGridFunction& u,
                                     const BoundaryCondition& bc, const Loads* loads) {
    const Grid& grid = u.grid();
    const int comps = u.components();
    const int n = grid.dim();
    std::vector<double> grad(static_cast<std::size_t>(grid.cell_count()) * comps * n);
    raw_gradient(grid, comps, u.values(), grad);

    // DW(x, grad u) per cell, then the transpose-of-difference assembly.
    std::vector<double> p(grad.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell) {
        const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
        w.dw_matrix({x.data(), static_cast<std::size_t>(n)},
                    {grad.data() + cell * comps * n, static_cast<std::size_t>(comps * n)},
                    {p.data() + cell * comps * n, static_cast<std::size_t>(comps * n)});
    }
    std::vector<double> g(static_cast<std::size_t>(grid.cell_count()) * comps);
    raw_scatter(grid, comps, p, g);

    if (loads && !loads->body.empty()) {
        for (std::int64_t cell = 0; cell < grid.cell_count(); ++cell)
            for (int c = 0; c < comps; ++c) g[cell * comps + c] -= loads->body[c];
    }
    if (loads && !loads->surface.empty()) {
        const double inv_h = 1.0 / grid.spacing();
        for_each_free_face_cell(grid, bc, [&](std::int64_t cell) {
            for (int c = 0; c < comps; ++c)
                g[cell * comps + c] -= loads->surface[c] * inv_h;
        });
    }
    bc.project_variation(grid, comps, g);
    return ScalarGridFunction(grid, comps, std::move(g));
}

namespace {

double l2_norm_density(const Grid& grid, std::span<const double> values) {
    const double s = block_sum(static_cast<std::int64_t>(values.size()),
                               [&](std::int64_t i) { return values[i] * values[i]; });
    return std::sqrt(s * grid.cell_volume());
}

} // namespace

double el_residual_norm(const Integrand& w, const ScalarGridFunction& u,
                        const BoundaryCondition& bc, const Loads* loads) {
    const ScalarGridFunction g = el_residual_field(w, u, bc, loads);
    return l2_norm_density(u.grid(), g.values());
}

Equilibrium solve_el(const Integrand& w, const BoundaryCondition& bc,
                     const ScalarGridFunction& init, double tol, int max_iter,
                     const Loads* loads, int lambda_iters, std::uint64_t lambda_seed) {
    const Grid& grid = init.grid();
    const int comps = init.components();

    if (bc.has_dirichlet()) {
        std::vector<double> check(init.values().begin(), init.values().end());
        bc.enforce_data(grid, comps, check);
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < check.size(); ++i) {
            worst = std::max(worst, std::abs(check[i] - init.values()[i]));
            scale = std::max(scale, std::abs(init.values()[i]));
        }
        if (worst > 1e-12 * (1.0 + scale))
            throw std::domain_error("solve_el: init violates the Dirichlet data by " +
                                    std::to_string(worst));
    }

    std::vector<double> u(init.values().begin(), init.values().end());
    if (!bc.has_dirichlet()) bc.project_variation(grid, comps, u);

    auto as_fn = [&](const std::vector<double>& v) {
        return ScalarGridFunction(grid, comps, std::vector<double>(v));
    };

    double e = energy(w, as_fn(u), &bc, loads);
    ScalarGridFunction g = el_residual_field(w, as_fn(u), bc, loads);
    double gn = l2_norm_density(grid, g.values());

    double step = 1.0;
    int iter = 0;
    std::vector<double> trial(u.size());
    while (gn > tol && iter < max_iter) {
        const double gn2 = gn * gn;
        // Once the predicted Armijo decrease drops below the resolution of
        // the energy value itself, the comparison is noise; switch to
        // accepting steps that shrink the residual norm instead.
        const double energy_ulp = 8e-16 * (1.0 + std::abs(e));
        bool accepted = false;
        bool have_trial_residual = false;
        for (int halving = 0; halving < 60 && !accepted; ++halving) {
            for (std::size_t i = 0; i < u.size(); ++i)
                trial[i] = u[i] - step * g.values()[i];
            const double e_trial = energy(w, as_fn(trial), &bc, loads);
            if (e_trial <= e - 1e-4 * step * gn2) {
                u.swap(trial);
                e = e_trial;
                accepted = true;
                break;
            }
            if (1e-4 * step * gn2 <= energy_ulp) {
                ScalarGridFunction g_trial = el_residual_field(w, as_fn(trial), bc, loads);
                const double gn_trial = l2_norm_density(grid, g_trial.values());
                if (gn_trial < gn) {
                    u.swap(trial);
                    e = e_trial;
                    g = std::move(g_trial);
                    gn = gn_trial;
                    accepted = true;
                    have_trial_residual = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break; // line search floor: keep the best iterate
        if (!have_trial_residual) {
            g = el_residual_field(w, as_fn(u), bc, loads);
            gn = l2_norm_density(grid, g.values());
        }
        step = std::min(step * 1.5, 1e6);
        ++iter;
    }

    Equilibrium eq{as_fn(u), e, gn, 0.0, iter, gn <= tol};
    eq.coercivity_4a = second_variation_lambda_min(w, eq.u_e, bc, lambda_iters, lambda_seed);
    return eq;
}

double second_variation(const Integrand& w, const ScalarGridFunction& u,
                        const ScalarGridFunction& z1, const ScalarGridFunction& z2) {
    check_same_grid(u.grid(), z1.grid(), "second_variation");
    check_same_grid(u.grid(), z2.grid(), "second_variation");
    const Grid& grid = u.grid();
    const int comps = u.components();
    const int n = grid.dim();
    std::vector<double> grad_u(static_cast<std::size_t>(grid.cell_count()) * comps * n);
    std::vector<double> grad_1(grad_u.size()), grad_2(grad_u.size());
    raw_gradient(grid, comps, u.values(), grad_u);
    raw_gradient(grid, comps, z1.values(), grad_1);
    raw_gradient(grid, comps, z2.values(), grad_2);
    const double s = block_sum(grid.cell_count(), [&](std::int64_t cell) {
        const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
        const std::size_t off = static_cast<std::size_t>(cell) * comps * n;
        const std::span<const double> dirs[2] = {
            {grad_1.data() + off, static_cast<std::size_t>(comps * n)},
            {grad_2.data() + off, static_cast<std::size_t>(comps * n)}};
        return w.eval(2, {x.data(), static_cast<std::size_t>(n)},
                      {grad_u.data() + off, static_cast<std::size_t>(comps * n)}, {dirs, 2});
    });
    return s * grid.cell_volume();
}

double second_variation_lambda_min(const Integrand& w, const ScalarGridFunction& u,
                                   const BoundaryCondition& bc, int iters,
                                   std::uint64_t seed) {
    const Grid& grid = u.grid();
    const int comps = u.components();
    const int n = grid.dim();
    const std::int64_t cells = grid.cell_count();
    const std::size_t nvals = static_cast<std::size_t>(cells) * comps;
    const std::size_t ngrad = nvals * n;

    std::vector<double> grad_u(ngrad);
    raw_gradient(grid, comps, u.values(), grad_u);

    std::vector<double> gz(ngrad), gr(ngrad), hz(ngrad);
    std::vector<double> az(nvals), bz(nvals), r(nvals);

    // d2E(z1,z2) and int grad z1 : grad z2 from precomputed gradients.
    const auto forms = [&](std::span<const double> g1, std::span<const double> g2,
                           double& a_form, double& b_form) {
        double a_sum = 0.0, b_sum = 0.0;
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            const std::size_t off = static_cast<std::size_t>(cell) * comps * n;
            const std::span<const double> d1{g1.data() + off,
                                             static_cast<std::size_t>(comps * n)};
            const std::span<const double> d2{g2.data() + off,
                                             static_cast<std::size_t>(comps * n)};
            const std::span<const double> dirs[2] = {d1, d2};
            a_sum += w.eval(2, {x.data(), static_cast<std::size_t>(n)},
                            {grad_u.data() + off, static_cast<std::size_t>(comps * n)},
                            {dirs, 2});
            double dot = 0.0;
            for (int e = 0; e < comps * n; ++e) dot += d1[e] * d2[e];
            b_sum += dot;
        }
        a_form = a_sum * grid.cell_volume();
        b_form = b_sum * grid.cell_volume();
    };

    // Density-form operator applies (projected).
    const auto apply_ops = [&](std::span<const double> zg) {
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            const std::size_t off = static_cast<std::size_t>(cell) * comps * n;
            w.d2w_apply({x.data(), static_cast<std::size_t>(n)},
                        {grad_u.data() + off, static_cast<std::size_t>(comps * n)},
                        {zg.data() + off, static_cast<std::size_t>(comps * n)},
                        {hz.data() + off, static_cast<std::size_t>(comps * n)});
        }
        raw_scatter(grid, comps, hz, az);
        raw_scatter(grid, comps, zg, bz);
        bc.project_variation(grid, comps, az);
        bc.project_variation(grid, comps, bz);
    };

    // Seeded start in the variation space.
    std::vector<double> z(nvals);
    Rng rng(seed);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);
    bc.project_variation(grid, comps, z);

    raw_gradient(grid, comps, z, gz);
    double azz, bzz;
    forms(gz, gz, azz, bzz);
    if (!(bzz > 0.0))
        throw std::domain_error("second_variation_lambda_min: int |grad z|^2 vanishes on "
                                "the variation space");
    double q = azz / bzz;

    for (int it = 0; it < iters; ++it) {
        apply_ops(gz);
        double rnorm2 = 0.0;
        for (std::size_t i = 0; i < nvals; ++i) {
            r[i] = az[i] - q * bz[i];
            rnorm2 += r[i] * r[i];
        }
        if (rnorm2 <= 1e-28 * (1.0 + q * q)) break;

        raw_gradient(grid, comps, r, gr);
        double azr, bzr, arr, brr;
        forms(gz, gr, azr, bzr);
        forms(gr, gr, arr, brr);

        // Smallest eigenpair of the 2x2 pencil on span{z, r}.
        const double a2 = bzz * brr - bzr * bzr;
        if (a2 <= 1e-300) break;
        const double b2 = -(azz * brr + arr * bzz - 2.0 * azr * bzr);
        const double c2 = azz * arr - azr * azr;
        const double disc = std::max(0.0, b2 * b2 - 4.0 * a2 * c2);
        const double lam = (-b2 - std::sqrt(disc)) / (2.0 * a2);
        if (!(lam < q * (1.0 - 1e-15)) && it > 0) {
            q = std::min(q, lam);
            break;
        }

        // Eigenvector from the better-conditioned row of (A - lam B).
        const double r11 = azz - lam * bzz, r12 = azr - lam * bzr, r22 = arr - lam * brr;
        double y1, y2;
        if (std::abs(r11) + std::abs(r12) >= std::abs(r12) + std::abs(r22)) {
            y1 = -r12;
            y2 = r11;
        } else {
            y1 = r22;
            y2 = -r12;
        }
        if (y1 == 0.0 && y2 == 0.0) break;

        double zmax = 0.0;
        for (std::size_t i = 0; i < nvals; ++i) {
            z[i] = y1 * z[i] + y2 * r[i];
            zmax = std::max(zmax, std::abs(z[i]));
        }
        if (zmax == 0.0) break;
        for (std::size_t i = 0; i < nvals; ++i) z[i] /= zmax;

        raw_gradient(grid, comps, z, gz);
        forms(gz, gz, azz, bzz);
        if (!(bzz > 0.0)) break;
        q = std::min(q, azz / bzz);
    }
    return q;
}

// ---------------------------------------------------------------------------
// Perturbation generators
// ---------------------------------------------------------------------------

const char* perturbation_name(PerturbationKind kind) {
    switch (kind) {
    case PerturbationKind::bump: return "bump";
    case PerturbationKind::oscillation: return "oscillation";
    case PerturbationKind::log_spike: return "log_spike";
    case PerturbationKind::smoothed_noise: return "smoothed_noise";
    }
    return "?";
}

ScalarGridFunction make_perturbation(const Grid& grid, int components,
                                     PerturbationKind kind, std::uint64_t seed,
                                     const BoundaryCondition& bc) {
    const int n = grid.dim();
    const std::int64_t cells = grid.cell_count();
    Rng rng(seed);

    std::array<double, 3> extent{}, low{};
    double min_extent = 1e300;
    for (int i = 0; i < n; ++i) {
        extent[static_cast<std::size_t>(i)] = grid.spacing() * grid.shape(i);
        low[static_cast<std::size_t>(i)] = grid.origin()[static_cast<std::size_t>(i)] -
                                           0.5 * grid.spacing();
        min_extent = std::min(min_extent, extent[static_cast<std::size_t>(i)]);
    }

    std::vector<double> values(static_cast<std::size_t>(cells) * components, 0.0);
    std::vector<double> amp(static_cast<std::size_t>(components));
    for (double& a : amp) a = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.0);

    switch (kind) {
    case PerturbationKind::bump: {
        // Displacement bump: component c tracks axis min(c, n-1), so the core
        // gradient is a coherent amp * identity block.  Contracting draws
        // (amp < 0) are the ones that can pull a state toward lower-energy
        // gradient regions.
        std::array<double, 3> center{};
        for (int i = 0; i < n; ++i)
            center[static_cast<std::size_t>(i)] =
                low[static_cast<std::size_t>(i)] +
                extent[static_cast<std::size_t>(i)] * rng.uniform(0.3, 0.7);
        const double radius = min_extent * rng.uniform(0.2, 0.4);
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            double prod = 1.0;
            for (int i = 0; i < n; ++i) {
                const double t = (x[static_cast<std::size_t>(i)] -
                                  center[static_cast<std::size_t>(i)]) / radius;
                prod *= std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0;
            }
            for (int c = 0; c < components; ++c) {
                const int axis = std::min(c, n - 1);
                const double axis_dist = x[static_cast<std::size_t>(axis)] -
                                         center[static_cast<std::size_t>(axis)];
                values[cell * components + c] =
                    amp[static_cast<std::size_t>(c)] * axis_dist * prod;
            }
        }
        break;
    }
    case PerturbationKind::oscillation: {
        std::array<int, 3> freq{};
        for (int i = 0; i < n; ++i)
            freq[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(2, 6));
        const double pi = 3.14159265358979323846;
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            double prod = 1.0;
            for (int i = 0; i < n; ++i)
                prod *= std::sin(pi * freq[static_cast<std::size_t>(i)] *
                                 (x[static_cast<std::size_t>(i)] -
                                  low[static_cast<std::size_t>(i)]) /
                                 extent[static_cast<std::size_t>(i)]);
            for (int c = 0; c < components; ++c)
                values[cell * components + c] = amp[static_cast<std::size_t>(c)] * prod;
        }
        break;
    }
    case PerturbationKind::log_spike: {
        // w = (x_a - c_a)(log(rho/R) - 1) under a smooth cutoff: the gradient
        // carries log(rho/R) in component a plus bounded terms, the profile
        // whose sup norm outruns its BMO norm under refinement.
        std::array<double, 3> center{};
        for (int i = 0; i < n; ++i)
            center[static_cast<std::size_t>(i)] =
                low[static_cast<std::size_t>(i)] +
                extent[static_cast<std::size_t>(i)] * rng.uniform(0.35, 0.65) +
                grid.spacing() / 3.0;
        const double radius = min_extent * rng.uniform(0.25, 0.45);
        const int spike_axis = static_cast<int>(rng.uniform_int(0, n - 1));
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            double rho2 = 0.0;
            for (int i = 0; i < n; ++i) {
                const double d = x[static_cast<std::size_t>(i)] -
                                 center[static_cast<std::size_t>(i)];
                rho2 += d * d;
            }
            const double rho = std::sqrt(rho2);
            double v = 0.0;
            if (rho > 0.0 && rho < radius) {
                const double t = rho / radius;
                double cutoff = 1.0;
                if (t > 0.5) {
                    const double s = (t - 0.5) / 0.5;
                    cutoff = (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s);
                }
                const double axis_dist =
                    x[static_cast<std::size_t>(spike_axis)] -
                    center[static_cast<std::size_t>(spike_axis)];
                v = axis_dist * (std::log(t) - 1.0) * cutoff;
            }
            for (int c = 0; c < components; ++c)
                values[cell * components + c] = amp[static_cast<std::size_t>(c)] * v;
        }
        break;
    }
    case PerturbationKind::smoothed_noise: {
        std::vector<double> raw(values.size());
        for (double& v : raw) v = rng.uniform(-1.0, 1.0);
        for (std::int64_t cell = 0; cell < cells; ++cell) {
            const Index3 idx = grid.multi_index(cell);
            for (int c = 0; c < components; ++c) {
                double sum = 0.0;
                int count = 0;
                Index3 nb;
                const int r0 = n > 0 ? 1 : 0, r1 = n > 1 ? 1 : 0, r2 = n > 2 ? 1 : 0;
                for (int d0 = -r0; d0 <= r0; ++d0)
                    for (int d1 = -r1; d1 <= r1; ++d1)
                        for (int d2 = -r2; d2 <= r2; ++d2) {
                            nb = {idx[0] + d0, idx[1] + d1, idx[2] + d2};
                            bool ok = true;
                            for (int i = 0; i < n; ++i)
                                ok = ok && nb[i] >= 0 && nb[i] < grid.shape(i);
                            if (!ok) continue;
                            sum += raw[grid.linear_index(nb) * components + c];
                            ++count;
                        }
                values[cell * components + c] = sum / count;
            }
        }
        break;
    }
    }

    bc.project_variation(grid, components, values);
    return ScalarGridFunction(grid, components, std::move(values));
}

// ---------------------------------------------------------------------------
// Stress test
// ---------------------------------------------------------------------------

namespace {

struct BatchResult {
    std::vector<StressSample> samples;
    std::vector<std::optional<TensorField>> grads;
    int failures = 0;
    int skipped = 0;
};

BatchResult stress_batch(const Integrand& w, const Equilibrium& eq,
                         const BoundaryCondition& bc, double delta,
                         std::span<const PerturbationKind> generators, int n_samples,
                         std::uint64_t seed, double j_constant, const Loads* loads,
                         bool keep_fields, double a) {
    const Grid& grid = eq.u_e.grid();
    const int comps = eq.u_e.components();
    const double e_base = eq.energy;
    const double j3 = j_constant * j_constant * j_constant;

    BatchResult batch;
    batch.samples.assign(static_cast<std::size_t>(n_samples), {});
    batch.grads.assign(static_cast<std::size_t>(n_samples), std::nullopt);

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_samples; ++i) {
        StressSample sample;
        sample.id = i;
        sample.kind = generators[static_cast<std::size_t>(i) % generators.size()];
        const std::uint64_t sample_seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
        Rng rho_rng(Rng::derive(sample_seed, 0xabcdULL));
        const ScalarGridFunction raw =
            make_perturbation(grid, comps, sample.kind, sample_seed, bc);
        const double raw_bmo = bmo_norm_value(gradient(raw));
        if (!(raw_bmo > 0.0)) {
            // Degenerate draw (constant after projection): skip and log.
            sample.skipped = true;
            batch.samples[static_cast<std::size_t>(i)] = sample;
            continue;
        }
        double rho = rho_rng.uniform();
        while (rho == 0.0) rho = rho_rng.uniform();
        const double scale = rho * delta / raw_bmo;

        std::vector<double> wv(raw.values().begin(), raw.values().end());
        for (double& v : wv) v *= scale;
        const ScalarGridFunction pert(grid, comps, std::move(wv));
        const TensorField grad_w = gradient(pert);

        sample.grad_bmo = bmo_norm_value(grad_w);
        sample.grad_l2sq = lp_integral(grad_w, 2.0);
        sample.grad_l3 = lp_integral(grad_w, 3.0);

        std::vector<double> vv(eq.u_e.values().begin(), eq.u_e.values().end());
        for (std::size_t e = 0; e < vv.size(); ++e) vv[e] += pert.values()[e];
        const ScalarGridFunction v_state(grid, comps, std::move(vv));
        sample.energy_delta = energy(w, v_state, &bc, loads) - e_base;
        sample.margin = sample.energy_delta - a * sample.grad_l2sq;

        sample.ineq47_ok =
            j3 * sample.grad_bmo * sample.grad_l2sq >= sample.grad_l3 * (1.0 - 1e-12);
        sample.j_valid = interpolation_ratio(grad_w, 2.0, 3.0).ratio <=
                         j_constant * (1.0 + 1e-12);

        batch.samples[static_cast<std::size_t>(i)] = sample;
        if (keep_fields) batch.grads[static_cast<std::size_t>(i)] = grad_w;
    }
    for (const StressSample& s : batch.samples) {
        if (s.skipped)
            ++batch.skipped;
        else if (s.margin < 0.0)
            ++batch.failures;
    }
    return batch;
}

} // namespace

StressReport minimizer_stress_test(const Integrand& w, const Equilibrium& eq,
                                   const BoundaryCondition& bc, double delta,
                                   std::span<const PerturbationKind> generators,
                                   int n_samples, std::uint64_t seed, double j_constant,
                                   const Loads* loads, bool keep_fields, int sweep_steps) {
    if (!(eq.coercivity_4a > 0.0))
        throw std::domain_error("minimizer_stress_test: needs coercivity_4a > 0");
    if (!(delta > 0.0))
        throw std::domain_error("minimizer_stress_test: delta must be positive");
    if (generators.empty())
        throw std::domain_error("minimizer_stress_test: needs at least one generator");
    if (!(j_constant > 0.0))
        throw std::domain_error("minimizer_stress_test: J must be positive");

    StressReport report;
    report.coercivity_4a = eq.coercivity_4a;
    report.a = eq.coercivity_4a / 4.0;
    report.delta = delta;
    report.j_constant = j_constant;
    report.n_samples = n_samples;
    report.seed = seed;

    BatchResult main = stress_batch(w, eq, bc, delta, generators, n_samples, seed,
                                    j_constant, loads, keep_fields, report.a);
    report.samples = std::move(main.samples);
    report.kept_grad = std::move(main.grads);
    report.failures = main.failures;
    report.skipped = main.skipped;

    // Largest failure-free radius by bisection on (0, delta]; fresh seeds per
    // trial so the sweep never replays the main batch.
    report.sweep.push_back({delta, report.failures});
    if (report.failures == 0) {
        report.certified_delta = delta;
    } else {
        double lo = 0.0, hi = delta;
        for (int step = 0; step < sweep_steps; ++step) {
            const double mid = 0.5 * (lo + hi);
            const std::uint64_t trial_seed =
                Rng::derive(seed, 0x5eedULL + static_cast<std::uint64_t>(step));
            const BatchResult trial = stress_batch(w, eq, bc, mid, generators, n_samples,
                                                   trial_seed, j_constant, loads, false,
                                                   report.a);
            report.sweep.push_back({mid, trial.failures});
            if (trial.failures == 0)
                lo = mid;
            else
                hi = mid;
        }
        report.certified_delta = lo;
    }
    return report;
}

QVariantReport remark_q_variant(const StressReport& report, double q, double j) {
    if (!(q > 2.0))
        throw std::domain_error("remark_q_variant: requires q > 2");
    if (!(j > 0.0))
        throw std::domain_error("remark_q_variant: J must be positive");
    QVariantReport out;
    out.q = q;
    out.j = j;
    out.jhat = std::pow(j, -q);
    const double delta_factor = std::pow(report.delta, 2.0 - q);
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const StressSample& s = report.samples[i];
        if (s.skipped) continue;
        if (i >= report.kept_grad.size() || !report.kept_grad[i])
            throw std::domain_error("remark_q_variant: report was built without kept fields");
        const TensorField& grad_w = *report.kept_grad[i];
        QVariantRow row;
        row.id = s.id;
        row.lq_integral = lp_integral(grad_w, q);
        row.bound = report.a * out.jhat * delta_factor * row.lq_integral;
        row.margin_q = s.energy_delta - row.bound;
        row.j_valid_q = interpolation_ratio(grad_w, 2.0, q).ratio <= j * (1.0 + 1e-12);
        row.ok = row.margin_q >= 0.0;
        if (!row.ok) ++out.failures;
        out.rows.push_back(row);
    }
    return out;
}

} // namespace bmolab
