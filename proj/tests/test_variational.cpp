#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bmolab/bmo.hpp"
#include "bmolab/grid_ops.hpp"
#include "bmolab/parallel.hpp"
#include "bmolab/variational.hpp"
#include "support/dense_eig.hpp"
#include "support/oracles.hpp"

using namespace bmolab;

namespace {

Grid unit_square(int n) {
    const double h = 1.0 / n;
    const int shape[] = {n, n};
    const double origin[] = {0.5 * h, 0.5 * h};
    return Grid(2, shape, h, origin);
}

ScalarGridFunction affine_state(const Grid& g, std::span<const double> a,
                                std::span<const double> b) {
    return affine_function(g, static_cast<int>(b.size()), a, b);
}

ScalarGridFunction add(const ScalarGridFunction& u, const ScalarGridFunction& w) {
    std::vector<double> v(u.values().begin(), u.values().end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += w.values()[i];
    return ScalarGridFunction(u.grid(), u.components(), std::move(v));
}

/// Free (non-Dirichlet) degrees of freedom, in deterministic order.
std::vector<std::int64_t> free_dofs(const Grid& g, int comps, const BoundaryCondition& bc) {
    std::vector<std::int64_t> dofs;
    for (std::int64_t cell = 0; cell < g.cell_count(); ++cell) {
        if (bc.has_dirichlet() && bc.is_dirichlet_cell(g, g.multi_index(cell))) continue;
        for (int c = 0; c < comps; ++c) dofs.push_back(cell * comps + c);
    }
    return dofs;
}

ScalarGridFunction with_values(const Grid& g, int comps, std::vector<double> v) {
    return ScalarGridFunction(g, comps, std::move(v));
}

constexpr PerturbationKind kAllKinds[] = {
    PerturbationKind::bump, PerturbationKind::oscillation, PerturbationKind::log_spike,
    PerturbationKind::smoothed_noise};

} // namespace

TEST_CASE("boundary condition bookkeeping") {
    const Grid g = unit_square(4);
    const double a[] = {1.0, 0.0, 0.0, 1.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);

    const BoundaryCondition dir = BoundaryCondition::dirichlet(data);
    CHECK(dir.has_dirichlet());
    int boundary_cells = 0;
    for (std::int64_t cell = 0; cell < g.cell_count(); ++cell)
        boundary_cells += dir.is_dirichlet_cell(g, g.multi_index(cell));
    CHECK(boundary_cells == 12); // 4x4 ring

    const BoundaryCondition neu = BoundaryCondition::neumann();
    CHECK_FALSE(neu.has_dirichlet());

    const BoundaryCondition mix =
        BoundaryCondition::mixed({Face{0, false}, Face{1, true}}, data);
    CHECK(mix.is_dirichlet_cell(g, {0, 2, 0}));
    CHECK(mix.is_dirichlet_cell(g, {2, 3, 0}));
    CHECK_FALSE(mix.is_dirichlet_cell(g, {3, 2, 0}));
    CHECK_THROWS_AS(BoundaryCondition::mixed({}, data), std::invalid_argument);
    CHECK_THROWS_AS(BoundaryCondition::mixed({Face{0, false}, Face{0, true}, Face{1, false},
                                              Face{1, true}},
                                             data),
                    std::invalid_argument);

    // Projection: Dirichlet zeroing is exact; Neumann means vanish to 1e-14.
    ScalarGridFunction w = oracle::random_function(g, 2, 3);
    std::vector<double> v(w.values().begin(), w.values().end());
    dir.project_variation(g, 2, v);
    const ScalarGridFunction wd = with_values(g, 2, std::move(v));
    CHECK(dir.variation_violation(wd) == 0.0);

    std::vector<double> v2(w.values().begin(), w.values().end());
    neu.project_variation(g, 2, v2);
    const ScalarGridFunction wn = with_values(g, 2, std::move(v2));
    CHECK(neu.variation_violation(wn) <= 1e-14);
}

TEST_CASE("energy: affine states, constants, direct-sum oracle") {
    const Grid g = unit_square(8);
    const Integrand half_norm2 = Integrand::quadratic(2, 2, {}, 2);

    // W = 1/2 |K|^2, u affine with gradient A on a unit-measure box -> 1/2 |A|^2.
    const double a[] = {2.0, -1.0, 0.5, 3.0};
    const double b[] = {0.3, -0.2};
    const ScalarGridFunction u = affine_state(g, a, b);
    double a2 = 0.0;
    for (double v : a) a2 += v * v;
    CHECK(energy(half_norm2, u) == doctest::Approx(0.5 * a2).epsilon(1e-12));

    const ScalarGridFunction c(g, 2, std::vector<double>(g.cell_count() * 2, 4.0));
    CHECK(energy(half_norm2, c) == 0.0);

    // Double-well against a direct-summation oracle.
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const ScalarGridFunction r = oracle::random_function(g, 2, 17);
    const TensorField grad = gradient(r);
    double ref = 0.0;
    for (std::int64_t cell = 0; cell < g.cell_count(); ++cell) {
        double s = 0.0;
        for (int e = 0; e < grad.comps(); ++e)
            s += grad.cell_values(cell)[e] * grad.cell_values(cell)[e];
        ref += (s - 1.0) * (s - 1.0);
    }
    ref *= g.cell_volume();
    CHECK(oracle::rel_diff(energy(dw, r), ref) < 1e-12);
}

TEST_CASE("first variation: zero direction, quadratic identity, FD order") {
    const Grid g = unit_square(6);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.5, -0.5, 2.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction u = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(u);

    CHECK(first_variation(quad, u, ScalarGridFunction::zeros(g, 2), bc) == 0.0);

    // For W = 1/2 |K|^2 the first variation is int grad u : grad w.
    ScalarGridFunction w = make_perturbation(g, 2, PerturbationKind::bump, 5, bc);
    const TensorField gu = gradient(u);
    const TensorField gw = gradient(w);
    double ref = 0.0;
    for (std::int64_t cell = 0; cell < g.cell_count(); ++cell)
        for (int e = 0; e < gu.comps(); ++e)
            ref += gu.cell_values(cell)[e] * gw.cell_values(cell)[e];
    ref *= g.cell_volume();
    CHECK(oracle::rel_diff(first_variation(quad, u, w, bc), ref) < 1e-12);

    // FD-in-t oracle at second order for the double-well.
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const ScalarGridFunction base = oracle::random_function(g, 2, 23);
    const double fv = first_variation(dw, base, w, bc);
    double prev_err = 0.0, order = 0.0;
    int level = 0;
    for (double t : {0.02, 0.01}) {
        const auto shift = [&](double s) {
            std::vector<double> v(base.values().begin(), base.values().end());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += s * w.values()[i];
            return energy(dw, with_values(g, 2, std::move(v)));
        };
        const double fd = (shift(t) - shift(-t)) / (2 * t);
        const double err = std::abs(fd - fv);
        if (level == 1) order = std::log2(prev_err / err);
        prev_err = err;
        ++level;
    }
    CHECK(order >= 1.8);

    // Constraint violations are rejected.
    const ScalarGridFunction bad(g, 2, std::vector<double>(g.cell_count() * 2, 1.0));
    CHECK_THROWS_AS(first_variation(quad, u, bad, bc), std::domain_error);
}

TEST_CASE("el_residual is the exact FD gradient of the energy") {
    const Grid g = unit_square(5);
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const double a[] = {1.5, 0.0, 0.0, 1.5};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const ScalarGridFunction u = data; // any admissible state

    const ScalarGridFunction res = el_residual_field(dw, u, bc);
    const double vol = g.cell_volume();

    // Central differences of the energy over every free DOF; density form
    // means dividing the FD derivative by the cell volume.  Convergence at
    // second order certifies the residual is the exact energy gradient.
    double prev_max_err = 0.0, order = 0.0;
    int level = 0;
    for (double h : {2e-3, 1e-3}) {
        double max_err = 0.0;
        for (std::int64_t dof : free_dofs(g, 2, bc)) {
            const auto shift = [&](double s) {
                std::vector<double> v(u.values().begin(), u.values().end());
                v[static_cast<std::size_t>(dof)] += s;
                return energy(dw, with_values(g, 2, std::move(v)), &bc);
            };
            const double fd = (shift(h) - shift(-h)) / (2 * h) / vol;
            max_err = std::max(max_err,
                               std::abs(fd - res.values()[static_cast<std::size_t>(dof)]));
        }
        if (level == 1) order = std::log2(prev_max_err / max_err);
        prev_max_err = max_err;
        ++level;
    }
    CHECK(order >= 1.8);
    CHECK(prev_max_err < 1e-2);

    // On an exactly quadratic energy the central difference is exact.
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const ScalarGridFunction qres = el_residual_field(quad, u, bc);
    double quad_err = 0.0;
    for (std::int64_t dof : free_dofs(g, 2, bc)) {
        const auto shift = [&](double s) {
            std::vector<double> v(u.values().begin(), u.values().end());
            v[static_cast<std::size_t>(dof)] += s;
            return energy(quad, with_values(g, 2, std::move(v)), &bc);
        };
        const double fd = (shift(1e-4) - shift(-1e-4)) / 2e-4 / vol;
        quad_err = std::max(quad_err,
                            std::abs(fd - qres.values()[static_cast<std::size_t>(dof)]));
    }
    CHECK(quad_err < 1e-7);

    // first_variation equals the L2 pairing with the residual, exactly.
    const ScalarGridFunction w = make_perturbation(g, 2, PerturbationKind::oscillation, 9, bc);
    double pairing = 0.0;
    for (std::size_t i = 0; i < w.values().size(); ++i)
        pairing += res.values()[i] * w.values()[i];
    pairing *= vol;
    CHECK(oracle::rel_diff(first_variation(dw, u, w, bc), pairing) < 1e-12);
}

TEST_CASE("solve_el: quadratic with affine Dirichlet data") {
    const Grid g = unit_square(16);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.0, 0.0, 1.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);

    const Equilibrium eq = solve_el(quad, bc, data, 1e-11, 20000);
    CHECK(eq.converged);
    CHECK(eq.el_residual_norm < 1e-11);
    CHECK(eq.coercivity_4a == doctest::Approx(1.0).epsilon(1e-8));

    // Init violating the data is refused.
    const ScalarGridFunction zero = ScalarGridFunction::zeros(g, 2);
    CHECK_THROWS_AS(solve_el(quad, bc, zero, 1e-10, 10), std::domain_error);
}

TEST_CASE("solve_el: 1D dense oracle for the discrete solution") {
    // Small 1D quadratic problem solved independently through the normal
    // equations of the exact discrete gradient.
    const int n = 8;
    const double h = 1.0 / n;
    const int shape[] = {n};
    const double origin[] = {0.5 * h};
    const Grid g(1, shape, h, origin);
    const Integrand quad = Integrand::quadratic(1, 1, {}, 2);
    const double a[] = {1.0};
    const double b[] = {0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);

    const Equilibrium eq = solve_el(quad, bc, data, 1e-13, 50000);
    CHECK(eq.converged);

    // Dense assembly of the residual as a linear map over free DOFs.
    const auto dofs = free_dofs(g, 1, bc);
    const int m = static_cast<int>(dofs.size());
    oracle::DenseMatrix mat(m);
    std::vector<double> rhs(static_cast<std::size_t>(m));
    const ScalarGridFunction base = data;
    const ScalarGridFunction r0 = el_residual_field(quad, base, bc);
    for (int j = 0; j < m; ++j) {
        std::vector<double> v(base.values().begin(), base.values().end());
        v[static_cast<std::size_t>(dofs[j])] += 1.0;
        const ScalarGridFunction rj = el_residual_field(quad, with_values(g, 1, std::move(v)), bc);
        for (int i = 0; i < m; ++i)
            mat(i, j) = rj.values()[static_cast<std::size_t>(dofs[i])] -
                        r0.values()[static_cast<std::size_t>(dofs[i])];
    }
    for (int i = 0; i < m; ++i) rhs[static_cast<std::size_t>(i)] = -r0.values()[static_cast<std::size_t>(dofs[i])];
    // Solve mat * delta = rhs by Cholesky (mat is SPD for the quadratic).
    const oracle::DenseMatrix l = oracle::cholesky(mat);
    std::vector<double> y = oracle::forward_solve(l, rhs);
    // Back substitution with L^T.
    std::vector<double> delta(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
        double s = y[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < m; ++k) s -= l(k, i) * delta[static_cast<std::size_t>(k)];
        delta[static_cast<std::size_t>(i)] = s / l(i, i);
    }
    for (int i = 0; i < m; ++i) {
        const double expected = base.values()[static_cast<std::size_t>(dofs[i])] +
                                delta[static_cast<std::size_t>(i)];
        CHECK(eq.u_e.values()[static_cast<std::size_t>(dofs[i])] ==
              doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("solve_el: mixed boundary, Dirichlet on two faces") {
    const Grid g = unit_square(8);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.0, 0.0, -0.5};
    const double b[] = {0.0, 0.2};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc =
        BoundaryCondition::mixed({Face{0, false}, Face{1, true}}, data);

    const Equilibrium eq = solve_el(quad, bc, data, 1e-10, 60000);
    CHECK(eq.converged);
    CHECK(eq.el_residual_norm < 1e-10);
    CHECK(eq.coercivity_4a == doctest::Approx(1.0).epsilon(1e-8));
    // Dirichlet cells still carry the data; free-face cells moved.
    for (std::int64_t cell = 0; cell < g.cell_count(); ++cell) {
        if (!bc.is_dirichlet_cell(g, g.multi_index(cell))) continue;
        for (int c = 0; c < 2; ++c)
            CHECK(eq.u_e.value(cell, c) == data.value(cell, c));
    }
    // Variations vanish on the Dirichlet part only.
    const ScalarGridFunction w = make_perturbation(g, 2, PerturbationKind::bump, 31, bc);
    CHECK(bc.variation_violation(w) == 0.0);
    CHECK(std::abs(first_variation(quad, eq.u_e, w, bc)) < 1e-8);
}

TEST_CASE("solve_el: pure Neumann quadratic relaxes to a constant (zero) state") {
    const Grid g = unit_square(8);
    const Integrand quad = Integrand::quadratic(1, 2, {}, 2);
    const BoundaryCondition bc = BoundaryCondition::neumann();
    const ScalarGridFunction init = oracle::random_function(g, 1, 3);
    const Equilibrium eq = solve_el(quad, bc, init, 1e-10, 20000);
    CHECK(eq.converged);
    CHECK(linf_norm(gradient(eq.u_e)) < 1e-8);
    double mean = 0.0;
    for (double v : eq.u_e.values()) mean += v;
    CHECK(std::abs(mean / g.cell_count()) < 1e-12);
}

TEST_CASE("second variation: symmetry, quadratic quotient, decoupled components") {
    const Grid g = unit_square(6);
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const ScalarGridFunction u = oracle::random_function(g, 2, 31);
    const ScalarGridFunction z1 = oracle::random_function(g, 2, 32);
    const ScalarGridFunction z2 = oracle::random_function(g, 2, 33);
    const double d12 = second_variation(dw, u, z1, z2);
    const double d21 = second_variation(dw, u, z2, z1);
    CHECK(std::abs(d12 - d21) <= 1e-12 * (1.0 + std::abs(d12)));

    // W = 1/2 |K|^2: quotient == 1 for every admissible z.
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const BoundaryCondition bc =
        BoundaryCondition::dirichlet(ScalarGridFunction::zeros(g, 2));
    const double q = second_variation(quad, u, z1, z1) /
                     lp_integral(gradient(z1), 2.0);
    CHECK(q == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(second_variation_lambda_min(quad, u, bc, 50) == doctest::Approx(1.0).epsilon(1e-10));

    // Per-component weights: lambda_min = min over components.
    const Integrand diag = Integrand::quadratic(2, 2, {3.0, 3.0, 0.25, 0.25}, 2);
    const double lam = second_variation_lambda_min(diag, u, bc, 400);
    CHECK(lam == doctest::Approx(0.25).epsilon(1e-7));
}

TEST_CASE("lambda_min matches the dense generalized eigenvalue oracle") {
    const Grid g = unit_square(5);
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const double a[] = {1.6, 0.0, 0.0, 1.6};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const Equilibrium eq = solve_el(dw, bc, data, 1e-9, 30000);
    REQUIRE(eq.converged);

    // Dense A from the second-variation bilinear form over free DOF basis
    // vectors, dense B from gradient inner products.
    const auto dofs = free_dofs(g, 2, bc);
    const int m = static_cast<int>(dofs.size());
    std::vector<ScalarGridFunction> basis;
    basis.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        std::vector<double> v(g.cell_count() * 2, 0.0);
        v[static_cast<std::size_t>(dofs[i])] = 1.0;
        basis.push_back(with_values(g, 2, std::move(v)));
    }
    oracle::DenseMatrix amat(m), bmat(m);
    std::vector<TensorField> grads;
    grads.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) grads.push_back(gradient(basis[static_cast<std::size_t>(i)]));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double aij = second_variation(dw, eq.u_e, basis[static_cast<std::size_t>(i)],
                                                basis[static_cast<std::size_t>(j)]);
            double bij = 0.0;
            for (std::int64_t cell = 0; cell < g.cell_count(); ++cell)
                for (int e = 0; e < grads[static_cast<std::size_t>(i)].comps(); ++e)
                    bij += grads[static_cast<std::size_t>(i)].cell_values(cell)[e] *
                           grads[static_cast<std::size_t>(j)].cell_values(cell)[e];
            bij *= g.cell_volume();
            amat(i, j) = amat(j, i) = aij;
            bmat(i, j) = bmat(j, i) = bij;
        }
    }
    const double dense = oracle::generalized_min_eigenvalue(amat, bmat);
    const double iterative = eq.coercivity_4a;
    CHECK(oracle::rel_diff(iterative, dense) < 1e-6);

    // Quotient never dips below the dense minimum on random admissible z.
    for (int rep = 0; rep < 10; ++rep) {
        ScalarGridFunction z = make_perturbation(
            g, 2, kAllKinds[static_cast<std::size_t>(rep % 4)], 100 + rep, bc);
        const double b_form = lp_integral(gradient(z), 2.0);
        if (b_form == 0.0) continue;
        CHECK(second_variation(dw, eq.u_e, z, z) / b_form >= dense * (1.0 - 1e-9));
    }
}

TEST_CASE("lambda_min rejects the empty quotient") {
    // On a 2x2 grid every cell sits on the Dirichlet boundary, so the
    // variation space is trivial and the quotient has no admissible z.
    const int shape[] = {2, 2};
    const Grid tiny(2, shape, 0.5);
    const BoundaryCondition bc =
        BoundaryCondition::dirichlet(ScalarGridFunction::zeros(tiny, 1));
    const ScalarGridFunction u = ScalarGridFunction::zeros(tiny, 1);
    CHECK_THROWS_AS(second_variation_lambda_min(Integrand::quadratic(1, 2, {}, 2), u, bc, 10),
                    std::domain_error);
}

TEST_CASE("exact quadratic expansion at equilibrium") {
    const Grid g = unit_square(12);
    const Integrand quad = Integrand::quadratic(2, 2, {1.5, 0.5, 1.0, 2.0}, 2);
    const double a[] = {1.0, 0.2, -0.3, 0.8};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const Equilibrium eq = solve_el(quad, bc, data, 1e-12, 60000);
    REQUIRE(eq.converged);

    for (int rep = 0; rep < 8; ++rep) {
        ScalarGridFunction w = make_perturbation(
            g, 2, kAllKinds[static_cast<std::size_t>(rep % 4)], 500 + rep, bc);
        // Scale so the quadratic term dominates roundoff but stays O(1).
        const double q_form = second_variation(quad, eq.u_e, w, w);
        if (q_form == 0.0) continue;
        std::vector<double> wv(w.values().begin(), w.values().end());
        const double scale = 1.0 / std::sqrt(q_form);
        for (double& v : wv) v *= scale;
        w = with_values(g, 2, std::move(wv));

        const double lhs = energy(quad, add(eq.u_e, w)) - eq.energy;
        const double rhs = 0.5 * second_variation(quad, eq.u_e, w, w);
        CHECK(oracle::rel_diff(lhs, rhs) < 1e-10);
    }
}

TEST_CASE("stress test on the exactly-quadratic instance") {
    const Grid g = unit_square(12);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.0, 0.0, 1.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const Equilibrium eq = solve_el(quad, bc, data, 1e-12, 60000);
    REQUIRE(eq.converged);
    REQUIRE(eq.coercivity_4a == doctest::Approx(1.0).epsilon(1e-10));

    const auto family = calibration_family(g, 2, 7);
    const double j = calibrate_j2(family, 2.0, 3.0) * 1.2;

    const StressReport rep = minimizer_stress_test(quad, eq, bc, 0.5, kAllKinds, 40, 99, j);
    CHECK(rep.failures == 0);
    CHECK(rep.skipped == 0);
    CHECK(rep.certified_delta == 0.5);
    CHECK(rep.a == doctest::Approx(0.25).epsilon(1e-10));
    for (const StressSample& s : rep.samples) {
        CHECK(s.grad_bmo < 0.5);
        // Margin = quarter of the gradient energy, strictly positive.
        CHECK(s.margin > 0.0);
        CHECK(oracle::rel_diff(s.margin, 0.25 * s.grad_l2sq) < 1e-6);
        CHECK(s.ineq47_ok);
    }

    // The first variation vanishes at the converged state, to solver
    // tolerance, for every generator family.
    for (int i = 0; i < 8; ++i) {
        const ScalarGridFunction w = make_perturbation(
            g, 2, kAllKinds[static_cast<std::size_t>(i % 4)], 900 + i, bc);
        CHECK(std::abs(first_variation(quad, eq.u_e, w, bc)) <=
              10.0 * eq.el_residual_norm * std::sqrt(lp_integral(gradient(w), 2.0) + 1.0));
    }
}

TEST_CASE("stress test catches a broken coercivity claim") {
    // Inflating coercivity_4a beyond the true curvature must produce failures
    // at large delta: with a > lambda/2 every sample margin goes negative.
    const Grid g = unit_square(10);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.0, 0.0, 1.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    Equilibrium eq = solve_el(quad, bc, data, 1e-11, 60000);
    REQUIRE(eq.converged);
    eq.coercivity_4a = 4.0; // a = 1 > lambda/2 = 1/2: every margin negative
    const StressReport rep = minimizer_stress_test(quad, eq, bc, 0.5, kAllKinds, 16, 5, 3.0);
    CHECK(rep.failures == 16);
    CHECK(rep.certified_delta == 0.0);
    CHECK(rep.sweep.size() == 9); // initial trial + 8 bisection steps
}

TEST_CASE("certified delta never shrinks when the coercivity input is reduced") {
    const Grid g = unit_square(10);
    const Integrand dw = Integrand::double_well(2, 2, 3);
    const double a[] = {2.0, 0.0, 0.0, 2.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const Equilibrium eq = solve_el(dw, bc, data, 1e-9, 60000);
    REQUIRE(eq.converged);
    REQUIRE(eq.coercivity_4a > 0.0);

    const auto family = calibration_family(g, 2, 8);
    const double j = calibrate_j2(family, 2.0, 3.0) * 1.2;

    const double big_delta = 40.0; // far beyond any certifiable radius
    const StressReport full =
        minimizer_stress_test(dw, eq, bc, big_delta, kAllKinds, 24, 11, j, nullptr, false);
    Equilibrium weaker = eq;
    weaker.coercivity_4a = eq.coercivity_4a * 0.5;
    const StressReport relaxed =
        minimizer_stress_test(dw, weaker, bc, big_delta, kAllKinds, 24, 11, j, nullptr, false);
    CHECK(relaxed.certified_delta >= full.certified_delta);
}

TEST_CASE("perturbation generators respect constraints and stay seeded") {
    const Grid g = unit_square(9);
    const BoundaryCondition dir =
        BoundaryCondition::dirichlet(ScalarGridFunction::zeros(g, 2));
    const BoundaryCondition neu = BoundaryCondition::neumann();
    for (PerturbationKind kind : kAllKinds) {
        const ScalarGridFunction wd = make_perturbation(g, 2, kind, 7, dir);
        CHECK(dir.variation_violation(wd) == 0.0);
        const ScalarGridFunction wn = make_perturbation(g, 2, kind, 7, neu);
        CHECK(neu.variation_violation(wn) <= 1e-14);
        // Reproducible: same seed, same field.
        const ScalarGridFunction again = make_perturbation(g, 2, kind, 7, dir);
        CHECK(std::equal(wd.values().begin(), wd.values().end(), again.values().begin()));
    }

    // The log spike is the sup-vs-BMO separator: gradient sup norm much
    // larger than its BMO norm, and increasingly so under refinement.
    double prev_ratio = 0.0;
    for (int n : {17, 33, 65}) {
        const Grid gf = unit_square(n);
        const BoundaryCondition dirf =
            BoundaryCondition::dirichlet(ScalarGridFunction::zeros(gf, 1));
        const ScalarGridFunction spike =
            make_perturbation(gf, 1, PerturbationKind::log_spike, 3, dirf);
        const TensorField gs = gradient(spike);
        const double ratio = linf_norm(gs) / bmo_norm_value(gs);
        CHECK(ratio > prev_ratio);
        prev_ratio = ratio;
    }
    CHECK(prev_ratio > 2.0);
}

TEST_CASE("remark q-variant bound") {
    const Grid g = unit_square(10);
    const Integrand quad = Integrand::quadratic(2, 2, {}, 2);
    const double a[] = {1.0, 0.0, 0.0, 1.0};
    const double b[] = {0.0, 0.0};
    const ScalarGridFunction data = affine_state(g, a, b);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    const Equilibrium eq = solve_el(quad, bc, data, 1e-11, 60000);
    REQUIRE(eq.converged);

    const auto family = calibration_family(g, 2, 9);
    const double j = calibrate_j2(family, 2.0, 3.0) * 1.2;
    const StressReport rep = minimizer_stress_test(quad, eq, bc, 0.4, kAllKinds, 24, 13, j);

    const QVariantReport qrep = remark_q_variant(rep, 3.0, j);
    CHECK(qrep.failures == 0);
    CHECK(qrep.jhat == doctest::Approx(std::pow(j, -3.0)));
    for (const QVariantRow& row : qrep.rows) {
        CHECK(row.ok);
        CHECK(row.margin_q >= 0.0);
    }

    CHECK_THROWS_AS(remark_q_variant(rep, 2.0, j), std::domain_error);

    // Reports built without the retained gradients cannot be augmented.
    const StressReport bare =
        minimizer_stress_test(quad, eq, bc, 0.4, kAllKinds, 4, 13, j, nullptr, false);
    CHECK_THROWS_AS(remark_q_variant(bare, 3.0, j), std::domain_error);

    // Tiny perturbations drive both sides to zero together: margins shrink
    // toward zero from above. Verified by scaling comparison on the samples.
    double min_margin = 1e300;
    for (const QVariantRow& row : qrep.rows) min_margin = std::min(min_margin, row.margin_q);
    CHECK(min_margin >= 0.0);
}

TEST_CASE("loads shift the equilibrium but keep the adjoint identity") {
    const Grid g = unit_square(6);
    const Integrand quad = Integrand::quadratic(1, 2, {}, 2);
    const ScalarGridFunction data = ScalarGridFunction::zeros(g, 1);
    const BoundaryCondition bc = BoundaryCondition::dirichlet(data);
    Loads loads;
    loads.body = {2.0};

    const Equilibrium eq = solve_el(quad, bc, data, 1e-10, 40000, &loads);
    CHECK(eq.converged);
    // A nonzero body load pulls the state away from zero.
    CHECK(linf_norm(gradient(eq.u_e)) > 1e-3);

    const ScalarGridFunction w = make_perturbation(g, 1, PerturbationKind::bump, 21, bc);
    const ScalarGridFunction res = el_residual_field(quad, eq.u_e, bc, &loads);
    double pairing = 0.0;
    for (std::size_t i = 0; i < w.values().size(); ++i)
        pairing += res.values()[i] * w.values()[i];
    pairing *= g.cell_volume();
    CHECK(std::abs(first_variation(quad, eq.u_e, w, bc, &loads) - pairing) <
          1e-12 * (1.0 + std::abs(pairing)));
}
