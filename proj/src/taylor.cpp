#include "bmolab/taylor.hpp"

#include <cmath>
#include <stdexcept>

#include "bmolab/bmo.hpp"
#include "bmolab/grid_ops.hpp"
#include "bmolab/parallel.hpp"

namespace bmolab {

GaussLegendre gauss_legendre(int nodes) {
    if (nodes < 2) throw std::domain_error("gauss_legendre: need at least 2 nodes");
    GaussLegendre gl;
    gl.nodes.resize(static_cast<std::size_t>(nodes));
    gl.weights.resize(static_cast<std::size_t>(nodes));
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (nodes + 1) / 2; ++i) {
        // Newton iteration on P_n over [-1, 1], then map to [0, 1].
        double x = std::cos(pi * (i + 0.75) / (nodes + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int n = 2; n <= nodes; ++n) {
                const double p2 = ((2.0 * n - 1.0) * x * p1 - (n - 1.0) * p0) / n;
                p0 = p1;
                p1 = p2;
            }
            dp = nodes * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
        gl.weights[static_cast<std::size_t>(i)] = 0.5 * w;
        gl.nodes[static_cast<std::size_t>(nodes - 1 - i)] = 0.5 * (1.0 + x);
        gl.weights[static_cast<std::size_t>(nodes - 1 - i)] = 0.5 * w;
    }
    return gl;
}

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

void require_compatible(const TensorField& f, const TensorField& h) {
    if (!(f.grid() == h.grid()) || f.rows() != h.rows())
        throw std::domain_error("taylor: fields must share grid and shape");
}

} // namespace

std::vector<double> expansion_terms(const Integrand& w, const TensorField& f,
                                    const TensorField& h) {
    require_compatible(f, h);
    if (w.rows() != f.rows() || w.cols() != f.grid().dim())
        throw std::domain_error("taylor: integrand dimensions do not match the fields");
    const Grid& grid = f.grid();
    const int k = w.order();
    const double vol = grid.cell_volume();
    std::vector<double> terms(static_cast<std::size_t>(k), 0.0);
    for (int j = 0; j < k; ++j) {
        const double sum = block_sum(grid.cell_count(), [&](std::int64_t cell) {
            const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
            return w.eval_equal(j, {x.data(), static_cast<std::size_t>(grid.dim())},
                                f.cell_values(cell), h.cell_values(cell));
        });
        terms[static_cast<std::size_t>(j)] = sum * vol / factorial(j);
    }
    return terms;
}

namespace {

RemainderResult remainder_impl(const Integrand& w, const TensorField& f,
                               const TensorField& h, int nodes, bool check,
                               double c_r, double f_inf) {
    require_compatible(f, h);
    if (nodes < 2) throw std::domain_error("remainder_quadrature: nodes must be >= 2");
    const Grid& grid = f.grid();
    const int k = w.order();
    const double inv_fact = 1.0 / factorial(k - 1);
    const GaussLegendre gl = gauss_legendre(nodes);
    const double c_k = w.growth_c();
    const double r = w.growth_r();
    const double f_inf_r = check ? std::pow(f_inf, r) : 0.0;

    RemainderResult result;
    result.nodes = nodes;

    std::vector<long long> violations(static_cast<std::size_t>(
        (grid.cell_count() + kSumBlock - 1) / kSumBlock), 0);
    std::vector<double> excess(violations.size(), -1e300);

    const double sum = block_sum(grid.cell_count(), [&](std::int64_t cell) {
        const std::array<double, 3> xc = grid.cell_center(grid.multi_index(cell));
        const std::span<const double> x{xc.data(), static_cast<std::size_t>(grid.dim())};
        const Integrand::SegmentScalars sc =
            w.segment_scalars(f.cell_values(cell), h.cell_values(cell));
        const double omega = w.weight().value(x, grid.dim());
        double cell_sum = 0.0;
        double bound = 0.0;
        if (check) {
            const double h_norm = frobenius(h.cell_values(cell));
            bound = c_k * (std::pow(h_norm, k) * (1.0 + c_r * f_inf_r) +
                           c_r * std::pow(h_norm, k + r));
        }
        for (int q = 0; q < nodes; ++q) {
            const double t = gl.nodes[static_cast<std::size_t>(q)];
            const double dk = w.eval_equal_from_scalars(k, omega, sc, t);
            const double kernel = std::pow(1.0 - t, k - 1) * dk;
            cell_sum += gl.weights[static_cast<std::size_t>(q)] * kernel;
            // Each fixed-size block is owned by one thread, so the per-block
            // violation tallies need no synchronization.
            if (check && std::abs(kernel) > bound) {
                const std::size_t b = static_cast<std::size_t>(cell / kSumBlock);
                ++violations[b];
                const double e = std::abs(kernel) - bound;
                if (e > excess[b]) excess[b] = e;
            }
        }
        return cell_sum * inv_fact;
    });
    result.value = sum * grid.cell_volume();
    if (check) {
        for (std::size_t b = 0; b < violations.size(); ++b) {
            result.pointwise_violations += violations[b];
            result.max_pointwise_excess = std::max(result.max_pointwise_excess, excess[b]);
        }
        if (result.pointwise_violations == 0) result.max_pointwise_excess = 0.0;
    }
    return result;
}

} // namespace

double remainder_quadrature(const Integrand& w, const TensorField& f, const TensorField& h,
                            int nodes) {
    return remainder_impl(w, f, h, nodes, false, 0.0, 0.0).value;
}

RemainderResult remainder_quadrature_checked(const Integrand& w, const TensorField& f,
                                             const TensorField& h, int nodes) {
    const BoundConstants bc = bound_constants(w, f);
    return remainder_impl(w, f, h, nodes, true, bc.c_r, linf_norm(f));
}

BoundConstants bound_constants(const Integrand& w, const TensorField& f) {
    BoundConstants bc;
    const double r = w.growth_r();
    const double c_k = w.growth_c();
    const int k = w.order();
    bc.c_r = std::max(1.0, std::pow(2.0, r - 1.0));
    bc.C1 = c_k * (1.0 + bc.c_r * std::pow(linf_norm(f), r)) / factorial(k - 1);
    bc.C2 = c_k * bc.c_r / factorial(k - 1);
    return bc;
}

TaylorReport verify_taylor_inequality(const Integrand& w, const TensorField& f,
                                      const TensorField& g, double M, double j2,
                                      int nodes) {
    require_compatible(f, g);
    if (!(M > 0.0)) throw std::domain_error("verify_taylor_inequality: M must be positive");
    if (!(j2 > 0.0)) throw std::domain_error("verify_taylor_inequality: J2 must be positive");

    const Grid& grid = f.grid();
    const int k = w.order();
    const double r = w.growth_r();

    // H = G - F.
    std::vector<double> hv(g.values().begin(), g.values().end());
    for (std::size_t i = 0; i < hv.size(); ++i) hv[i] -= f.values()[i];
    const TensorField h(grid, f.rows(), std::move(hv));

    TaylorReport rep;
    rep.M = M;
    rep.nodes = nodes;
    rep.j2 = j2;
    rep.h_bmo = bmo_norm_value(h);
    if (!(rep.h_bmo < M))
        throw std::domain_error("verify_taylor_inequality: ||G - F||_BMO = " +
                                std::to_string(rep.h_bmo) + " is not below M = " +
                                std::to_string(M));

    rep.lhs = block_sum(grid.cell_count(), [&](std::int64_t cell) {
                  const std::array<double, 3> x = grid.cell_center(grid.multi_index(cell));
                  return w.eval_equal(0, {x.data(), static_cast<std::size_t>(grid.dim())},
                                      g.cell_values(cell), g.cell_values(cell));
              }) *
              grid.cell_volume();
    rep.expansion_terms = expansion_terms(w, f, h);

    const RemainderResult rq = remainder_quadrature_checked(w, f, h, nodes);
    rep.remainder_quadrature = rq.value;
    rep.pointwise_violations = rq.pointwise_violations;
    rep.max_pointwise_excess = rq.max_pointwise_excess;

    double term_sum = 0.0;
    for (double t : rep.expansion_terms) term_sum += t;
    rep.identity_gap = std::abs(rep.lhs - term_sum - rep.remainder_quadrature);

    rep.h_k = lp_integral(h, k);
    rep.h_k_plus_r = lp_integral(h, k + r);

    const BoundConstants bc = bound_constants(w, f);
    rep.c_r = bc.c_r;
    rep.C1 = bc.C1;
    rep.C2 = bc.C2;
    rep.c_bound = bc.C1 + bc.C2 * std::pow(j2, k + r) * std::pow(rep.h_bmo, r);
    rep.inequality_margin = rep.lhs - (term_sum - rep.c_bound * rep.h_k);

    rep.integrated_bound_margin =
        bc.C1 * rep.h_k + bc.C2 * rep.h_k_plus_r - std::abs(rep.remainder_quadrature);
    rep.integrated_bound_ok = rep.integrated_bound_margin >= 0.0;
    rep.full_bound_margin = rep.c_bound * rep.h_k - std::abs(rep.remainder_quadrature);
    rep.full_bound_ok = rep.full_bound_margin >= 0.0;

    if (rep.h_bmo == 0.0) {
        // G = F: every interpolation quantity degenerates to zero.
        rep.j2_field_ratio = 0.0;
        rep.j2_valid_for_field = true;
    } else {
        rep.j2_field_ratio = interpolation_ratio(h, k, k + r).ratio;
        rep.j2_valid_for_field = rep.j2_field_ratio <= j2 * (1.0 + 1e-12);
    }
    return rep;
}

} // namespace bmolab
