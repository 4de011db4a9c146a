#pragma once

#include <vector>

#include "bmolab/grid.hpp"
#include "bmolab/integrand.hpp"

namespace bmolab {

/// Gauss-Legendre nodes and weights on [0, 1]; exact for polynomials of
/// degree <= 2*nodes - 1.
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendre gauss_legendre(int nodes);

/// Expansion terms (1/j!) * integral of D^j W(F)[H,...,H] for j = 0..k-1
/// (the j = 0 term is the integral of W(F)).
std::vector<double> expansion_terms(const Integrand& w, const TensorField& f,
                                    const TensorField& h);

/// Integral over the grid of the exact Taylor remainder
///   R(F;H) = int_0^1 (1-t)^(k-1)/(k-1)! D^k W(F+tH)[H,...,H] dt,
/// with Gauss-Legendre quadrature in t (exact for the polynomial built-ins
/// once 2*nodes - 1 covers the t-degree).
double remainder_quadrature(const Integrand& w, const TensorField& f, const TensorField& h,
                            int nodes);

/// Same quadrature with a per-node certificate: at every cell and node the
/// absolute t-integrand must stay below
///   (c_k/(k-1)!) * (|H|^k (1 + c_r |F|_inf^r) + c_r |H|^(k+r)).
struct RemainderResult {
    double value = 0.0;
    int nodes = 0;
    long long pointwise_violations = 0;
    double max_pointwise_excess = 0.0; // max of |integrand| - bound (<= 0 when clean)
};
RemainderResult remainder_quadrature_checked(const Integrand& w, const TensorField& f,
                                             const TensorField& h, int nodes);

/// Remainder-bound constants from the growth hypothesis:
///   c_r = max{1, 2^(r-1)}
///   C1  = c_k (1 + c_r |F|_inf^r) / (k-1)!
///   C2  = c_k c_r / (k-1)!
struct BoundConstants {
    double c_r = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
};
BoundConstants bound_constants(const Integrand& w, const TensorField& f);

/// Full record of one expansion-inequality experiment.
struct TaylorReport {
    double lhs = 0.0;                    // integral of W(G)
    std::vector<double> expansion_terms; // j = 0..k-1
    double remainder_quadrature = 0.0;
    double identity_gap = 0.0;           // |lhs - sum(terms) - remainder|
    double M = 0.0;                      // BMO-ball radius
    double h_bmo = 0.0;                  // ||H||_BMO
    double h_k = 0.0;                    // integral |H|^k
    double h_k_plus_r = 0.0;             // integral |H|^(k+r)
    double c_r = 0.0, C1 = 0.0, C2 = 0.0;
    double j2 = 0.0;                     // calibrated constant used
    double c_bound = 0.0;                // C1 + C2 J2^(k+r) h_bmo^r
    double inequality_margin = 0.0;      // lhs - (sum(terms) - c_bound*h_k)
    // Diagnostics: the remainder-bound chain, link by link.
    long long pointwise_violations = 0;
    double max_pointwise_excess = 0.0;
    double integrated_bound_margin = 0.0; // C1 h_k + C2 h_{k+r} - |remainder|
    bool integrated_bound_ok = false;
    double full_bound_margin = 0.0;       // c_bound h_k - |remainder|
    bool full_bound_ok = false;
    double j2_field_ratio = 0.0;          // interpolation ratio of H at (k, k+r)
    bool j2_valid_for_field = false;      // ratio <= j2 (trivially true for H = 0)
    int nodes = 0;
};

/// End-to-end check of the expansion inequality for G against base state F
/// inside the BMO ball of radius M.  J2 is the calibrated interpolation
/// constant for (p, q) = (k, k+r); it is an explicit input so reports are
/// reproducible.  Throws std::domain_error when ||G - F||_BMO >= M.
TaylorReport verify_taylor_inequality(const Integrand& w, const TensorField& f,
                                      const TensorField& g, double M, double j2,
                                      int nodes = 8);

} // namespace bmolab
