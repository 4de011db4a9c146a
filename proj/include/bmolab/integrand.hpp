#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bmolab/grid.hpp"

namespace bmolab {

enum class IntegrandFamily { quadratic, double_well, p_growth };

/// Smooth positive scalar weight omega(x) = base + amp * prod_i cos(freq*x_i),
/// with base - |amp| > 0 so the weight stays bounded away from zero.
struct WeightFn {
    double base = 1.0;
    double amp = 0.0;
    double freq = 1.0;

    bool active() const { return amp != 0.0; }
    double max_value() const { return base + std::abs(amp); }
    double min_value() const { return base - std::abs(amp); }
    double value(std::span<const double> x, int dim) const;
};

/// Stored-program description of W(x, K) with exact derivative tensors.
///
/// Families:
///   quadratic    W = omega(x) * 1/2 sum_e mu_e K_e^2            (any k, D^3 W = 0)
///   double_well  W = omega(x) * (|K|^2 - 1)^2                   (k <= 4)
///   p_growth     W = omega(x) * (1 + |K|^2)^(m/2), even m = 2,4,6 (k <= 4)
///
/// D^j W(x,K) is exposed as a j-multilinear form applied to j direction
/// matrices; matrices are flattened row-major spans of length rows*cols.
class Integrand {
public:
    static Integrand quadratic(int rows, int cols, std::vector<double> mu = {},
                               int k = 2, WeightFn weight = {});
    static Integrand double_well(int rows, int cols, int k = 3, WeightFn weight = {});
    static Integrand p_growth(int rows, int cols, int m = 4, int k = 3,
                              WeightFn weight = {});

    /// Replaces the growth metadata (H3 constants).  Both must be positive.
    Integrand& with_growth(double r, double c_k);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int comps() const { return rows_ * cols_; }
    int order() const { return k_; }          // highest derivative available
    double growth_r() const { return r_; }    // exponent in |D^k W| <= c_k (1+|K|^r)
    double growth_c() const { return ck_; }
    bool x_dependent() const { return weight_.active(); }
    const WeightFn& weight() const { return weight_; }
    IntegrandFamily family() const { return family_; }
    std::string family_name() const;
    const std::vector<double>& mu() const { return mu_; }
    int p_exponent() const { return m_; }

    /// D^j W(x, K)[dirs...]; j = 0..k, dirs.size() == j.
    double eval(int j, std::span<const double> x, std::span<const double> K,
                std::span<const std::span<const double>> dirs) const;

    /// D^j W(x, K)[H, ..., H] with all directions equal.
    double eval_equal(int j, std::span<const double> x, std::span<const double> K,
                      std::span<const double> H) const;

    /// D W(x, K) as the N x n matrix with DW[H] = <out, H>.
    void dw_matrix(std::span<const double> x, std::span<const double> K,
                   std::span<double> out) const;

    /// D^2 W(x, K)[H, .] as the N x n matrix with D^2W[H,Z] = <out, Z>.
    void d2w_apply(std::span<const double> x, std::span<const double> K,
                   std::span<const double> H, std::span<double> out) const;

    /// Family-aware dot products of the segment K(t) = F + tH against H, so
    /// the t-dependence of every derivative reduces to scalar polynomials.
    struct SegmentScalars {
        double s0 = 0, sp = 0, spp = 0; // s(t) = s0 + 2 sp t + spp t^2
        double p0 = 0, p1 = 0;          // P(t) = p0 + p1 t
        double m = 0;                   // <H, H> (mu-weighted for quadratic)
    };
    SegmentScalars segment_scalars(std::span<const double> F,
                                   std::span<const double> H) const;
    double eval_equal_from_scalars(int j, double omega, const SegmentScalars& sc,
                                   double t) const;

    /// Derived growth bound |D^j W| <= c (1 + |K|^e) for j = 0..k
    /// (the propagation of H3 down the derivative ladder).
    struct GrowthBound {
        double c = 0.0;
        double exponent = 0.0;
    };
    GrowthBound propagated_bound(int j) const;

private:
    Integrand(IntegrandFamily family, int rows, int cols, int k, WeightFn weight);

    double omega(std::span<const double> x) const;
    /// f(s), f'(s), ..., f^{(4)}(s) for the scalar profile W = f(|K|^2).
    void f_derivs(double s, std::array<double, 5>& out) const;
    double mu_max() const;

    IntegrandFamily family_;
    int rows_, cols_, k_;
    WeightFn weight_;
    std::vector<double> mu_; // quadratic: per-entry weights, length rows*cols
    int m_ = 4;              // p_growth exponent
    double r_ = 1.0, ck_ = 1.0;
};

struct GrowthCheckReport {
    double c_k = 0.0;
    double r = 0.0;
    double max_ratio = 0.0;     // max over samples of |D^k W| / (1 + |K|^r)
    double worst_k_norm = 0.0;  // |K| at the max
    int samples = 0;
    bool pass = false;          // max_ratio <= c_k
};

/// Samples (x, K) with |K| <= radius (shell points included) and estimates
/// the operator norm of D^k W by maximizing over random unit direction
/// tuples.  The estimate is a lower bound of the true operator norm, so
/// pass = true is a necessary check of H3, never a proof.
GrowthCheckReport check_growth(const Integrand& w, int sample_count, double radius,
                               std::uint64_t seed = 2024, int dir_tuples = 100);

struct FdCheckReport {
    std::vector<double> steps;
    std::vector<double> errors;
    double max_error = 0.0;
    double observed_order = 0.0;
    bool exact_to_roundoff = false;
};

/// Central finite differences of D^{j-1}W along dirs[j-1], compared against
/// D^j W(x,K)[dirs]; second order for smooth W.
FdCheckReport fd_derivative_check(const Integrand& w, int j, std::span<const double> x,
                                  std::span<const double> K,
                                  std::span<const std::span<const double>> dirs,
                                  std::span<const double> h_sequence);

} // namespace bmolab
