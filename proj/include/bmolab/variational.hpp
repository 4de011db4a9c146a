#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bmolab/grid.hpp"
#include "bmolab/integrand.hpp"

namespace bmolab {

enum class BcKind { dirichlet, neumann, mixed };

struct Face {
    int axis = 0;
    bool high = false;
};

/// Splits the box boundary into a Dirichlet part (whole faces) and its
/// complement.  Dirichlet carries sampled data; an empty Dirichlet part
/// switches the admissible set to the mean-zero normalization, which is then
/// enforced on states and variations alike.
class BoundaryCondition {
public:
    static BoundaryCondition dirichlet(ScalarGridFunction data);
    static BoundaryCondition neumann();
    static BoundaryCondition mixed(std::vector<Face> faces, ScalarGridFunction data);

    BcKind kind() const { return kind_; }
    bool has_dirichlet() const { return kind_ != BcKind::neumann; }
    bool dirichlet_face(int axis, bool high) const {
        return faces_[static_cast<std::size_t>(axis)][high ? 1 : 0];
    }
    bool is_dirichlet_cell(const Grid& grid, const Index3& idx) const;
    const std::optional<ScalarGridFunction>& data() const { return data_; }

    /// Projects raw values onto the variation space: zero on Dirichlet cells,
    /// or component means removed when there is no Dirichlet part.
    void project_variation(const Grid& grid, int components, std::span<double> values) const;

    /// Writes the Dirichlet data onto the Dirichlet cells of `values`.
    void enforce_data(const Grid& grid, int components, std::span<double> values) const;

    /// Max constraint violation of a candidate variation (absolute value on
    /// Dirichlet cells, or largest component mean).
    double variation_violation(const ScalarGridFunction& w) const;

private:
    BoundaryCondition() = default;
    BcKind kind_ = BcKind::neumann;
    std::array<std::array<bool, 2>, 3> faces_{};
    std::optional<ScalarGridFunction> data_;
};

/// Optional constant loads subtracted from the energy: a body term b.u over
/// the domain and a surface term s.u over the non-Dirichlet boundary faces.
struct Loads {
    std::vector<double> body;    // length N, or empty
    std::vector<double> surface; // length N, or empty
};

/// u(x) = A x + b sampled at cell centers; A is N x n row-major.
ScalarGridFunction affine_function(const Grid& grid, int components,
                                   std::span<const double> a_matrix,
                                   std::span<const double> b_vector);

/// E(u) = integral of W(x, grad u) minus the optional load terms.
double energy(const Integrand& w, const ScalarGridFunction& u,
              const BoundaryCondition* bc = nullptr, const Loads* loads = nullptr);

/// dE(u)[w] evaluated directly; w must lie in the variation space of bc.
double first_variation(const Integrand& w, const ScalarGridFunction& u,
                       const ScalarGridFunction& var, const BoundaryCondition& bc,
                       const Loads* loads = nullptr);

/// Gradient of the discrete energy with respect to the free degrees of
/// freedom, in L2 density form: first_variation(u, w) equals the L2 inner
/// product of this field with w for every admissible w (exact adjoint).
/// Dirichlet rows are zeroed; without a Dirichlet part the component means
/// are removed.
ScalarGridFunction el_residual_field(const Integrand& w, const ScalarGridFunction& u,
                                     const BoundaryCondition& bc,
                                     const Loads* loads = nullptr);

/// L2 norm of el_residual_field.
double el_residual_norm(const Integrand& w, const ScalarGridFunction& u,
                        const BoundaryCondition& bc, const Loads* loads = nullptr);

struct Equilibrium {
    ScalarGridFunction u_e;
    double energy = 0.0;
    double el_residual_norm = 0.0;
    double coercivity_4a = 0.0; // Rayleigh estimate of min d2E(z,z)/int|grad z|^2
    int solver_iterations = 0;
    bool converged = false;
};

/// Damped gradient descent with backtracking line search on the discrete
/// energy.  init must satisfy the Dirichlet data; non-convergence is reported
/// in the returned status, with the best iterate.
Equilibrium solve_el(const Integrand& w, const BoundaryCondition& bc,
                     const ScalarGridFunction& init, double tol, int max_iter,
                     const Loads* loads = nullptr, int lambda_iters = 400,
                     std::uint64_t lambda_seed = 7);

/// d2E(u)[z1, z2], the symmetric bilinear form of the second variation.
double second_variation(const Integrand& w, const ScalarGridFunction& u,
                        const ScalarGridFunction& z1, const ScalarGridFunction& z2);

/// Smallest generalized Rayleigh quotient d2E(z,z) / int|grad z|^2 over the
/// variation space, by iterative minimization over two-dimensional subspaces
/// span{z, residual}: the quotient sequence is monotone nonincreasing and the
/// seeded start makes the run deterministic.
double second_variation_lambda_min(const Integrand& w, const ScalarGridFunction& u,
                                   const BoundaryCondition& bc, int iters = 400,
                                   std::uint64_t seed = 7);

// ---------------------------------------------------------------------------
// Theorem stress test
// ---------------------------------------------------------------------------

enum class PerturbationKind { bump, oscillation, log_spike, smoothed_noise };
const char* perturbation_name(PerturbationKind kind);

/// Seeded, constraint-respecting perturbation (unnormalized):
///   bump            smooth compactly supported blob
///   oscillation     product of sines at moderate integer frequencies
///   log_spike       radial profile whose gradient magnitude is |log(rho/R)|
///                   (large sup norm at small oscillation)
///   smoothed_noise  white noise after one box-averaging pass
ScalarGridFunction make_perturbation(const Grid& grid, int components,
                                     PerturbationKind kind, std::uint64_t seed,
                                     const BoundaryCondition& bc);

struct StressSample {
    int id = 0;
    PerturbationKind kind = PerturbationKind::bump;
    bool skipped = false;
    double grad_bmo = 0.0;     // ||grad w||_BMO after scaling
    double grad_l2sq = 0.0;    // integral |grad w|^2
    double grad_l3 = 0.0;      // integral |grad w|^3
    double energy_delta = 0.0; // E(u_e + w) - E(u_e)
    double margin = 0.0;       // energy_delta - a * grad_l2sq
    bool ineq47_ok = false;    // J^3 ||grad w||_BMO int|grad w|^2 >= int|grad w|^3
    bool j_valid = false;      // interpolation ratio of grad w at (2,3) <= J
};

struct SweepTrial {
    double delta = 0.0;
    int failures = 0;
};

struct StressReport {
    double a = 0.0;             // coercivity_4a / 4
    double coercivity_4a = 0.0;
    double delta = 0.0;         // radius used for the main batch
    double j_constant = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<StressSample> samples;
    int failures = 0;           // samples with margin < 0
    int skipped = 0;
    double certified_delta = 0.0;
    std::vector<SweepTrial> sweep;
    // Retained gradients for the q-variant augmentation (not serialized).
    std::vector<std::optional<TensorField>> kept_grad;
};

/// For each sample w is rescaled so ||grad w||_BMO = rho*delta with rho drawn
/// in (0,1); the margin uses a = coercivity_4a/4.  The report also carries a
/// bisection sweep (8 steps) for the largest failure-free delta.
StressReport minimizer_stress_test(const Integrand& w, const Equilibrium& eq,
                                   const BoundaryCondition& bc, double delta,
                                   std::span<const PerturbationKind> generators,
                                   int n_samples, std::uint64_t seed, double j_constant,
                                   const Loads* loads = nullptr, bool keep_fields = true,
                                   int sweep_steps = 8);

struct QVariantRow {
    int id = 0;
    double lq_integral = 0.0; // integral |grad w|^q
    double bound = 0.0;       // a * jhat * delta^(2-q) * lq_integral
    double margin_q = 0.0;    // energy_delta - bound
    bool j_valid_q = false;   // interpolation ratio of grad w at (2,q) <= J
    bool ok = false;
};

struct QVariantReport {
    double q = 0.0;
    double j = 0.0;
    double jhat = 0.0; // J^(-q)
    std::string formula = "jhat = J^(-q)";
    std::vector<QVariantRow> rows;
    int failures = 0;
};

/// Higher-exponent variant of the margin check, derived from the
/// interpolation inequality at (p, q) = (2, q); requires q > 2 and a report
/// built with keep_fields = true.
QVariantReport remark_q_variant(const StressReport& report, double q, double j);

} // namespace bmolab
