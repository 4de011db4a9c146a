#include "bmolab/report_json.hpp"

namespace bmolab {

JsonValue json_of(const Grid& grid) {
    JsonValue shape = JsonValue::array();
    JsonValue origin = JsonValue::array();
    for (int i = 0; i < grid.dim(); ++i) {
        shape.push(grid.shape(i));
        origin.push(grid.origin()[static_cast<std::size_t>(i)]);
    }
    return JsonValue::object()
        .set("dim", grid.dim())
        .set("shape", std::move(shape))
        .set("spacing", grid.spacing())
        .set("origin", std::move(origin));
}

JsonValue json_of(const Grid& grid, const Cube& cube) {
    JsonValue origin = JsonValue::array();
    for (int i = 0; i < grid.dim(); ++i) origin.push(cube.origin[i]);
    return JsonValue::object().set("origin", std::move(origin)).set("side", cube.side);
}

JsonValue json_of(const Grid& grid, const NormReport& report) {
    return JsonValue::object()
        .set("seminorm", report.seminorm)
        .set("mean_abs", report.mean_abs)
        .set("bmo_norm", report.bmo_norm)
        .set("argmax_cube", json_of(grid, report.argmax_cube))
        .set("mode", cube_mode_name(report.mode))
        .set("cubes_examined", report.cubes_examined);
}

JsonValue json_of(const InterpolationReport& report) {
    return JsonValue::object()
        .set("p", report.p)
        .set("q", report.q)
        .set("lhs", report.lhs)
        .set("rhs_factor", report.rhs_factor)
        .set("ratio", report.ratio)
        .set("j2_estimate", report.j2_estimate);
}

JsonValue json_of(const CalibrationReport& report) {
    JsonValue members = JsonValue::array();
    for (const CalibrationMember& m : report.members)
        members.push(JsonValue::object().set("name", m.name).set("ratio", m.ratio));
    return JsonValue::object()
        .set("p", report.p)
        .set("q", report.q)
        .set("j1_estimate", report.j1_estimate)
        .set("j2_estimate", report.j2_estimate)
        .set("members", std::move(members));
}

JsonValue json_of(const TaylorReport& report) {
    return JsonValue::object()
        .set("lhs", report.lhs)
        .set("expansion_terms", JsonValue::number_array(report.expansion_terms))
        .set("remainder_quadrature", report.remainder_quadrature)
        .set("identity_gap", report.identity_gap)
        .set("M", report.M)
        .set("h_bmo", report.h_bmo)
        .set("h_k", report.h_k)
        .set("h_k_plus_r", report.h_k_plus_r)
        .set("c_r", report.c_r)
        .set("C1", report.C1)
        .set("C2", report.C2)
        .set("j2", report.j2)
        .set("c_bound", report.c_bound)
        .set("inequality_margin", report.inequality_margin)
        .set("pointwise_violations", static_cast<std::int64_t>(report.pointwise_violations))
        .set("max_pointwise_excess", report.max_pointwise_excess)
        .set("integrated_bound_margin", report.integrated_bound_margin)
        .set("integrated_bound_ok", report.integrated_bound_ok)
        .set("full_bound_margin", report.full_bound_margin)
        .set("full_bound_ok", report.full_bound_ok)
        .set("j2_field_ratio", report.j2_field_ratio)
        .set("j2_valid_for_field", report.j2_valid_for_field)
        .set("nodes", report.nodes);
}

JsonValue json_of(const Equilibrium& eq, bool include_state) {
    JsonValue out = JsonValue::object()
                        .set("energy", eq.energy)
                        .set("el_residual_norm", eq.el_residual_norm)
                        .set("coercivity_4a", eq.coercivity_4a)
                        .set("solver_iterations", eq.solver_iterations)
                        .set("converged", eq.converged);
    if (include_state) {
        out.set("components", eq.u_e.components());
        JsonValue values = JsonValue::array();
        for (double v : eq.u_e.values()) values.push(v);
        out.set("u_e", std::move(values));
    }
    return out;
}

JsonValue json_of(const StressReport& report) {
    JsonValue samples = JsonValue::array();
    for (const StressSample& s : report.samples) {
        samples.push(JsonValue::object()
                         .set("id", s.id)
                         .set("generator", perturbation_name(s.kind))
                         .set("skipped", s.skipped)
                         .set("grad_bmo", s.grad_bmo)
                         .set("grad_l2sq", s.grad_l2sq)
                         .set("grad_l3", s.grad_l3)
                         .set("energy_delta", s.energy_delta)
                         .set("margin", s.margin)
                         .set("ineq47_ok", s.ineq47_ok)
                         .set("j_valid", s.j_valid));
    }
    JsonValue sweep = JsonValue::array();
    for (const SweepTrial& t : report.sweep)
        sweep.push(JsonValue::object().set("delta", t.delta).set("failures", t.failures));
    return JsonValue::object()
        .set("a", report.a)
        .set("coercivity_4a", report.coercivity_4a)
        .set("delta", report.delta)
        .set("j_constant", report.j_constant)
        .set("n_samples", report.n_samples)
        .set("seed", report.seed)
        .set("failures", report.failures)
        .set("skipped", report.skipped)
        .set("certified_delta", report.certified_delta)
        .set("samples", std::move(samples))
        .set("sweep", std::move(sweep));
}

JsonValue json_of(const QVariantReport& report) {
    JsonValue rows = JsonValue::array();
    for (const QVariantRow& r : report.rows) {
        rows.push(JsonValue::object()
                      .set("id", r.id)
                      .set("lq_integral", r.lq_integral)
                      .set("bound", r.bound)
                      .set("margin_q", r.margin_q)
                      .set("j_valid_q", r.j_valid_q)
                      .set("ok", r.ok));
    }
    return JsonValue::object()
        .set("q", report.q)
        .set("j", report.j)
        .set("jhat", report.jhat)
        .set("formula", report.formula)
        .set("failures", report.failures)
        .set("rows", std::move(rows));
}

JsonValue json_of(const GrowthCheckReport& report) {
    return JsonValue::object()
        .set("c_k", report.c_k)
        .set("r", report.r)
        .set("max_ratio", report.max_ratio)
        .set("worst_k_norm", report.worst_k_norm)
        .set("samples", report.samples)
        .set("pass", report.pass);
}

} // namespace bmolab
