#include "bmolab/integrand.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmolab/grid_ops.hpp"
#include "bmolab/rng.hpp"

namespace bmolab {

double WeightFn::value(std::span<const double> x, int dim) const {
    if (amp == 0.0) return base;
    double prod = 1.0;
    for (int i = 0; i < dim; ++i) prod *= std::cos(freq * x[i]);
    return base + amp * prod;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double dot_mu(std::span<const double> mu, std::span<const double> a,
              std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += mu[i] * a[i] * b[i];
    return s;
}

struct GrowthDefaults {
    double r;
    double c_k;
};

GrowthDefaults default_growth(IntegrandFamily family, int m, int k, double mu_max) {
    switch (family) {
    case IntegrandFamily::quadratic:
        return {1.0, k == 2 ? mu_max : 1.0};
    case IntegrandFamily::double_well:
        if (k == 2) return {2.0, 12.0};
        return {1.0, 24.0}; // k = 3 or 4
    case IntegrandFamily::p_growth:
        if (m == 2) return {1.0, k == 2 ? 2.0 : 1.0};
        if (m == 4) {
            if (k == 2) return {2.0, 12.0};
            return {1.0, 24.0};
        }
        // m == 6
        if (k == 2) return {4.0, 60.0};
        if (k == 3) return {3.0, 192.0};
        return {2.0, 360.0};
    }
    return {1.0, 1.0};
}

} // namespace

Integrand::Integrand(IntegrandFamily family, int rows, int cols, int k, WeightFn weight)
    : family_(family), rows_(rows), cols_(cols), k_(k), weight_(weight) {
    if (rows_ < 1 || cols_ < 1 || cols_ > kMaxDim)
        throw std::invalid_argument("Integrand: bad matrix dimensions");
    if (k_ < 2) throw std::invalid_argument("Integrand: k must be >= 2");
    if (family_ != IntegrandFamily::quadratic && k_ > 4)
        throw std::invalid_argument("Integrand: closed-form derivatives stop at k = 4 for " +
                                    family_name());
    if (!(weight_.min_value() > 0.0))
        throw std::invalid_argument("Integrand: weight must stay positive (base - |amp| > 0)");
}

Integrand Integrand::quadratic(int rows, int cols, std::vector<double> mu, int k,
                               WeightFn weight) {
    Integrand w(IntegrandFamily::quadratic, rows, cols, k, weight);
    if (mu.empty()) mu.assign(static_cast<std::size_t>(rows) * cols, 1.0);
    if (static_cast<int>(mu.size()) != rows * cols)
        throw std::invalid_argument("Integrand: mu must have rows*cols entries");
    for (double m : mu)
        if (!(m > 0.0)) throw std::invalid_argument("Integrand: mu entries must be positive");
    w.mu_ = std::move(mu);
    const GrowthDefaults g = default_growth(w.family_, 0, k, w.mu_max());
    w.r_ = g.r;
    w.ck_ = g.c_k * weight.max_value();
    return w;
}

Integrand Integrand::double_well(int rows, int cols, int k, WeightFn weight) {
    Integrand w(IntegrandFamily::double_well, rows, cols, k, weight);
    const GrowthDefaults g = default_growth(w.family_, 0, k, 1.0);
    w.r_ = g.r;
    w.ck_ = g.c_k * weight.max_value();
    return w;
}

Integrand Integrand::p_growth(int rows, int cols, int m, int k, WeightFn weight) {
    if (m < 2 || m > 6 || m % 2 != 0)
        throw std::invalid_argument("Integrand: p_growth supports even m in {2, 4, 6}");
    Integrand w(IntegrandFamily::p_growth, rows, cols, k, weight);
    w.m_ = m;
    const GrowthDefaults g = default_growth(w.family_, m, k, 1.0);
    w.r_ = g.r;
    w.ck_ = g.c_k * weight.max_value();
    return w;
}

Integrand& Integrand::with_growth(double r, double c_k) {
    if (!(r > 0.0) || !(c_k > 0.0))
        throw std::invalid_argument("Integrand: growth constants must be positive");
    r_ = r;
    ck_ = c_k;
    return *this;
}

std::string Integrand::family_name() const {
    switch (family_) {
    case IntegrandFamily::quadratic: return "quadratic";
    case IntegrandFamily::double_well: return "double_well";
    case IntegrandFamily::p_growth: return "p_growth";
    }
    return "?";
}

double Integrand::omega(std::span<const double> x) const {
    return weight_.value(x, cols_);
}

double Integrand::mu_max() const {
    return *std::max_element(mu_.begin(), mu_.end());
}

void Integrand::f_derivs(double s, std::array<double, 5>& out) const {
    if (family_ == IntegrandFamily::double_well) {
        out = {(s - 1.0) * (s - 1.0), 2.0 * (s - 1.0), 2.0, 0.0, 0.0};
        return;
    }
    // p_growth: f(s) = (1+s)^(m/2)
    const double c = 0.5 * m_;
    double coeff = 1.0;
    for (int i = 0; i <= 4; ++i) {
        const double e = c - i;
        out[static_cast<std::size_t>(i)] = coeff == 0.0 ? 0.0 : coeff * std::pow(1.0 + s, e);
        coeff *= e;
    }
}

double Integrand::eval(int j, std::span<const double> x, std::span<const double> K,
                       std::span<const std::span<const double>> dirs) const {
    if (j < 0 || j > k_)
        throw std::domain_error("Integrand::eval: derivative order " + std::to_string(j) +
                                " exceeds k = " + std::to_string(k_));
    if (static_cast<int>(dirs.size()) != j)
        throw std::domain_error("Integrand::eval: need exactly j direction matrices");
    const double w = omega(x);

    if (family_ == IntegrandFamily::quadratic) {
        switch (j) {
        case 0: return w * 0.5 * dot_mu(mu_, K, K);
        case 1: return w * dot_mu(mu_, K, dirs[0]);
        case 2: return w * dot_mu(mu_, dirs[0], dirs[1]);
        default: return 0.0;
        }
    }

    std::array<double, 5> f;
    f_derivs(dot(K, K), f);
    switch (j) {
    case 0:
        return w * f[0];
    case 1:
        return w * 2.0 * f[1] * dot(K, dirs[0]);
    case 2: {
        const double p1 = dot(K, dirs[0]), p2 = dot(K, dirs[1]);
        return w * (4.0 * f[2] * p1 * p2 + 2.0 * f[1] * dot(dirs[0], dirs[1]));
    }
    case 3: {
        const double p1 = dot(K, dirs[0]), p2 = dot(K, dirs[1]), p3 = dot(K, dirs[2]);
        const double m12 = dot(dirs[0], dirs[1]), m13 = dot(dirs[0], dirs[2]),
                     m23 = dot(dirs[1], dirs[2]);
        return w * (8.0 * f[3] * p1 * p2 * p3 +
                    4.0 * f[2] * (m12 * p3 + m13 * p2 + m23 * p1));
    }
    case 4: {
        const double p1 = dot(K, dirs[0]), p2 = dot(K, dirs[1]), p3 = dot(K, dirs[2]),
                     p4 = dot(K, dirs[3]);
        const double m12 = dot(dirs[0], dirs[1]), m13 = dot(dirs[0], dirs[2]),
                     m14 = dot(dirs[0], dirs[3]), m23 = dot(dirs[1], dirs[2]),
                     m24 = dot(dirs[1], dirs[3]), m34 = dot(dirs[2], dirs[3]);
        return w * (16.0 * f[4] * p1 * p2 * p3 * p4 +
                    8.0 * f[3] * (m12 * p3 * p4 + m13 * p2 * p4 + m14 * p2 * p3 +
                                  m23 * p1 * p4 + m24 * p1 * p3 + m34 * p1 * p2) +
                    4.0 * f[2] * (m12 * m34 + m13 * m24 + m14 * m23));
    }
    default:
        return 0.0;
    }
}

double Integrand::eval_equal(int j, std::span<const double> x, std::span<const double> K,
                             std::span<const double> H) const {
    if (j < 0 || j > k_)
        throw std::domain_error("Integrand::eval_equal: derivative order exceeds k");
    const SegmentScalars sc = segment_scalars(K, H);
    return eval_equal_from_scalars(j, omega(x), sc, 0.0);
}

Integrand::SegmentScalars Integrand::segment_scalars(std::span<const double> F,
                                                     std::span<const double> H) const {
    SegmentScalars sc;
    if (family_ == IntegrandFamily::quadratic) {
        sc.s0 = dot_mu(mu_, F, F);
        sc.sp = dot_mu(mu_, F, H);
        sc.m = dot_mu(mu_, H, H);
    } else {
        sc.s0 = dot(F, F);
        sc.sp = dot(F, H);
        sc.m = dot(H, H);
    }
    sc.spp = sc.m;
    sc.p0 = sc.sp;
    sc.p1 = sc.m;
    return sc;
}

double Integrand::eval_equal_from_scalars(int j, double w, const SegmentScalars& sc,
                                          double t) const {
    const double s = sc.s0 + 2.0 * sc.sp * t + sc.spp * t * t;
    const double p = sc.p0 + sc.p1 * t;
    const double m = sc.m;

    if (family_ == IntegrandFamily::quadratic) {
        switch (j) {
        case 0: return w * 0.5 * s;
        case 1: return w * p;
        case 2: return w * m;
        default: return 0.0;
        }
    }

    std::array<double, 5> f;
    f_derivs(s, f);
    switch (j) {
    case 0: return w * f[0];
    case 1: return w * 2.0 * f[1] * p;
    case 2: return w * (4.0 * f[2] * p * p + 2.0 * f[1] * m);
    case 3: return w * (8.0 * f[3] * p * p * p + 12.0 * f[2] * p * m);
    case 4:
        return w * (16.0 * f[4] * p * p * p * p + 48.0 * f[3] * p * p * m +
                    12.0 * f[2] * m * m);
    default: return 0.0;
    }
}

void Integrand::dw_matrix(std::span<const double> x, std::span<const double> K,
                          std::span<double> out) const {
    const double w = omega(x);
    if (family_ == IntegrandFamily::quadratic) {
        for (std::size_t e = 0; e < K.size(); ++e) out[e] = w * mu_[e] * K[e];
        return;
    }
    std::array<double, 5> f;
    f_derivs(dot(K, K), f);
    const double c = w * 2.0 * f[1];
    for (std::size_t e = 0; e < K.size(); ++e) out[e] = c * K[e];
}

void Integrand::d2w_apply(std::span<const double> x, std::span<const double> K,
                          std::span<const double> H, std::span<double> out) const {
    const double w = omega(x);
    if (family_ == IntegrandFamily::quadratic) {
        for (std::size_t e = 0; e < K.size(); ++e) out[e] = w * mu_[e] * H[e];
        return;
    }
    std::array<double, 5> f;
    f_derivs(dot(K, K), f);
    const double a = w * 4.0 * f[2] * dot(K, H);
    const double b = w * 2.0 * f[1];
    for (std::size_t e = 0; e < K.size(); ++e) out[e] = a * K[e] + b * H[e];
}

Integrand::GrowthBound Integrand::propagated_bound(int j) const {
    if (j < 0 || j > k_)
        throw std::domain_error("Integrand::propagated_bound: j out of range");
    const double exponent = r_ + k_ - j;
    double c = 1.0;
    switch (family_) {
    case IntegrandFamily::quadratic:
        c = mu_max();
        break;
    case IntegrandFamily::double_well:
        c = std::array<double, 5>{2.0, 8.0, 12.0, 24.0, 24.0}[static_cast<std::size_t>(j)];
        break;
    case IntegrandFamily::p_growth:
        if (m_ == 2)
            c = std::array<double, 5>{2.0, 2.0, 2.0, 1.0, 1.0}[static_cast<std::size_t>(j)];
        else if (m_ == 4)
            c = std::array<double, 5>{2.0, 8.0, 12.0, 24.0, 24.0}[static_cast<std::size_t>(j)];
        else
            c = std::array<double, 5>{4.0, 24.0, 60.0, 192.0, 360.0}[static_cast<std::size_t>(j)];
        break;
    }
    return {c * weight_.max_value(), exponent};
}

// ---------------------------------------------------------------------------

GrowthCheckReport check_growth(const Integrand& w, int sample_count, double radius,
                               std::uint64_t seed, int dir_tuples) {
    if (sample_count < 1)
        throw std::domain_error("check_growth: sample_count must be >= 1");
    GrowthCheckReport report;
    report.c_k = w.growth_c();
    report.r = w.growth_r();
    report.samples = sample_count;

    const int comps = w.comps();
    const int k = w.order();
    Rng rng(seed);
    std::vector<double> K(static_cast<std::size_t>(comps));
    std::vector<std::vector<double>> dir_store(static_cast<std::size_t>(k),
                                               std::vector<double>(comps));
    std::vector<std::span<const double>> dirs(static_cast<std::size_t>(k));
    std::array<double, 3> x{};

    for (int s = 0; s < sample_count; ++s) {
        for (int i = 0; i < w.cols(); ++i) x[static_cast<std::size_t>(i)] = rng.uniform();
        // Direction uniform on the sphere; every 4th sample sits on the shell.
        double nrm2 = 0.0;
        for (double& v : K) {
            v = rng.normal();
            nrm2 += v * v;
        }
        const double shell = (s % 4 == 3)
                                 ? radius
                                 : radius * std::pow(rng.uniform(), 1.0 / comps);
        const double scale = nrm2 > 0.0 ? shell / std::sqrt(nrm2) : 0.0;
        for (double& v : K) v *= scale;
        const double k_norm = frobenius(K);

        double op_norm = 0.0;
        for (int t = 0; t < dir_tuples; ++t) {
            for (int d = 0; d < k; ++d) {
                double dn = 0.0;
                for (double& v : dir_store[static_cast<std::size_t>(d)]) {
                    v = rng.normal();
                    dn += v * v;
                }
                const double inv = dn > 0.0 ? 1.0 / std::sqrt(dn) : 0.0;
                for (double& v : dir_store[static_cast<std::size_t>(d)]) v *= inv;
                dirs[static_cast<std::size_t>(d)] = dir_store[static_cast<std::size_t>(d)];
            }
            op_norm = std::max(op_norm,
                               std::abs(w.eval(k, {x.data(), static_cast<std::size_t>(w.cols())},
                                               K, dirs)));
        }
        const double ratio = op_norm / (1.0 + std::pow(k_norm, w.growth_r()));
        if (ratio > report.max_ratio) {
            report.max_ratio = ratio;
            report.worst_k_norm = k_norm;
        }
    }
    report.pass = report.max_ratio <= report.c_k;
    return report;
}

FdCheckReport fd_derivative_check(const Integrand& w, int j, std::span<const double> x,
                                  std::span<const double> K,
                                  std::span<const std::span<const double>> dirs,
                                  std::span<const double> h_sequence) {
    if (j < 1 || j > w.order())
        throw std::domain_error("fd_derivative_check: need 1 <= j <= k");
    if (static_cast<int>(dirs.size()) != j)
        throw std::domain_error("fd_derivative_check: need exactly j directions");

    FdCheckReport report;
    const double ref = w.eval(j, x, K, dirs);
    const std::span<const double> last = dirs[static_cast<std::size_t>(j - 1)];
    const std::span<const std::span<const double>> lower = dirs.first(static_cast<std::size_t>(j - 1));
    std::vector<double> shifted(K.begin(), K.end());

    for (double h : h_sequence) {
        for (std::size_t e = 0; e < shifted.size(); ++e) shifted[e] = K[e] + h * last[e];
        const double plus = w.eval(j - 1, x, shifted, lower);
        for (std::size_t e = 0; e < shifted.size(); ++e) shifted[e] = K[e] - h * last[e];
        const double minus = w.eval(j - 1, x, shifted, lower);
        const double fd = (plus - minus) / (2.0 * h);
        report.steps.push_back(h);
        report.errors.push_back(std::abs(fd - ref));
    }
    report.max_error = *std::max_element(report.errors.begin(), report.errors.end());

    const double floor = 1e-12 * (1.0 + std::abs(ref));
    report.exact_to_roundoff = report.max_error <= floor;
    double order_sum = 0.0;
    int order_count = 0;
    for (std::size_t i = 1; i < report.errors.size(); ++i) {
        if (report.errors[i - 1] > floor && report.errors[i] > floor &&
            report.steps[i] != report.steps[i - 1]) {
            order_sum += std::log(report.errors[i - 1] / report.errors[i]) /
                         std::log(report.steps[i - 1] / report.steps[i]);
            ++order_count;
        }
    }
    report.observed_order = order_count > 0 ? order_sum / order_count : 0.0;
    return report;
}

} // namespace bmolab
