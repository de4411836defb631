#include "impscat/forward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impscat/errors.hpp"

namespace impscat {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

constexpr cplx kI{0.0, 1.0};

// Coefficients multiplying h_n(k|x|) Y_n^m in the exterior expansion of the ansatz on a sphere.
VectorXcd sphere_exterior_coefficients(const ScatteringSolution& sol)
{
    const int N = sol.band_limit();
    const double k = sol.ctx.k, a = sol.geom.base_radius();
    const SphericalBesselTable t = sph_bessel_table(N, k * a);
    VectorXcd c(harmonic_count(N));
    for (int n = 0; n <= N; ++n) {
        const double s0 = 2.0 * a / (2.0 * n + 1.0);
        const cplx factor = kI * k * a * a * (t.j[n] + kI * sol.eta * k * t.dj[n] * s0 * s0);
        for (int m = -n; m <= n; ++m)
            c[harmonic_index(n, m)] = factor * sol.phi.coeffs[harmonic_index(n, m)];
    }
    return c;
}

std::shared_ptr<const SourceNodes> build_sources(const ScatteringSolution& sol)
{
    const int N = sol.band_limit();
    const int order = std::max(2 * N, N + 16) +
                      static_cast<int>(std::ceil(sol.ctx.k * sol.geom.max_radius()));
    const QuadratureRule rule = gauss_product_rule(order);
    auto nodes = std::make_shared<SourceNodes>();
    nodes->points.reserve(rule.size());
    nodes->weights.reserve(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
        nodes->points.push_back(sol.geom.surface_point(rule.directions[i]));
        nodes->weights.push_back(rule.weights[i] * nodes->points.back().jacobian);
    }
    const MatrixXcd Y = harmonic_synthesis_matrix(N, rule.directions);
    nodes->phi = Y * sol.phi.coeffs;
    nodes->psi = Y * sol.psi;
    return nodes;
}

double tail_energy_ratio(const VectorXcd& coeffs, int N)
{
    const double total = coeffs.squaredNorm();
    if (total == 0.0)
        return 0.0;
    const int first = harmonic_count(std::max(N - 2, -1));
    const double tail = coeffs.segment(first, coeffs.size() - first).squaredNorm();
    return tail / total;
}

} // namespace

void WaveContext::validate() const
{
    if (!(k > 0.0) || !std::isfinite(k))
        throw DomainError("wavenumber k must be positive, got " + std::to_string(k));
    if (std::abs(omega.norm() - 1.0) > 1e-12)
        throw DomainError("incident direction must be a unit vector");
}

ScatteringSolution solve_density(const WaveContext& ctx, const ObstacleGeometry& geom,
                                 const ImpedanceField& lambda, const SolverOptions& options)
{
    ctx.validate();
    lambda.check_admissible();
    const int N = options.band_limit;
    if (N < 1)
        throw DomainError("band limit must be >= 1");

    ScatteringSolution sol;
    sol.ctx = ctx;
    sol.geom = geom;
    sol.lambda = lambda;
    sol.eta = options.eta != 0.0 ? options.eta : default_coupling(ctx.k);
    if (!std::isfinite(sol.eta))
        throw DomainError("coupling parameter eta must be finite");
    sol.ops = options.cache ? options.cache->get(ctx.k, geom, N, options.quadrature)
                            : std::make_shared<const SurfaceOperators>(
                                  surface_operators(ctx.k, geom, N, options.quadrature));
    const SurfaceOperators& ops = *sol.ops;

    const IncidentData inc = rhs_from_incident(ctx.k, ctx.omega, lambda, geom, N);
    sol.truncation_warning = inc.truncation_warning;
    const VectorXcd rhs = -2.0 * inc.g;
    const int count = harmonic_count(N);
    sol.phi.band_limit = N;

    if (ops.diagonal && lambda.is_constant()) {
        const cplx il = kI * lambda.constant_value();
        const VectorXcd s0sq = ops.d_S0.cwiseProduct(ops.d_S0);
        VectorXcd b(count);
        for (int i = 0; i < count; ++i) {
            const cplx d1 = ops.d_Kp[i] + kI * sol.eta * ops.d_TS0sq[i];
            const cplx d2 = options.form == SystemForm::Consistent
                                ? 1.0 + ops.d_S[i] + kI * sol.eta * (ops.d_K[i] + 1.0) * s0sq[i]
                                : ops.d_S[i] + ops.d_K[i];
            b[i] = (1.0 - d1) + il * (1.0 - d2);
        }
        const double bmax = b.cwiseAbs().maxCoeff();
        if (b.cwiseAbs().minCoeff() < 1e-12 * std::max(1.0, bmax))
            throw SingularityError("combined system is numerically singular");
        sol.phi.coeffs = rhs.cwiseQuotient(b);
        const double scale = rhs.norm();
        sol.residual = scale > 0.0 ? (b.cwiseProduct(sol.phi.coeffs) - rhs).norm() / scale : 0.0;
    } else {
        const BoundaryOperatorMatrix mult = assemble_multiplication(lambda, N);
        const MatrixXcd B = MatrixXcd::Identity(count, count) + mult.entries -
                            combined_bracket(ops, mult, sol.eta, options.form);
        const Eigen::PartialPivLU<MatrixXcd> lu(B);
        if (lu.rcond() < 1e-12)
            throw SingularityError("combined system is numerically singular (rcond = " +
                                   std::to_string(lu.rcond()) + ")");
        sol.phi.coeffs = lu.solve(rhs);
        const double scale = rhs.norm();
        sol.residual = scale > 0.0 ? (B * sol.phi.coeffs - rhs).norm() / scale : 0.0;
    }

    sol.psi = ops.apply(SurfaceOperators::Which::S0sq, sol.phi.coeffs);
    sol.tail_ratio = tail_energy_ratio(sol.phi.coeffs, N);
    if (sol.tail_ratio > options.resolution_tol)
        throw ResolutionError("density not resolved at band limit " + std::to_string(N) +
                              ": tail energy ratio " + std::to_string(sol.tail_ratio));
    if (!geom.is_sphere())
        sol.sources = build_sources(sol);
    return sol;
}

cplx eval_scattered(const Vec3& x, const ScatteringSolution& sol, bool* near_boundary)
{
    const double k = sol.ctx.k;
    const int N = sol.band_limit();
    const double r = x.norm();
    if (!sol.geom.in_exterior(x))
        throw DomainError("eval_scattered: point is not in the exterior domain");
    if (near_boundary) {
        const double dist = sol.geom.is_sphere() ? r - sol.geom.base_radius()
                                                 : sol.geom.boundary_distance(x, 48);
        *near_boundary = dist < 2.0 * kPi / (k * N);
    }

    if (sol.geom.is_sphere()) {
        const VectorXcd c = sphere_exterior_coefficients(sol);
        const SphericalBesselTable t = sph_bessel_table(N, k * r);
        std::vector<cplx> Y(harmonic_count(N));
        eval_harmonics(N, x / r, Y);
        cplx u = 0.0;
        for (int n = 0; n <= N; ++n) {
            cplx partial = 0.0;
            for (int m = -n; m <= n; ++m)
                partial += c[harmonic_index(n, m)] * Y[harmonic_index(n, m)];
            u += partial * t.h(n);
        }
        return u;
    }

    const SourceNodes& src = *sol.sources;
    cplx u = 0.0;
    for (std::size_t i = 0; i < src.points.size(); ++i) {
        const Vec3 R = x - src.points[i].x;
        const double d = R.norm();
        const cplx e = std::exp(kI * (k * d)) / (4.0 * kPi * d);
        // ∂_{ν(y)} Φ(x, y) = Φ (ik - 1/d) (y - x)·ν / d
        const cplx dn = e * (kI * k - 1.0 / d) * (-R.dot(src.points[i].normal)) / d;
        const auto idx = static_cast<Eigen::Index>(i);
        u += src.weights[i] * (e * src.phi[idx] + kI * sol.eta * dn * src.psi[idx]);
    }
    return u;
}

double FarField::l2_norm() const
{
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        s += rule.weights[i] * std::norm(values[i]);
    return std::sqrt(s);
}

double l2_distance(const FarField& f, const FarField& g)
{
    if (f.values.size() != g.values.size() || f.rule.order != g.rule.order)
        throw DomainError("l2_distance: far fields sampled on different rules");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        s += f.rule.weights[i] * std::norm(f.values[i] - g.values[i]);
    return std::sqrt(s);
}

cplx farfield_at(const ScatteringSolution& sol, const Vec3& dir)
{
    const double k = sol.ctx.k;
    const int N = sol.band_limit();
    const Vec3 d = dir.normalized();
    if (sol.geom.is_sphere()) {
        const double a = sol.geom.base_radius();
        const SphericalBesselTable t = sph_bessel_table(N, k * a);
        std::vector<cplx> Y(harmonic_count(N));
        eval_harmonics(N, d, Y);
        cplx u = 0.0;
        cplx phase = 1.0; // (-i)^n
        for (int n = 0; n <= N; ++n) {
            const double s0 = 2.0 * a / (2.0 * n + 1.0);
            const cplx factor = a * a * phase * (t.j[n] + kI * sol.eta * k * t.dj[n] * s0 * s0);
            cplx partial = 0.0;
            for (int m = -n; m <= n; ++m)
                partial += sol.phi.coeffs[harmonic_index(n, m)] * Y[harmonic_index(n, m)];
            u += factor * partial;
            phase *= -kI;
        }
        return u;
    }
    const SourceNodes& src = *sol.sources;
    cplx u = 0.0;
    for (std::size_t i = 0; i < src.points.size(); ++i) {
        const auto& p = src.points[i];
        const auto idx = static_cast<Eigen::Index>(i);
        const cplx e = std::exp(-kI * (k * d.dot(p.x)));
        u += src.weights[i] * e * (src.phi[idx] + sol.eta * k * d.dot(p.normal) * src.psi[idx]);
    }
    return u / (4.0 * kPi);
}

FarField farfield(const ScatteringSolution& sol, int rule_order)
{
    if (rule_order < 0)
        rule_order = sol.geom.is_sphere() ? sol.band_limit() : sol.band_limit() + 8;
    FarField ff;
    ff.rule = gauss_product_rule(rule_order);
    ff.values.resize(ff.rule.size());
    if (sol.geom.is_sphere()) {
        const int N = sol.band_limit();
        const double k = sol.ctx.k, a = sol.geom.base_radius();
        const SphericalBesselTable t = sph_bessel_table(N, k * a);
        VectorXcd c(harmonic_count(N));
        cplx phase = 1.0;
        for (int n = 0; n <= N; ++n) {
            const double s0 = 2.0 * a / (2.0 * n + 1.0);
            const cplx factor = a * a * phase * (t.j[n] + kI * sol.eta * k * t.dj[n] * s0 * s0);
            for (int m = -n; m <= n; ++m)
                c[harmonic_index(n, m)] = factor * sol.phi.coeffs[harmonic_index(n, m)];
            phase *= -kI;
        }
        const VectorXcd v = synthesize(N, c, ff.rule.directions);
        for (std::size_t i = 0; i < ff.values.size(); ++i)
            ff.values[i] = v[static_cast<Eigen::Index>(i)];
    } else {
        for (std::size_t i = 0; i < ff.values.size(); ++i)
            ff.values[i] = farfield_at(sol, ff.rule.directions[i]);
    }
    return ff;
}

std::vector<cplx> mie_coefficients(double k, double a, double lambda0, double tol)
{
    if (!(k > 0.0) || !(a > 0.0))
        throw DomainError("mie_coefficients: k and a must be positive");
    if (!(lambda0 >= 0.0) || !std::isfinite(lambda0))
        throw DomainError("mie_coefficients: impedance must be nonnegative");
    const double x = k * a;
    const int nmax = static_cast<int>(std::ceil(x + 4.0 * std::cbrt(x) + 24.0));
    const SphericalBesselTable t = sph_bessel_table(nmax, x);
    std::vector<cplx> c;
    double peak = 0.0;
    int small_run = 0;
    for (int n = 0; n <= nmax; ++n) {
        const cplx num = k * t.dj[n] + kI * lambda0 * t.j[n];
        const cplx den = k * t.dh(n) + kI * lambda0 * t.h(n);
        const cplx cn = -num / den;
        c.push_back(cn);
        const double size = (2.0 * n + 1.0) * std::abs(cn);
        peak = std::max(peak, size);
        small_run = (n > x && size < tol * peak) ? small_run + 1 : 0;
        if (small_run >= 2)
            break;
    }
    return c;
}

cplx mie_farfield_at(const WaveContext& ctx, double a, double lambda0, const Vec3& dir)
{
    const std::vector<cplx> c = mie_coefficients(ctx.k, a, lambda0);
    const int nmax = static_cast<int>(c.size()) - 1;
    const LegendreTable P = legendre_table(nmax, std::clamp(dir.normalized().dot(ctx.omega), -1.0, 1.0));
    cplx u = 0.0;
    for (int n = 0; n <= nmax; ++n)
        u += (2.0 * n + 1.0) * c[n] * P.p[n];
    return -kI / ctx.k * u;
}

FarField mie_farfield(const WaveContext& ctx, double a, double lambda0, int rule_order)
{
    ctx.validate();
    const std::vector<cplx> c = mie_coefficients(ctx.k, a, lambda0);
    const int nmax = static_cast<int>(c.size()) - 1;
    FarField ff;
    ff.rule = gauss_product_rule(rule_order);
    ff.values.resize(ff.rule.size());
    for (std::size_t i = 0; i < ff.values.size(); ++i) {
        const double t = std::clamp(ff.rule.directions[i].dot(ctx.omega), -1.0, 1.0);
        const LegendreTable P = legendre_table(nmax, t);
        cplx u = 0.0;
        for (int n = 0; n <= nmax; ++n)
            u += (2.0 * n + 1.0) * c[n] * P.p[n];
        ff.values[i] = -kI / ctx.k * u;
    }
    return ff;
}

BoundaryTraces boundary_traces(const ScatteringSolution& sol, int rule_order)
{
    using W = SurfaceOperators::Which;
    const int N = sol.band_limit();
    if (rule_order < 0)
        rule_order = N + 24;
    const SurfaceOperators& ops = *sol.ops;
    const VectorXcd& phi = sol.phi.coeffs;
    const VectorXcd us_c =
        0.5 * (ops.apply(W::S, phi) + kI * sol.eta * (ops.apply(W::K, sol.psi) + sol.psi));
    const VectorXcd dnus_c =
        0.5 * (ops.apply(W::KPrime, phi) - phi + kI * sol.eta * ops.apply(W::T_S0sq, phi));

    BoundaryTraces tr;
    tr.rule = gauss_product_rule(rule_order);
    tr.us = synthesize(N, us_c, tr.rule.directions);
    tr.dnus = synthesize(N, dnus_c, tr.rule.directions);
    const auto n = static_cast<Eigen::Index>(tr.rule.size());
    tr.u.resize(n);
    tr.dnu.resize(n);
    tr.points.reserve(tr.rule.size());
    const double k = sol.ctx.k;
    for (Eigen::Index i = 0; i < n; ++i) {
        tr.points.push_back(sol.geom.surface_point(tr.rule.directions[static_cast<std::size_t>(i)]));
        const auto& p = tr.points.back();
        const cplx ui = std::exp(kI * (k * p.x.dot(sol.ctx.omega)));
        tr.u[i] = ui + tr.us[i];
        tr.dnu[i] = kI * k * sol.ctx.omega.dot(p.normal) * ui + tr.dnus[i];
    }
    return tr;
}

EnergyBalance energy_identity(const ObstacleGeometry& geom, const ImpedanceField& lambda,
                              const QuadratureRule& rule, const VectorXcd& u, const VectorXcd& dnu)
{
    if (u.size() != static_cast<Eigen::Index>(rule.size()) || dnu.size() != u.size())
        throw DomainError("energy_identity: sample count does not match the rule");
    EnergyBalance e;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const auto p = geom.surface_point(rule.directions[i]);
        const double ds = rule.weights[i] * p.jacobian;
        const auto idx = static_cast<Eigen::Index>(i);
        e.flux += ds * std::imag(u[idx] * std::conj(-dnu[idx]));
        e.absorption += ds * lambda.value(p.dir) * std::norm(u[idx]);
    }
    e.residual = e.flux + e.absorption;
    return e;
}

EnergyBalance energy_identity(const ScatteringSolution& sol, int rule_order)
{
    const BoundaryTraces tr = boundary_traces(sol, rule_order);
    return energy_identity(sol.geom, sol.lambda, tr.rule, tr.u, tr.dnu);
}

UniformBoundReport uniform_bound_check(double M, const std::vector<ImpedanceField>& samples,
                                       const WaveContext& ctx, const ObstacleGeometry& geom,
                                       const SolverOptions& options)
{
    UniformBoundReport report;
    if (samples.empty())
        return report;
    const QuadratureRule rule = gauss_product_rule(std::max(16, options.band_limit));
    const double base = geom.max_radius();
    const double shells[] = {1.5 * base, 2.0 * base, 4.0 * base, 8.0 * base};
    for (const ImpedanceField& lambda : samples) {
        lambda.check_admissible(M);
        const ScatteringSolution sol = solve_density(ctx, geom, lambda, options);
        double sup_u = 0.0, sup_us = 0.0, min_u = std::numeric_limits<double>::infinity();
        for (double r : shells)
            for (const Vec3& d : rule.directions) {
                const Vec3 x = r * d;
                const cplx us = eval_scattered(x, sol);
                const cplx u = std::exp(kI * (ctx.k * x.dot(ctx.omega))) + us;
                sup_u = std::max(sup_u, std::abs(u));
                sup_us = std::max(sup_us, std::abs(us));
                min_u = std::min(min_u, std::abs(u));
            }
        report.sup_total.push_back(sup_u);
        report.sup_scattered.push_back(sup_us);
        report.min_total.push_back(min_u);
    }
    report.max_sup = *std::max_element(report.sup_total.begin(), report.sup_total.end());
    report.min_sup = *std::min_element(report.sup_total.begin(), report.sup_total.end());
    report.spread = report.max_sup / report.min_sup;
    return report;
}

} // namespace impscat
