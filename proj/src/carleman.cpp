#include "impscat/carleman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "impscat/errors.hpp"
#include "impscat/parallel.hpp"

namespace impscat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Running log Σ exp(l_i).
class LogSum
{
  public:
    void add(double l)
    {
        if (l == -kInf || std::isnan(l))
            return;
        if (l > max_) {
            sum_ = sum_ * std::exp(max_ - l) + 1.0;
            max_ = l;
        } else {
            sum_ += std::exp(l - max_);
        }
    }
    void merge(const LogSum& other)
    {
        if (other.max_ == -kInf)
            return;
        add(other.max_ + std::log(other.sum_));
    }
    double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

  private:
    double max_ = -kInf;
    double sum_ = 0.0;
};

double safe_log(double x) { return x > 0.0 ? std::log(x) : -kInf; }

/// Orthonormal pair spanning the plane orthogonal to the unit vector a.
void orthonormal_frame(const Vec3& a, Vec3& e1, Vec3& e2)
{
    const Vec3 t = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = (t - t.dot(a) * a).normalized();
    e2 = a.cross(e1);
}

Vec3 polar_direction(const Vec3& pole, const Vec3& e1, const Vec3& e2, double theta, double chi)
{
    return std::cos(theta) * pole + std::sin(theta) * (std::cos(chi) * e1 + std::sin(chi) * e2);
}

double sq(const Vec3c& v) { return v.squaredNorm(); }

/// Extra directions hitting the suprema of the individual derivatives of a radial function.
std::vector<Vec3> special_directions()
{
    std::vector<Vec3> out;
    for (int i = 0; i < 3; ++i) {
        out.push_back(Vec3::Unit(i));
        out.push_back(-Vec3::Unit(i));
        for (int j = i + 1; j < 3; ++j)
            for (int si : {-1, 1})
                for (int sj : {-1, 1})
                    out.push_back((si * Vec3::Unit(i) + sj * Vec3::Unit(j)).normalized());
    }
    return out;
}

std::vector<double> radial_grid(double a, double b, int n)
{
    const GaussLegendre g = gauss_legendre(n, a, b);
    std::vector<double> s = g.nodes;
    s.push_back(a);
    s.push_back(b);
    return s;
}

} // namespace

double CarlemanSetup::lambda_threshold() const { return 6.0 * std::pow(M, 3) / std::pow(m, 4); }

double CarlemanSetup::tau_threshold() const { return 88.0 * std::pow(M, 6) / std::pow(m, 4); }

double CarlemanSetup::psi_max() const { return 2.0 * std::log((rho + d) / rho); }

CarlemanSetup make_carleman_setup(const Vec3& x0, double rho, double d)
{
    if (!(rho > 0.0) || !(d > 0.0))
        throw DomainError("carleman setup: rho and d must be positive");
    CarlemanSetup s;
    s.x0 = x0;
    s.rho = rho;
    s.d = d;
    s.m = std::min(1.0, 2.0 / (rho + d));
    s.M = std::max(1.0, s.psi_max() + 6.0 / rho + 12.0 / (rho * rho));
    s.lambda_w = s.lambda_threshold();
    s.tau = s.tau_threshold();
    return s;
}

double psi_c2_norm_on_grid(double rho, double d, int grid_order, int radial_points)
{
    if (!(rho > 0.0) || !(d > 0.0))
        throw DomainError("psi grid: rho and d must be positive");
    const QuadratureRule rule = gauss_product_rule(grid_order);
    std::vector<Vec3> dirs = rule.directions;
    for (const Vec3& e : special_directions())
        dirs.push_back(e);
    const std::vector<double> radii = radial_grid(rho, rho + d, radial_points);

    double sup0 = 0.0;
    double sup1[3] = {0, 0, 0};
    double sup2[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (double s : radii) {
        sup0 = std::max(sup0, std::abs(2.0 * std::log((rho + d) / s)));
        for (const Vec3& w : dirs) {
            const Vec3 y = s * w;
            const double s2 = s * s;
            for (int i = 0; i < 3; ++i) {
                sup1[i] = std::max(sup1[i], std::abs(2.0 * y[i] / s2));
                for (int j = i; j < 3; ++j) {
                    const double h = (i == j ? -2.0 / s2 : 0.0) + 4.0 * y[i] * y[j] / (s2 * s2);
                    sup2[i][j] = std::max(sup2[i][j], std::abs(h));
                }
            }
        }
    }
    double total = sup0;
    for (int i = 0; i < 3; ++i) {
        total += sup1[i];
        for (int j = i; j < 3; ++j)
            total += sup2[i][j];
    }
    return total;
}

double psi_min_gradient_on_grid(double rho, double d, int grid_order, int radial_points)
{
    if (!(rho > 0.0) || !(d > 0.0))
        throw DomainError("psi grid: rho and d must be positive");
    double lo = kInf;
    const QuadratureRule rule = gauss_product_rule(grid_order);
    for (double s : radial_grid(rho, rho + d, radial_points))
        for (const Vec3& w : rule.directions)
            lo = std::min(lo, (2.0 * s * w / (s * s)).norm());
    return lo;
}

bool CarlemanSides::holds() const
{
    if (log_lhs == -kInf)
        return true;
    return log_lhs <= log_rhs;
}

CarlemanSides carleman_sides(const Field& v, const CarlemanSetup& setup,
                             const CarlemanQuadrature& quad)
{
    const double lam = setup.lambda_w, tau = setup.tau, m = setup.m, M = setup.M;
    if (!(setup.rho > 0.0) || !(setup.d > 0.0) || !(lam > 0.0) || !(tau > 0.0) || !(m > 0.0) ||
        !(M > 0.0))
        throw DomainError("carleman sides: all setup parameters must be positive");
    if (quad.enforce_thresholds) {
        const double slack = 1.0 - 1e-12;
        if (lam < slack * setup.lambda_threshold() || tau < slack * setup.tau_threshold())
            throw DomainError("carleman sides: (lambda, tau) below the admissible thresholds");
    }

    const double rho = setup.rho, outer = setup.rho + setup.d;
    const double lam_psi = lam * setup.psi_max(); // ln φ_max
    const double logA = std::log(2.0 * tau) + lam_psi;
    const double inv_common = std::exp(-logA);     // 1 / (2τφ_max)
    const double u_total = std::exp(logA) * -std::expm1(-lam_psi); // 2τ(φ_max - 1)
    const double u_end = std::min(u_total, quad.cutoff);

    std::vector<double> breaks{0.0};
    if (u_end <= 1.0) {
        for (int i = 1; i <= 4; ++i)
            breaks.push_back(u_end * i / 4.0);
    } else {
        for (double b = 0.5; b < u_end; b *= 2.0)
            breaks.push_back(b);
        breaks.push_back(u_end);
    }
    std::vector<double> u_nodes, u_log_w;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const GaussLegendre g = gauss_legendre(quad.radial_points, breaks[p], breaks[p + 1]);
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            u_nodes.push_back(g.nodes[i]);
            u_log_w.push_back(std::log(g.weights[i]));
        }
    }

    const double lm = std::log(m), lM = std::log(M), ll = std::log(lam), lt = std::log(tau);
    const double c_lhs_v = 4 * lm + 4 * ll + 3 * lt, c_lhs_g = 2 * lm + 2 * ll + lt;
    const double c_bnd_v = std::log(48.0) + 3 * lM + 3 * ll + 3 * lt;
    const double c_bnd_g = std::log(48.0) + lM + ll + lt;
    const double log8 = std::log(8.0);

    const QuadratureRule rule = gauss_product_rule(quad.angular_order);
    LogSum lhs, rhs;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec3& w = rule.directions[q];
        const double lw = std::log(rule.weights[q]);
        for (std::size_t i = 0; i < u_nodes.size(); ++i) {
            const double u = u_nodes[i];
            const double lphi = lam_psi + std::log1p(-u * inv_common);
            const double s = outer * std::exp(-lphi / (2.0 * lam));
            const double log_dsdu = std::log(s) - std::log(4.0 * lam * tau) - lphi;
            const double lvol = lw + u_log_w[i] - u + 2.0 * std::log(s) + log_dsdu;
            const FieldJet j = v.jet(setup.x0 + s * w);
            lhs.add(lvol + c_lhs_v + 3 * lphi + safe_log(std::norm(j.value)));
            lhs.add(lvol + c_lhs_g + lphi + safe_log(sq(j.grad)));
            rhs.add(lvol + log8 + safe_log(std::norm(j.laplacian())));
        }
        // inner sphere carries the maximal weight
        {
            const double lb = lw + 2.0 * std::log(rho);
            const FieldJet j = v.jet(setup.x0 + rho * w);
            rhs.add(lb + c_bnd_v + 3 * lam_psi + safe_log(std::norm(j.value)));
            rhs.add(lb + c_bnd_g + lam_psi + safe_log(sq(j.grad)));
        }
        if (u_total < 745.0) {
            const double lb = lw + 2.0 * std::log(outer) - u_total;
            const FieldJet j = v.jet(setup.x0 + outer * w);
            rhs.add(lb + c_bnd_v + safe_log(std::norm(j.value)));
            rhs.add(lb + c_bnd_g + safe_log(sq(j.grad)));
        }
    }

    CarlemanSides out;
    out.log_lhs = lhs.value();
    out.log_rhs = rhs.value();
    out.log_common = logA;
    return out;
}

CorollaryThresholds corollary_thresholds(double Lambda, double m, double M)
{
    const double m4 = std::pow(m, 4);
    const double a = 6.0 * std::pow(M, 3), b = 88.0 * std::pow(M, 6), c = 16.0 * Lambda;
    CorollaryThresholds t;
    t.primary = {a / m4, std::max(b, c) / m4};
    t.alternate = {std::max(a, c) / m4, b / m4};
    return t;
}

std::vector<FieldPtr> carleman_test_functions(std::uint64_t seed, int count)
{
    if (count < 0)
        throw DomainError("test function count must be nonnegative");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto gaussian_vector = [&] { return Vec3(normal(gen), normal(gen), normal(gen)); };

    std::vector<FieldPtr> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        if (i % 2 == 0) {
            const double k = 0.5 + 3.5 * unit(gen);
            const Vec3 d = gaussian_vector();
            const double phase = 2.0 * kPi * unit(gen);
            out.push_back(std::make_shared<PlaneWaveField>(k, d, phase, true));
        } else {
            Eigen::Matrix3d A;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    A(r, c) = normal(gen);
            const Vec3 b = gaussian_vector();
            out.push_back(std::make_shared<QuadraticField>(A, b, normal(gen)));
        }
    }
    return out;
}

CarlemanSuiteReport carleman_suite(const CarlemanSetup& setup,
                                   const std::vector<FieldPtr>& functions,
                                   const std::vector<double>& multipliers,
                                   const CarlemanQuadrature& quad, unsigned threads)
{
    const std::size_t nf = functions.size(), nm = multipliers.size();
    CarlemanSuiteReport report;
    report.cases.resize(nf * nm);
    parallel_for(nf * nm, threads, [&](std::size_t idx) {
        const std::size_t f = idx / nm, j = idx % nm;
        CarlemanSetup s = setup;
        s.lambda_w *= multipliers[j];
        s.tau *= multipliers[j];
        CarlemanCase& c = report.cases[idx];
        c.function = functions[f]->name();
        c.multiplier = multipliers[j];
        c.sides = carleman_sides(*functions[f], s, quad);
    });
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t j = 0; j < nm; ++j) {
            const CarlemanCase& c = report.cases[f * nm + j];
            if (!c.sides.holds())
                ++report.failures;
            if (j > 0) {
                const CarlemanCase& prev = report.cases[f * nm + j - 1];
                if (c.sides.log_ratio() < prev.sides.log_ratio() - std::log(1.01))
                    ++report.monotonicity_violations;
            }
        }
    }
    return report;
}

double ContinuationConstants::alpha() const { return std::exp(log_alpha); }

double ContinuationConstants::beta() const { return std::exp(log_beta); }

ContinuationConstants continuation_constants(double rho, double d, double lambda_w)
{
    if (!(rho > 0.0) || !(d > 0.0) || !(lambda_w > 0.0))
        throw DomainError("continuation constants: rho, d and lambda must be positive");
    const double l = lambda_w;
    ContinuationConstants c;
    c.log_alpha = std::log(l) + 2.0 * l * std::log(rho + d) - std::log(2.0) -
                  (2.0 * l + 1.0) * std::log(rho + 0.75 * d);
    c.log_beta = std::log(l) + 2.0 * l * std::log(rho + d) - (2.0 * l + 1.0) * std::log(rho);
    // γ = 1 / (1 + α/β) and 1 - γ = 1 / (1 + β/α)
    const double t = c.log_alpha - c.log_beta;
    c.gamma = 1.0 / (1.0 + std::exp(t));
    c.log_one_minus_gamma = -std::log1p(std::exp(-t));
    if (t < -700.0)
        c.log_one_minus_gamma = t;
    return c;
}

namespace {

/// Distance along the ray x0 + s w at which it leaves the obstacle, searched in [lo, hi].
double exit_distance(const ObstacleGeometry& geom, const Vec3& x0, const Vec3& w, double lo,
                     double hi)
{
    if (geom.is_sphere()) {
        const double a = geom.base_radius(), b = x0.dot(w);
        const double disc = b * b - x0.squaredNorm() + a * a;
        return -b + std::sqrt(std::max(disc, 0.0));
    }
    for (int it = 0; it < 64; ++it) {
        const double mid = 0.5 * (lo + hi);
        (geom.in_exterior(x0 + mid * w) ? hi : lo) = mid;
    }
    return hi;
}

/// Largest polar angle about `pole` for which pred(angle) stays true, assuming monotonicity.
template <class Pred>
double polar_extent(Pred pred)
{
    if (pred(kPi))
        return kPi;
    double lo = 0.0, hi = kPi;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (pred(mid) ? lo : hi) = mid;
    }
    return lo;
}

} // namespace

ContinuationReport continuation_check(const Field& u, const Vec3& x_tilde, double r,
                                      const ObstacleGeometry& geom,
                                      const ContinuationOptions& options)
{
    if (!(r > 0.0))
        throw DomainError("continuation check: r must be positive");
    const double diam = geom.diameter();
    if (r > diam)
        throw DomainError("continuation check: r must not exceed the boundary diameter");
    const Vec3 x0 = exterior_contact_point(geom, x_tilde);
    const double rho = geom.exterior_radius();
    const Vec3 xi = (x_tilde - x0).normalized();
    const double R_comp =
        options.computational_radius > 0.0 ? options.computational_radius : 2.0 * geom.max_radius();
    const double far = x0.norm() + geom.max_radius() + 1.0;

    // γ from the weight on the annulus around x0 reaching across the whole boundary
    const double m = std::min(1.0, 2.0 / (rho + diam));
    const double M = std::max(1.0, 2.0 * std::log((rho + diam) / rho) + 6.0 / rho + 12.0 / (rho * rho));
    const double Lambda = 4.0 * std::pow(options.wavenumber, 4);
    const double lambda_w = corollary_thresholds(Lambda, m, M).alternate.lambda_min;
    const ContinuationConstants cc = continuation_constants(rho, diam, lambda_w);

    ContinuationReport rep;
    rep.r = r;
    rep.gamma = cc.gamma;

    Vec3 e1, e2;
    orthonormal_frame(xi, e1, e2);
    const int naz = options.azimuth_points;
    const double dchi = 2.0 * kPi / naz;

    // lens B(x0, ρ + r/4) ∩ Ω in polar coordinates about x0
    {
        const double outer = rho + 0.25 * r;
        double h1 = 0.0, vol = 0.0;
        for (int b = 0; b < naz; ++b) {
            const double chi = (b + 0.5) * dchi;
            auto inside = [&](double th) {
                const Vec3 w = polar_direction(xi, e1, e2, th, chi);
                return exit_distance(geom, x0, w, rho * (1.0 - 1e-12), far) < outer;
            };
            const double th_max = polar_extent(inside);
            const GaussLegendre gt = gauss_legendre(options.angular_order, 0.0, th_max);
            for (std::size_t i = 0; i < gt.nodes.size(); ++i) {
                const Vec3 w = polar_direction(xi, e1, e2, gt.nodes[i], chi);
                const double sb = exit_distance(geom, x0, w, rho * (1.0 - 1e-12), far);
                if (!(sb < outer))
                    continue;
                const GaussLegendre gs = gauss_legendre(options.radial_points, sb, outer);
                for (std::size_t k = 0; k < gs.nodes.size(); ++k) {
                    const double s = gs.nodes[k];
                    const double wt = gs.weights[k] * s * s * gt.weights[i] *
                                      std::sin(gt.nodes[i]) * dchi;
                    const FieldJet j = u.jet(x0 + s * w);
                    h1 += wt * (std::norm(j.value) + sq(j.grad));
                    vol += wt;
                }
            }
        }
        if (vol < 1e-8)
            throw GeometryError("continuation check: lens region has measure below 1e-8");
        rep.lens_measure = vol;
        rep.lens_h1_norm = std::sqrt(h1);
    }

    // boundary cap {y ∈ ∂D : |y - x0| < ρ + r} parametrised by direction about x̃
    {
        const Vec3 pole = x_tilde.normalized();
        Vec3 f1, f2;
        orthonormal_frame(pole, f1, f2);
        const double reach = rho + r;
        double l2 = 0.0, g2 = 0.0, area = 0.0;
        for (int b = 0; b < naz; ++b) {
            const double chi = (b + 0.5) * dchi;
            auto inside = [&](double th) {
                const auto p = geom.surface_point(polar_direction(pole, f1, f2, th, chi));
                return (p.x - x0).norm() < reach;
            };
            const double th_max = polar_extent(inside);
            const GaussLegendre gt = gauss_legendre(options.angular_order, 0.0, th_max);
            for (std::size_t i = 0; i < gt.nodes.size(); ++i) {
                const auto p = geom.surface_point(polar_direction(pole, f1, f2, gt.nodes[i], chi));
                const double wt = gt.weights[i] * std::sin(gt.nodes[i]) * dchi * p.jacobian;
                const FieldJet j = u.jet(p.x);
                l2 += wt * std::norm(j.value);
                g2 += wt * sq(j.grad);
                area += wt;
            }
        }
        rep.cap_area = area;
        rep.cap_value_norm = std::sqrt(l2);
        rep.cap_gradient_norm = std::sqrt(g2);
    }

    // ‖u‖_{H²} over Ω ∩ B(0, R_comp), radial about the origin
    {
        const QuadratureRule rule = gauss_product_rule(options.angular_order);
        double h2 = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec3& w = rule.directions[q];
            const double r0 = geom.radial(w);
            if (!(R_comp > r0))
                throw DomainError("continuation check: computational radius inside the obstacle");
            const GaussLegendre gs = gauss_legendre(options.radial_points, r0, R_comp);
            for (std::size_t k = 0; k < gs.nodes.size(); ++k) {
                const double s = gs.nodes[k];
                const FieldJet j = u.jet(s * w);
                h2 += rule.weights[q] * gs.weights[k] * s * s *
                      (std::norm(j.value) + sq(j.grad) + j.hess.squaredNorm());
            }
        }
        rep.h2_norm = std::sqrt(h2);
    }

    const double cauchy = rep.cap_value_norm + rep.cap_gradient_norm;
    rep.lhs = r * r * rep.lens_h1_norm;
    if (cauchy > 0.0 && rep.h2_norm > 0.0)
        rep.rhs = std::exp((1.0 - 0.5 * cc.gamma) * std::log(rep.h2_norm) +
                           0.5 * cc.gamma * std::log(cauchy));
    rep.C_emp = rep.lhs > 0.0 ? rep.rhs / rep.lhs : kInf;
    return rep;
}

double ball_h1_norm(const Field& u, const Vec3& center, double radius, int angular_order,
                    int radial_points)
{
    if (!(radius > 0.0))
        throw DomainError("ball norm: radius must be positive");
    const QuadratureRule rule = gauss_product_rule(angular_order);
    const GaussLegendre gs = gauss_legendre(radial_points, 0.0, radius);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
        for (std::size_t k = 0; k < gs.nodes.size(); ++k) {
            const double s = gs.nodes[k];
            const FieldJet j = u.jet(center + s * rule.directions[q]);
            acc += rule.weights[q] * gs.weights[k] * s * s * (std::norm(j.value) + sq(j.grad));
        }
    return std::sqrt(acc);
}

double ThreeSphereReport::C() const { return std::exp(log_C); }

ThreeSphereReport three_sphere_check(const std::vector<FieldPtr>& family, const Vec3& y, double r,
                                     int angular_order, int radial_points)
{
    if (family.size() < 5)
        throw DomainError("three-sphere check: family needs at least 5 members");
    if (!(r > 0.0))
        throw DomainError("three-sphere check: r must be positive");
    ThreeSphereReport rep;
    std::vector<double> X, Y;
    for (const FieldPtr& f : family) {
        ThreeSphereMember mem;
        mem.name = f->name();
        mem.n1 = ball_h1_norm(*f, y, r, angular_order, radial_points);
        mem.n2 = ball_h1_norm(*f, y, 2.0 * r, angular_order, radial_points);
        mem.n3 = ball_h1_norm(*f, y, 3.0 * r, angular_order, radial_points);
        if (mem.n1 > mem.n2 || mem.n2 > mem.n3)
            ++rep.monotonicity_violations;
        if (!(mem.n1 > 0.0))
            throw DomainError("three-sphere check: a member vanishes on the inner ball");
        X.push_back(std::log(mem.n1 / mem.n3));
        Y.push_back(std::log(r * mem.n2 / mem.n3));
        rep.members.push_back(mem);
    }
    if (rep.monotonicity_violations > 0)
        throw ResolutionError("three-sphere check: ball norms are not nested; refine quadrature");

    const std::size_t n = X.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += X[i] / n;
        my += Y[i] / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
    }
    if (sxx <= 1e-20 * std::max(1.0, mx * mx) * n) {
        rep.degenerate = true;
        rep.alpha_hat = 0.5;
    } else {
        rep.alpha_hat = sxy / sxx;
    }
    rep.log_C = -kInf;
    for (std::size_t i = 0; i < n; ++i)
        rep.log_C = std::max(rep.log_C, Y[i] - rep.alpha_hat * X[i]);
    return rep;
}

std::vector<FieldPtr> plane_wave_family(double k, std::uint64_t seed, int count)
{
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<FieldPtr> out;
    for (int i = 0; i < count; ++i) {
        const Vec3 d(normal(gen), normal(gen), normal(gen));
        out.push_back(std::make_shared<PlaneWaveField>(k, d, 2.0 * kPi * unit(gen), true));
    }
    return out;
}

ChainBound chain_lower_bound(const ConeChain& chain, double I0, double M_tilde, double C,
                             double alpha, double r, int dimension)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw DomainError("chain bound: alpha must lie in (0, 1)");
    if (!(I0 > 0.0) || !(C > 0.0) || !(r > 0.0) || !(M_tilde >= 1.0))
        throw DomainError("chain bound: require I0, C, r > 0 and M >= 1");
    if (chain.radii.empty() || static_cast<int>(chain.radii.size()) != chain.count + 1)
        throw DomainError("chain bound: chain has no balls");

    ChainBound b;
    b.N = chain.count;
    b.alpha = alpha;
    const double la = std::log(alpha), lM = std::log(M_tilde), lI0 = std::log(I0);
    const double lC0 = std::log(C / chain.radii[0]);

    b.log_I.push_back(lI0);
    b.log_I_closed.push_back(lI0);
    b.log_I_radii.push_back(lI0);
    double e_iter = 0.0;
    for (int k = 1; k <= b.N; ++k) {
        b.log_I.push_back(lC0 + (1.0 - alpha) * lM + alpha * b.log_I.back());
        b.log_I_radii.push_back(std::log(C / chain.radii[k - 1]) + (1.0 - alpha) * lM +
                                alpha * b.log_I_radii.back());
        e_iter = 1.0 + alpha * e_iter;
        const double ak = std::exp(k * la);
        const double e_closed = (1.0 - ak) / (1.0 - alpha);
        b.max_exponent_mismatch = std::max(b.max_exponent_mismatch, std::abs(e_iter - e_closed));
        b.log_I_closed.push_back(e_closed * lC0 + (1.0 - ak) * lM + ak * lI0);
    }
    b.log_I0_recovered = chain_invert(b, b.log_I_closed.back(), C, M_tilde, chain.radii[0]);

    b.beta = 1.0 / (1.0 - alpha);
    b.gamma = 0.5 * dimension + b.beta;
    b.s = 6.0 * std::abs(la);
    b.eta = b.s + 1.0;
    b.log_lower_bound = b.gamma * std::exp(-b.N * la) * std::log(C * r);
    b.log_simplified_bound = -C / std::pow(r, b.eta);
    return b;
}

double chain_invert(const ChainBound& bound, double log_IN, double C, double M_tilde, double rho0)
{
    const double aN = std::exp(bound.N * std::log(bound.alpha));
    const double eN = (1.0 - aN) / (1.0 - bound.alpha);
    return (log_IN - eN * std::log(C / rho0) - (1.0 - aN) * std::log(M_tilde)) / aN;
}

WitnessSet lemma42_witness(const std::vector<Vec3>& points, const Eigen::VectorXcd& values,
                           const Vec3& x_tilde, double r_star, double delta)
{
    if (static_cast<Eigen::Index>(points.size()) != values.size())
        throw DomainError("witness: points and values differ in length");
    if (!(r_star > 0.0) || !(delta >= 0.0))
        throw DomainError("witness: require r* > 0 and delta >= 0");
    WitnessSet w;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if ((points[i] - x_tilde).norm() >= r_star)
            continue;
        const double a = std::abs(values[static_cast<Eigen::Index>(i)]);
        w.max_abs = std::max(w.max_abs, a);
        if (a >= delta)
            w.nodes.push_back(i);
    }
    w.empty = w.nodes.empty();
    return w;
}

} // namespace impscat
