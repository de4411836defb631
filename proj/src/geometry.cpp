#include "impscat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impscat/errors.hpp"

namespace impscat {

namespace {

// Orthonormal tangent pair completing `pole` to a right-handed frame.
void tangent_frame(const Vec3& pole, Vec3& e1, Vec3& e2)
{
    const Vec3 helper = std::abs(pole.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    e1 = helper.cross(pole).normalized();
    e2 = pole.cross(e1);
}

Vec3 rotated_direction(const Vec3& pole, const Vec3& e1, const Vec3& e2, double psi, double chi)
{
    return std::cos(psi) * pole + std::sin(psi) * (std::cos(chi) * e1 + std::sin(chi) * e2);
}

} // namespace

ObstacleGeometry ObstacleGeometry::sphere(double radius, double exterior_radius,
                                          double cone_half_angle)
{
    ObstacleGeometry g;
    g.kind_ = Kind::Sphere;
    g.radius_ = radius;
    g.exterior_radius_ = exterior_radius;
    g.cone_half_angle_ = cone_half_angle;
    g.validate_and_cache();
    return g;
}

ObstacleGeometry ObstacleGeometry::perturbed_sphere(double radius, std::vector<double> coefficients,
                                                    double exterior_radius,
                                                    double cone_half_angle)
{
    ObstacleGeometry g;
    g.kind_ = Kind::PerturbedSphere;
    g.radius_ = radius;
    g.coefficients_ = std::move(coefficients);
    g.exterior_radius_ = exterior_radius;
    g.cone_half_angle_ = cone_half_angle;
    g.validate_and_cache();
    return g;
}

void ObstacleGeometry::validate_and_cache()
{
    if (!(radius_ > 0.0) || !std::isfinite(radius_))
        throw DomainError("obstacle radius must be positive, got " + std::to_string(radius_));
    if (!(cone_half_angle_ > 0.0 && cone_half_angle_ < kPi / 2.0))
        throw DomainError("cone half-angle must lie in (0, pi/2)");

    if (kind_ == Kind::PerturbedSphere) {
        if (coefficients_.empty()) {
            kind_ = Kind::Sphere;
        } else {
            const int root = static_cast<int>(std::lround(std::sqrt(double(coefficients_.size()))));
            if (root * root != static_cast<int>(coefficients_.size()))
                throw DomainError("perturbation coefficient count must be a perfect square (N+1)^2");
            degree_ = root - 1;
        }
    }

    if (kind_ == Kind::Sphere) {
        coefficients_.clear();
        degree_ = 0;
        max_radius_ = min_radius_ = radius_;
    } else {
        const QuadratureRule grid = gauss_product_rule(std::max(48, 8 * degree_));
        max_radius_ = 0.0;
        min_radius_ = std::numeric_limits<double>::infinity();
        for (const Vec3& d : grid.directions) {
            const double r = radial(d);
            max_radius_ = std::max(max_radius_, r);
            min_radius_ = std::min(min_radius_, r);
        }
        if (!(min_radius_ > 0.0))
            throw GeometryError("perturbed radius r(x) is not positive on the boundary grid");
    }

    if (exterior_radius_ < 0.0)
        exterior_radius_ = 0.5 * min_radius_;
    if (!(exterior_radius_ > 0.0))
        throw DomainError("exterior sphere radius must be positive");
}

double ObstacleGeometry::radial(const Vec3& dir) const
{
    if (kind_ == Kind::Sphere)
        return radius_;
    std::vector<double> values(harmonic_count(degree_));
    eval_real_harmonics(degree_, dir, values);
    double r = radius_;
    for (std::size_t i = 0; i < values.size(); ++i)
        r += coefficients_[i] * values[i];
    return r;
}

ObstacleGeometry::SurfacePoint ObstacleGeometry::surface_point(const Vec3& dir) const
{
    SurfacePoint p;
    p.dir = dir.normalized();
    if (kind_ == Kind::Sphere) {
        p.x = radius_ * p.dir;
        p.normal = p.dir;
        p.jacobian = radius_ * radius_;
        return p;
    }
    const int count = harmonic_count(degree_);
    std::vector<double> values(count);
    std::vector<Vec3> grads(count);
    eval_real_harmonics_with_gradient(degree_, p.dir, values, grads);
    double r = radius_;
    Vec3 g = Vec3::Zero();
    for (int i = 0; i < count; ++i) {
        r += coefficients_[i] * values[i];
        g += coefficients_[i] * grads[i];
    }
    const double root = std::sqrt(r * r + g.squaredNorm());
    p.x = r * p.dir;
    p.normal = (r * p.dir - g) / root;
    p.jacobian = r * root;
    return p;
}

bool ObstacleGeometry::in_exterior(const Vec3& x) const
{
    const double norm = x.norm();
    if (norm == 0.0)
        return false;
    return norm > radial(x / norm);
}

double ObstacleGeometry::max_radius() const { return max_radius_; }
double ObstacleGeometry::min_radius() const { return min_radius_; }

double ObstacleGeometry::boundary_distance(const Vec3& x, int grid_order) const
{
    if (kind_ == Kind::Sphere)
        return std::abs(x.norm() - radius_);

    const QuadratureRule grid = gauss_product_rule(grid_order);
    double best = std::numeric_limits<double>::infinity();
    Vec3 best_dir = Vec3::UnitZ();
    for (const Vec3& d : grid.directions) {
        const double dist = (x - radial(d) * d).norm();
        if (dist < best) {
            best = dist;
            best_dir = d;
        }
    }
    // Pattern search on the sphere around the best grid node.
    double step = 2.0 * kPi / grid_order;
    while (step > 1e-12) {
        Vec3 e1, e2;
        tangent_frame(best_dir, e1, e2);
        bool improved = false;
        for (const Vec3& t : {e1, Vec3(-e1), e2, Vec3(-e2)}) {
            const Vec3 d = (best_dir + step * t).normalized();
            const double dist = (x - radial(d) * d).norm();
            if (dist < best) {
                best = dist;
                best_dir = d;
                improved = true;
            }
        }
        if (!improved)
            step *= 0.5;
    }
    return best;
}

BoundarySample sample_boundary(const ObstacleGeometry& geom, const QuadratureRule& rule)
{
    BoundarySample sample;
    sample.points.reserve(rule.size());
    for (const Vec3& d : rule.directions)
        sample.points.push_back(geom.surface_point(d));
    sample.weights = rule.weights;
    return sample;
}

Vec3 exterior_contact_point(const ObstacleGeometry& geom, const Vec3& x_tilde, int grid_order)
{
    const double norm = x_tilde.norm();
    if (!(norm > 0.0))
        throw DomainError("contact point: x_tilde must not be the origin");
    const auto p = geom.surface_point(x_tilde / norm);
    if (std::abs(norm - p.x.norm()) > 1e-10 * std::max(1.0, norm))
        throw DomainError("contact point: x_tilde is not on the obstacle boundary");

    const double rho = geom.exterior_radius();
    const Vec3 center = p.x - rho * p.normal;
    const double inside = rho * (1.0 - 1e-9);
    const QuadratureRule grid = gauss_product_rule(grid_order);
    for (const Vec3& d : grid.directions) {
        const Vec3 y = geom.is_sphere() ? Vec3(geom.base_radius() * d) : Vec3(geom.radial(d) * d);
        if ((y - center).norm() < inside)
            throw GeometryError("exterior ball of radius " + std::to_string(rho) +
                                " meets the boundary away from the contact point");
    }
    return center;
}

double chain_ratio(double cone_half_angle)
{
    if (!(cone_half_angle > 0.0 && cone_half_angle < kPi / 2.0))
        throw DomainError("cone half-angle must lie in (0, pi/2)");
    const double s = std::sin(cone_half_angle);
    return (3.0 + 2.0 * s) / (3.0 + s);
}

int chain_ball_count(double r, double R, double cone_half_angle)
{
    if (!(r > 0.0) || !std::isfinite(r))
        throw DomainError("chain_ball_count: r must be positive");
    if (!(R >= 4.0 * r * (1.0 - 1e-14)))
        throw DomainError("chain_ball_count: require R >= 4 r");
    const double mu = chain_ratio(cone_half_angle);
    const double ratio = std::max(0.0, std::log(R / (4.0 * r)) / std::log(mu));
    // Relative slack so exact powers of mu land on the integer they represent.
    return static_cast<int>(std::floor(ratio + 1e-12 * std::max(1.0, ratio)));
}

ConeChain build_cone_chain(const Vec3& x_tilde, double r, const ObstacleGeometry& geom, double R)
{
    if (!(r > 0.0) || r > geom.diameter() * (1.0 + 1e-12))
        throw DomainError("build_cone_chain: require 0 < r <= diam");
    if (!(R > 4.0 * geom.max_radius()))
        throw DomainError("build_cone_chain: require R > 4 sup|x| over the obstacle");
    const double norm = x_tilde.norm();
    const auto p = geom.surface_point(x_tilde / norm);
    if (std::abs(norm - p.x.norm()) > 1e-10 * std::max(1.0, norm))
        throw DomainError("build_cone_chain: x_tilde is not on the obstacle boundary");

    ConeChain chain;
    chain.axis = p.normal;
    chain.base_point = p.x;
    chain.ratio = chain_ratio(geom.cone_half_angle());
    chain.count = chain_ball_count(r, R, geom.cone_half_angle());
    const double c = std::sin(geom.cone_half_angle()) / 3.0;

    Vec3 x = p.x + 0.5 * r * chain.axis;
    double d = 0.5 * r;
    for (int k = 0; k <= chain.count; ++k) {
        chain.centers.push_back(x);
        chain.distances.push_back(d);
        chain.radii.push_back(c * d);
        x += (chain.ratio - 1.0) * d * chain.axis;
        d *= chain.ratio;
    }

    const ChainDiagnostics diag = chain_diagnostics(chain, geom, R);
    const double tol = 1e-12 * std::max(1.0, R);
    if (diag.max_nesting_excess > tol)
        throw GeometryError("cone chain: consecutive balls are not nested");
    if (!(diag.min_clearance > 0.0))
        throw GeometryError("cone chain: a ball B(x_k, 3 rho_k) leaves the exterior domain");
    if (diag.max_outer_excess > tol)
        throw GeometryError("cone chain: a ball B(x_k, 3 rho_k) leaves B(0, 3R/4)");
    if (diag.final_inner_margin < -tol)
        throw GeometryError("cone chain: final ball reaches inside |x| < R/12");
    return chain;
}

ChainDiagnostics chain_diagnostics(const ConeChain& chain, const ObstacleGeometry& geom, double R)
{
    ChainDiagnostics diag;
    diag.max_nesting_excess = -std::numeric_limits<double>::infinity();
    diag.min_clearance = std::numeric_limits<double>::infinity();
    diag.max_outer_excess = -std::numeric_limits<double>::infinity();
    const std::size_t n = chain.centers.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double rho = chain.radii[k];
        if (k + 1 < n) {
            const double step = (chain.centers[k + 1] - chain.centers[k]).norm();
            diag.max_nesting_excess =
                std::max(diag.max_nesting_excess, step + chain.radii[k + 1] - 2.0 * rho);
        }
        diag.min_clearance =
            std::min(diag.min_clearance, geom.boundary_distance(chain.centers[k]) - 3.0 * rho);
        diag.max_outer_excess =
            std::max(diag.max_outer_excess, chain.centers[k].norm() + 3.0 * rho - 0.75 * R);
    }
    if (n == 1)
        diag.max_nesting_excess = 0.0;
    diag.final_inner_margin = chain.centers.back().norm() - chain.radii.back() - R / 12.0;
    return diag;
}

double default_ga2_radius_cap(const ObstacleGeometry& geom)
{
    return std::min(0.5, geom.diameter() / 4.0);
}

GA2Fit check_GA2(const ObstacleGeometry& geom, const std::vector<double>& radii,
                 const std::vector<Vec3>& sample_directions, double exterior_radius)
{
    if (radii.size() < 2)
        throw DomainError("check_GA2: need at least two radii");
    const double cap = default_ga2_radius_cap(geom);
    for (double r : radii)
        if (!(r > 0.0) || r > cap * (1.0 + 1e-12))
            throw DomainError("check_GA2: radii must lie in (0, r0], r0 = " + std::to_string(cap));

    const double rho = exterior_radius > 0.0 ? exterior_radius : geom.exterior_radius();
    std::vector<Vec3> dirs = sample_directions;
    if (dirs.empty())
        dirs = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY(), Vec3::UnitZ(),
                -Vec3::UnitZ()};

    GA2Fit fit;
    fit.radii = radii;
    std::sort(fit.radii.begin(), fit.radii.end());
    fit.cap_radius.assign(fit.radii.size(), 0.0);

    constexpr int n_azimuth = 32;
    constexpr int n_steps = 2000;
    const double h = kPi / n_steps;
    for (const Vec3& dir : dirs) {
        const Vec3 pole = dir.normalized();
        const auto p = geom.surface_point(pole);
        const Vec3 center = p.x - rho * p.normal;
        Vec3 e1, e2;
        tangent_frame(pole, e1, e2);
        auto point_at = [&](double psi, double chi) {
            const Vec3 d = rotated_direction(pole, e1, e2, psi, chi);
            return Vec3(geom.radial(d) * d);
        };
        for (std::size_t ir = 0; ir < fit.radii.size(); ++ir) {
            const double reach = rho + fit.radii[ir];
            double s = 0.0;
            for (int a = 0; a < n_azimuth; ++a) {
                const double chi = 2.0 * kPi * a / n_azimuth;
                double last_in = 0.0;
                int i = 1;
                for (; i <= n_steps; ++i) {
                    const Vec3 y = point_at(i * h, chi);
                    if ((y - center).norm() > reach)
                        break;
                    last_in = i * h;
                    s = std::max(s, (y - p.x).norm());
                }
                if (i > n_steps)
                    continue;
                double lo = last_in, hi = i * h;
                for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if ((point_at(mid, chi) - center).norm() > reach)
                        hi = mid;
                    else
                        lo = mid;
                }
                s = std::max(s, (point_at(lo, chi) - p.x).norm());
            }
            fit.cap_radius[ir] = std::max(fit.cap_radius[ir], s);
        }
    }

    for (std::size_t i = 1; i < fit.radii.size(); ++i)
        if (fit.cap_radius[i] < fit.cap_radius[i - 1] * (1.0 - 1e-6))
            throw ResolutionError("check_GA2: cap radius is not monotone in r; boundary sampling "
                                  "too coarse");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(fit.radii.size());
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        if (!(fit.cap_radius[i] > 0.0))
            throw ResolutionError("check_GA2: empty boundary cap; boundary sampling too coarse");
        const double x = std::log(fit.radii[i]), y = std::log(fit.cap_radius[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0.0))
        throw DomainError("check_GA2: radii must not all coincide");
    fit.kappa = (n * sxy - sx * sy) / denom;
    fit.C = std::exp((sy - fit.kappa * sx) / n);
    return fit;
}

} // namespace impscat
