#include <cmath>

#include "impscat/errors.hpp"
#include "impscat/geometry.hpp"
#include "test_util.hpp"

using namespace impscat;

namespace {

ObstacleGeometry bumpy()
{
    std::vector<double> c(harmonic_count(3), 0.0);
    c[harmonic_index(2, 0)] = 0.05;
    c[harmonic_index(3, 1)] = 0.03;
    return ObstacleGeometry::perturbed_sphere(1.0, c);
}

} // namespace

TEST_CASE("sphere geometry basics")
{
    const auto g = ObstacleGeometry::sphere(2.0);
    CHECK(g.is_sphere());
    CHECK(g.max_radius() == doctest::Approx(2.0));
    CHECK(g.diameter() == doctest::Approx(4.0));
    CHECK(g.exterior_radius() == doctest::Approx(1.0));
    const auto p = g.surface_point(Vec3(0, 0.6, 0.8));
    CHECK((p.x - Vec3(0, 1.2, 1.6)).norm() < 1e-15);
    CHECK((p.normal - Vec3(0, 0.6, 0.8)).norm() < 1e-15);
    CHECK(p.jacobian == doctest::Approx(4.0));
    CHECK(g.in_exterior(Vec3(0, 0, 2.1)));
    CHECK_FALSE(g.in_exterior(Vec3(0, 0, 1.9)));
    CHECK(g.boundary_distance(Vec3(3, 0, 0)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK_THROWS_AS(ObstacleGeometry::sphere(-1.0), DomainError);
}

TEST_CASE("perturbed sphere: normals are unit, orthogonal to the surface, and the area matches")
{
    const auto g = bumpy();
    CHECK_FALSE(g.is_sphere());
    const auto rule = gauss_product_rule(40);
    double area = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto p = g.surface_point(rule.directions[q]);
        CHECK(p.normal.norm() == doctest::Approx(1.0));
        // tangent along a small displacement of the parameter direction
        const Vec3 t = p.dir.cross(Vec3(0.2, 0.7, -0.3)).normalized();
        const auto pp = g.surface_point((p.dir + 1e-6 * t).normalized());
        const auto pm = g.surface_point((p.dir - 1e-6 * t).normalized());
        CHECK(std::abs((pp.x - pm.x).normalized().dot(p.normal)) < 1e-6);
        area += rule.weights[q] * p.jacobian;
    }
    // the jacobian is smooth, so a coarse rule already matches a refined one
    const auto fine = gauss_product_rule(80);
    double area_fine = 0.0;
    for (std::size_t q = 0; q < fine.size(); ++q)
        area_fine += fine.weights[q] * g.surface_point(fine.directions[q]).jacobian;
    CHECK(area == doctest::Approx(area_fine).epsilon(1e-10));
    CHECK(g.max_radius() > 1.0);
    CHECK(g.min_radius() < 1.0);
}

TEST_CASE("empty or zero coefficients collapse to a sphere; bad counts throw")
{
    CHECK(ObstacleGeometry::perturbed_sphere(1.0, {}).is_sphere());
    CHECK_THROWS_AS(ObstacleGeometry::perturbed_sphere(1.0, {0.0, 0.1}), DomainError);
}

TEST_CASE("exterior contact ball touches only at the chosen point")
{
    const auto g = ObstacleGeometry::sphere(1.0);
    const Vec3 xt(0, 0, 1);
    const Vec3 x0 = exterior_contact_point(g, xt);
    CHECK((x0 - Vec3(0, 0, 0.5)).norm() < 1e-14);
    CHECK_THROWS_AS(exterior_contact_point(g, Vec3(0, 0, 1.2)), DomainError);
    // a ball larger than the obstacle cannot touch from inside at one point
    const auto big = ObstacleGeometry::sphere(1.0, 1.5);
    CHECK_THROWS_AS(exterior_contact_point(big, xt), GeometryError);
}

TEST_CASE("chain ratio and ball count")
{
    const double mu = chain_ratio(kPi / 6);
    CHECK(mu == doctest::Approx(4.0 / 3.5));
    CHECK(chain_ball_count(0.1, 8.0, kPi / 6) == 22);
    // brute force: smallest N with μ^N r/2 ≥ R/8, floor form
    int N = 0;
    while (std::pow(mu, N + 1) * 0.05 <= 1.0)
        ++N;
    CHECK(N == 22);
    CHECK_THROWS_AS(chain_ball_count(0.0, 8.0, kPi / 6), DomainError);
    CHECK_THROWS_AS(chain_ball_count(3.0, 8.0, kPi / 6), DomainError);
}

TEST_CASE("cone chain satisfies nesting and containment at every step")
{
    const auto g = ObstacleGeometry::sphere(1.0);
    const Vec3 xt(0, 0, 1);
    const ConeChain c = build_cone_chain(xt, 0.1, g, 8.0);
    CHECK(c.count == 22);
    REQUIRE(c.centers.size() == 23u);
    CHECK(c.distances[0] == doctest::Approx(0.05));
    for (int k = 0; k <= c.count; ++k) {
        CHECK(c.radii[k] == doctest::Approx(std::sin(kPi / 6) / 3 * c.distances[k]));
        CHECK((c.centers[k] - xt).norm() == doctest::Approx(c.distances[k]));
        CHECK(c.centers[k].norm() + 3 * c.radii[k] <= 0.75 * 8.0 + 1e-12);
        if (k < c.count)
            CHECK((c.centers[k + 1] - c.centers[k]).norm() + c.radii[k + 1] <=
                  2 * c.radii[k] + 1e-12);
    }
    CHECK(c.centers.back().norm() - c.radii.back() >= 8.0 / 12.0 - 1e-12);
    const auto diag = chain_diagnostics(c, g, 8.0);
    CHECK(diag.max_nesting_excess <= 1e-12);
    CHECK(diag.min_clearance > 0.0);
    CHECK(diag.max_outer_excess <= 1e-12);
    CHECK(diag.final_inner_margin >= -1e-12);
    CHECK_THROWS_AS(build_cone_chain(xt, 0.1, g, 3.9), DomainError);
}

TEST_CASE("cone chain on a perturbed obstacle")
{
    const auto g = bumpy();
    const Vec3 dir = Vec3(1, 1, 1).normalized();
    const Vec3 xt = g.surface_point(dir).x;
    const ConeChain c = build_cone_chain(xt, 0.1, g, 8.0);
    const auto diag = chain_diagnostics(c, g, 8.0);
    CHECK(diag.min_clearance > 0.0);
    CHECK(diag.max_nesting_excess <= 1e-12);
}

TEST_CASE("boundary cap of the exterior ball grows like r^(1/2) on a sphere")
{
    const auto g = ObstacleGeometry::sphere(1.0);
    const GA2Fit fit = check_GA2(g, {0.01, 0.02, 0.04, 0.08, 0.16});
    CHECK(fit.kappa == doctest::Approx(0.5).epsilon(0.05));
    // closed form s² = a r (2ρ + r) / (a - ρ) with a = 1, ρ = 1/2
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        const double r = fit.radii[i];
        CHECK(fit.cap_radius[i] ==
              doctest::Approx(std::sqrt(r * (1.0 + r) / 0.5)).epsilon(1e-4));
    }
    CHECK_THROWS_AS(check_GA2(g, {0.9}), DomainError);
}

TEST_CASE("boundary distance on a perturbed obstacle is consistent with the inside test")
{
    const auto g = bumpy();
    for (const Vec3& x : {Vec3(1.5, 0.2, 0.1), Vec3(0, -1.3, 0.4), Vec3(0.1, 0.1, 2.0)}) {
        const double dist = g.boundary_distance(x);
        CHECK(dist > 0.0);
        CHECK(g.in_exterior(x));
        // the distance cannot exceed the radial gap
        CHECK(dist <= x.norm() - g.radial(x.normalized()) + 1e-9);
    }
}
