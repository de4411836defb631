#include <cmath>

#include "golden_values.hpp"
#include "impscat/errors.hpp"
#include "impscat/fields.hpp"
#include "impscat/forward.hpp"
#include "test_util.hpp"

using namespace impscat;

namespace {

ObstacleGeometry bumpy()
{
    std::vector<double> c(harmonic_count(2), 0.0);
    c[harmonic_index(2, 0)] = 0.06;
    c[harmonic_index(1, 1)] = 0.04;
    return ObstacleGeometry::perturbed_sphere(1.0, c);
}

ImpedanceField tilted_impedance()
{
    std::vector<double> c(harmonic_count(1), 0.0);
    c[0] = 1.0 * std::sqrt(4 * kPi);
    c[harmonic_index(1, -1)] = 0.5;
    return ImpedanceField::from_coefficients(c);
}

} // namespace

TEST_CASE("Mie far field matches high-precision references")
{
    for (const auto& g : golden::kMieFarField) {
        const WaveContext ctx{g.k, Vec3::UnitZ()};
        const double th = kPi * g.theta_over_pi;
        const Vec3 dir(std::sin(th), 0.0, std::cos(th));
        const cplx u = mie_farfield_at(ctx, g.a, g.lambda, dir);
        CHECK(std::abs(u - cplx(g.re, g.im)) < 1e-12 * std::max(1.0, std::abs(cplx(g.re, g.im))));
    }
}

TEST_CASE("solver reproduces Mie for spheres and constant impedance")
{
    for (double k : {0.5, 2.0})
        for (double lam : {0.0, 5.0}) {
            const WaveContext ctx{k, Vec3(0.0, 0.6, 0.8)};
            const auto sol =
                solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(lam));
            const FarField ff = farfield(sol, 24);
            const FarField mie = mie_farfield(ctx, 1.0, lam, 24);
            CHECK(l2_distance(ff, mie) <= 1e-8 * mie.l2_norm());
        }
}

TEST_CASE("general quadrature path on an undeformed sphere also reproduces Mie")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const auto flat = ObstacleGeometry::perturbed_sphere(1.0, {0.0});
    SolverOptions opts;
    opts.band_limit = 12;
    const auto sol = solve_density(ctx, flat, ImpedanceField::constant(1.0), opts);
    const FarField ff = farfield(sol, 16);
    const FarField mie = mie_farfield(ctx, 1.0, 1.0, 16);
    CHECK(l2_distance(ff, mie) <= 1e-8 * mie.l2_norm());
}

TEST_CASE("scattered field near the boundary agrees with the Mie series")
{
    const WaveContext ctx{1.5, Vec3::UnitX()};
    const auto sol = solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(0.5));
    const FieldPtr mie = mie_field(1.5, Vec3::UnitX(), 1.0, 0.5, false);
    for (const Vec3& x : {Vec3(1.3, 0.2, -0.1), Vec3(0, 0, 2.5), Vec3(-4, 3, 1)})
        CHECK(rel_err(eval_scattered(x, sol), mie->value(x)) < 1e-9);
    CHECK_THROWS_AS(eval_scattered(Vec3(0.2, 0.1, 0.0), sol), DomainError);
}

TEST_CASE("boundary traces satisfy the impedance condition")
{
    const WaveContext ctx{1.0, Vec3(1, 1, 0).normalized()};
    SolverOptions opts;
    opts.band_limit = 16;
    for (const auto& geom : {ObstacleGeometry::sphere(1.0), bumpy()}) {
        const ImpedanceField lam = tilted_impedance();
        const auto sol = solve_density(ctx, geom, lam, opts);
        const BoundaryTraces tr = boundary_traces(sol);
        double worst = 0.0, scale = 0.0;
        for (std::size_t q = 0; q < tr.rule.size(); ++q) {
            const cplx bc = tr.dnu[q] + cplx(0, 1) * lam.value(tr.rule.directions[q]) * tr.u[q];
            worst = std::max(worst, std::abs(bc));
            scale = std::max(scale, std::abs(tr.dnu[q]) + std::abs(tr.u[q]));
        }
        CHECK(worst < 1e-6 * scale);
    }
}

TEST_CASE("energy identity: flux balances absorption")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const auto sol = solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(1.0));
    const EnergyBalance e = energy_identity(sol);
    CHECK(e.absorption > 0.0);
    CHECK(std::abs(e.residual) <= 1e-8 * e.absorption);

    SolverOptions opts;
    opts.band_limit = 16;
    const auto sol2 = solve_density(ctx, bumpy(), tilted_impedance(), opts);
    const EnergyBalance e2 = energy_identity(sol2);
    CHECK(std::abs(e2.residual) <= 1e-5 * e2.absorption);

    const auto sol0 = solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(0.0));
    const EnergyBalance e0 = energy_identity(sol0);
    CHECK(e0.absorption == 0.0);
    CHECK(std::abs(e0.flux) < 1e-10);
}

TEST_CASE("reciprocity u∞(x̂; d) = u∞(-d; -x̂) on a perturbed obstacle")
{
    const auto geom = bumpy();
    const ImpedanceField lam = tilted_impedance();
    SolverOptions opts;
    opts.band_limit = 16;
    const Vec3 d1 = Vec3(0.3, -0.2, 0.9).normalized(), d2 = Vec3(-0.5, 0.8, 0.1).normalized();
    const auto s1 = solve_density({1.2, d1}, geom, lam, opts);
    const auto s2 = solve_density({1.2, -d2}, geom, lam, opts);
    const cplx a = farfield_at(s1, d2), b = farfield_at(s2, -d1);
    CHECK(rel_err(a, b) < 1e-6);
}

TEST_CASE("perturbed-obstacle far field converges in the band limit")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const auto geom = bumpy();
    SolverOptions a, b;
    a.band_limit = 12;
    b.band_limit = 18;
    const FarField fa = farfield(solve_density(ctx, geom, tilted_impedance(), a), 20);
    const FarField fb = farfield(solve_density(ctx, geom, tilted_impedance(), b), 20);
    CHECK(l2_distance(fa, fb) < 1e-6 * fb.l2_norm());
}

TEST_CASE("far-field asymptotics: remainder decays like 1/r")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const auto sol = solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(1.0));
    const Vec3 dir = Vec3(0.3, 0.4, std::sqrt(1 - 0.25)).normalized();
    const cplx finf = farfield_at(sol, dir);
    std::vector<double> lr, le;
    for (double r : {1e2, 1e3, 1e4}) {
        const cplx us = eval_scattered(r * dir, sol);
        lr.push_back(std::log(r));
        le.push_back(std::log(std::abs(r * std::exp(cplx(0, -r)) * us - finf)));
    }
    const double slope = (le[2] - le[0]) / (lr[2] - lr[0]);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("uniform bound across admissible impedances")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const double M = 5.0;
    const std::vector<ImpedanceField> lams{ImpedanceField::constant(0.0), ImpedanceField::constant(M / 2),
                                           ImpedanceField::constant(M)};
    const UniformBoundReport rep = uniform_bound_check(M, lams, ctx, ObstacleGeometry::sphere(1.0));
    CHECK(std::isfinite(rep.max_sup));
    CHECK(rep.spread <= 2.0);
}

TEST_CASE("solver errors")
{
    const WaveContext ctx{4.0, Vec3::UnitZ()};
    SolverOptions opts;
    opts.band_limit = 3;
    CHECK_THROWS_AS(solve_density(ctx, ObstacleGeometry::sphere(1.0), ImpedanceField::constant(1.0), opts),
                    ResolutionError);
    CHECK_THROWS_AS(WaveContext({-1.0, Vec3::UnitZ()}).validate(), DomainError);
    CHECK_THROWS_AS(mie_coefficients(1.0, 1.0, -0.5), DomainError);
}

TEST_CASE("field jets agree with finite differences")
{
    std::vector<FieldPtr> fields{
        std::make_shared<PlaneWaveField>(2.0, Vec3(1, 2, 3), 0.4, true),
        std::make_shared<PointSourceField>(1.5, Vec3(0.1, 0.0, -0.2)),
        std::make_shared<QuadraticField>(Eigen::Matrix3d::Random(), Vec3(1, -1, 0.5), 0.3),
        mie_field(1.3, Vec3::UnitY(), 1.0, 0.7, true),
        std::make_shared<SeparatedModeField>(1.1, 3, -2, Vec3(0.1, 0.2, 0.3), 3.0)};
    const double h = 1e-4;
    for (const auto& f : fields)
        for (const Vec3& x : {Vec3(1.2, 0.4, -0.3), Vec3(-0.8, 1.5, 0.9)}) {
            const FieldJet j = f->jet(x);
            cplx lap_fd = 0.0;
            for (int i = 0; i < 3; ++i) {
                const Vec3 e = h * Vec3::Unit(i);
                const cplx fp = f->value(x + e), fm = f->value(x - e);
                CHECK(std::abs((fp - fm) / (2 * h) - j.grad[i]) < 1e-6 * (1 + std::abs(j.grad[i])));
                lap_fd += (fp - 2.0 * j.value + fm) / (h * h);
            }
            CHECK(std::abs(lap_fd - j.laplacian()) < 1e-4 * (1 + std::abs(j.laplacian())));
        }
}

TEST_CASE("Helmholtz solutions have Δu = -k²u")
{
    const FieldPtr m = mie_field(2.0, Vec3::UnitZ(), 1.0, 1.0, true);
    const SeparatedModeField s(2.0, 4, 1, Vec3::Zero(), 2.0);
    for (const Vec3& x : {Vec3(1.1, 0.3, 0.2), Vec3(0.1, -1.5, 0.7)}) {
        const FieldJet j = m->jet(x);
        CHECK(std::abs(j.laplacian() + 4.0 * j.value) < 1e-10 * (1 + std::abs(j.value)));
        const FieldJet t = s.jet(x);
        CHECK(std::abs(t.laplacian() + 4.0 * t.value) < 1e-10);
    }
    // separated mode equals j_n(k|x|) R_n^m(x̂)
    const Vec3 x(0.3, 0.5, -0.4);
    std::vector<double> R(harmonic_count(4));
    eval_real_harmonics(4, x.normalized(), R);
    CHECK(std::abs(s.value(x) - sph_bessel_j(4, 2.0 * x.norm()) * R[harmonic_index(4, 1)]) < 1e-12);
}
