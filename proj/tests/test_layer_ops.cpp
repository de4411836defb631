#include <cmath>

#include "impscat/errors.hpp"
#include "impscat/forward.hpp"
#include "impscat/layer_ops.hpp"
#include "test_util.hpp"

using namespace impscat;
using W = SurfaceOperators::Which;

TEST_CASE("sphere eigenvalues reduce to the Laplace ones as k -> 0")
{
    const double a = 1.7, k = 1e-5;
    for (int n = 0; n <= 6; ++n) {
        const cplx s = sphere_operator_eigenvalue(OperatorKind::S, k, a, n);
        CHECK(s.real() == doctest::Approx(2 * a / (2 * n + 1)).epsilon(1e-6));
        CHECK(sphere_operator_eigenvalue(OperatorKind::S0, k, a, n).real() ==
              doctest::Approx(2 * a / (2 * n + 1)));
        const cplx kp = sphere_operator_eigenvalue(OperatorKind::KPrime, k, a, n);
        CHECK(kp.real() == doctest::Approx(sphere_laplace_kprime_eigenvalue(n)).epsilon(1e-6));
        CHECK(sphere_laplace_kprime_eigenvalue(n) == doctest::Approx(-1.0 / (2 * n + 1)));
        CHECK(sphere_laplace_t_eigenvalue(a, n) ==
              doctest::Approx(-2.0 * n * (n + 1) / ((2 * n + 1) * a)));
    }
}

TEST_CASE("Calderon identity T S = K'^2 - I holds for the sphere eigenvalues")
{
    for (double k : {0.5, 2.0, 5.0})
        for (int n = 0; n <= 10; ++n) {
            const cplx T = sphere_operator_eigenvalue(OperatorKind::T, k, 1.0, n);
            const cplx S = sphere_operator_eigenvalue(OperatorKind::S, k, 1.0, n);
            const cplx Kp = sphere_operator_eigenvalue(OperatorKind::KPrime, k, 1.0, n);
            CHECK(std::abs(T * S - (Kp * Kp - 1.0)) < 1e-12 * std::max(1.0, std::abs(Kp * Kp)));
        }
}

TEST_CASE("polar quadrature reproduces the sphere operators")
{
    const int N = 6;
    const double k = 1.3;
    const auto sphere = ObstacleGeometry::sphere(1.0);
    // a zero-amplitude perturbation keeps the general quadrature path
    const auto flat = ObstacleGeometry::perturbed_sphere(1.0, {0.0});
    REQUIRE_FALSE(flat.is_sphere());
    const SurfaceOperators exact = surface_operators(k, sphere, N);
    const SurfaceOperators quad = surface_operators(k, flat, N);
    CHECK(exact.diagonal);
    CHECK_FALSE(quad.diagonal);
    for (W w : {W::S, W::K, W::KPrime, W::T_S0sq, W::S0}) {
        const Eigen::MatrixXcd d = quad.matrix(w) - exact.matrix(w);
        CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("multiplication operator")
{
    const int N = 5;
    const auto c = assemble_multiplication(ImpedanceField::constant(2.5), N);
    CHECK((c.entries - cplx(0, 2.5) * Eigen::MatrixXcd::Identity(36, 36)).norm() < 1e-14);

    std::vector<double> coeffs(harmonic_count(2), 0.0);
    coeffs[0] = 2.0 * std::sqrt(4 * kPi);
    coeffs[harmonic_index(2, 1)] = 0.4;
    const ImpedanceField lam = ImpedanceField::from_coefficients(coeffs);
    const auto m = assemble_multiplication(lam, N);
    // Hermitian up to the factor i, since λ is real
    const Eigen::MatrixXcd h = m.entries / cplx(0, 1);
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK_THROWS_AS(assemble_multiplication(lam, N, N + 1), AliasingError);

    const auto inv = invert_identity_plus(m);
    CHECK(inv.residual < 1e-12);
    CHECK_FALSE(inv.ill_conditioned);
}

TEST_CASE("harmonic projection and synthesis are inverse on band-limited data")
{
    const int N = 7;
    Eigen::VectorXcd c = Eigen::VectorXcd::Random(harmonic_count(N));
    const QuadratureRule rule = gauss_product_rule(N + 1);
    const Eigen::VectorXcd v = synthesize(N, c, rule.directions);
    const Eigen::VectorXcd back = project_onto_harmonics(N, rule, v);
    CHECK((back - c).norm() < 1e-12 * c.norm());
}

TEST_CASE("combined system is well conditioned at interior Dirichlet resonances")
{
    // j_0(π) = 0 and j_1 has a zero near 4.4934: the single-layer alone is singular there
    for (double k : {kPi, 4.493409457909064}) {
        const auto sys = assemble_combined_system(k, ObstacleGeometry::sphere(1.0),
                                                  ImpedanceField::constant(0.0), default_coupling(k), 8);
        CHECK(smallest_singular_value(sys.entries) > 1e-3);
    }
}

TEST_CASE("the trace-consistent system reproduces Mie; the reduced coupling does not")
{
    const WaveContext ctx{1.0, Vec3::UnitZ()};
    const auto geom = ObstacleGeometry::sphere(1.0);
    const auto lam = ImpedanceField::constant(1.0);
    const FarField mie = mie_farfield(ctx, 1.0, 1.0, 24);
    SolverOptions opts;
    const FarField good = farfield(solve_density(ctx, geom, lam, opts), 24);
    CHECK(l2_distance(good, mie) < 1e-10 * mie.l2_norm());
    opts.form = SystemForm::ReducedCoupling;
    opts.resolution_tol = 1.0;
    const FarField reduced = farfield(solve_density(ctx, geom, lam, opts), 24);
    CHECK(l2_distance(reduced, mie) > 1e-3 * mie.l2_norm());
}

TEST_CASE("operator cache reuses entries keyed by quadrature settings")
{
    OperatorCache cache;
    const auto g = ObstacleGeometry::sphere(1.0);
    const auto a = cache.get(1.0, g, 8);
    const auto b = cache.get(1.0, g, 8);
    CHECK(a.get() == b.get());
    OperatorQuadrature q;
    q.projection_order = 14;
    const auto c = cache.get(1.0, g, 8, q);
    CHECK(c.get() != a.get());
    CHECK(cache.size() == 2u);
}

TEST_CASE("impedance field values and admissibility")
{
    const auto c = ImpedanceField::constant(0.7);
    CHECK(c.is_constant());
    CHECK(c.constant_value() == doctest::Approx(0.7));
    CHECK(c.value(Vec3(0.6, 0, 0.8)) == doctest::Approx(0.7));
    CHECK_THROWS_AS(ImpedanceField::constant(-1.0).check_admissible(), DomainError);
    CHECK_THROWS_AS(ImpedanceField::constant(2.0).check_admissible(1.0), DomainError);
    std::vector<double> co{std::sqrt(4 * kPi), 0.0, std::sqrt(4 * kPi / 3), 0.0};
    const auto p = ImpedanceField::from_coefficients(co); // 1 + cos θ
    CHECK(p.value(Vec3::UnitZ()) == doctest::Approx(2.0));
    CHECK(p.value(-Vec3::UnitZ()) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(p.plus(c, 2.0).value(Vec3::UnitX()) == doctest::Approx(2.4));
}
