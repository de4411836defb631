// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <string>

#include "impscat/carleman.hpp"
#include "impscat/forward.hpp"
#include "impscat/geometry.hpp"
#include "impscat/stability.hpp"

using namespace impscat;

namespace {

int failures = 0;

void report(int id, const std::string& name, const std::function<std::string(bool&)>& body)
{
    bool ok = false;
    std::string detail;
    try {
        detail = body(ok);
    } catch (const std::exception& e) {
        ok = false;
        detail = std::string("exception: ") + e.what();
    }
    if (!ok)
        ++failures;
    std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

} // namespace

int main()
{
    const auto unit = ObstacleGeometry::sphere(1.0);

    report(1, "sphere solver vs Mie series, N = 24", [&](bool& ok) {
        double worst = 0.0;
        for (double k : {0.5, 1.0, 2.0, 4.0})
            for (double lam : {0.0, 0.5, 1.0, 5.0}) {
                const WaveContext ctx{k, Vec3::UnitZ()};
                SolverOptions o;
                o.band_limit = 24;
                const FarField f = farfield(solve_density(ctx, unit, ImpedanceField::constant(lam), o), 24);
                const FarField m = mie_farfield(ctx, 1.0, lam, 24);
                worst = std::max(worst, l2_distance(f, m) / m.l2_norm());
            }
        ok = worst <= 1e-8;
        return fmt("max relative L2 error %.3e (tol 1e-8)", worst);
    });

    report(2, "far-field remainder slope", [&](bool& ok) {
        const WaveContext ctx{1.0, Vec3::UnitZ()};
        const auto sol = solve_density(ctx, unit, ImpedanceField::constant(1.0));
        const Vec3 dir = Vec3(0.3, 0.4, 0.8).normalized();
        const cplx finf = farfield_at(sol, dir);
        auto rem = [&](double r) {
            return std::abs(r * std::exp(cplx(0, -r)) * eval_scattered(r * dir, sol) - finf);
        };
        const double slope = (std::log(rem(1e4)) - std::log(rem(1e2))) / (std::log(1e4) - std::log(1e2));
        ok = std::abs(slope + 1.0) <= 0.05;
        return fmt("slope %.4f (target -1 +- 0.05)", slope);
    });

    report(3, "Carleman suite, 50 functions at 1x/2x/4x thresholds", [&](bool& ok) {
        const CarlemanSetup s = make_carleman_setup(Vec3::Zero(), 1.0, 1.0);
        const CarlemanSuiteReport rep = carleman_suite(s, carleman_test_functions(20240601, 50));
        ok = rep.failures == 0 && rep.cases.size() == 150;
        return fmt("%.0f cases, %.0f failures, %.0f monotonicity violations", double(rep.cases.size()),
                   double(rep.failures), double(rep.monotonicity_violations));
    });

    report(4, "three-sphere fit on 8 plane waves, k = 2, r = 0.2", [&](bool& ok) {
        const ThreeSphereReport rep = three_sphere_check(plane_wave_family(2.0, 7, 8), Vec3::Zero(), 0.2);
        ok = rep.alpha_hat > 0.01 && rep.alpha_hat < 0.99 && std::isfinite(rep.C()) &&
             rep.monotonicity_violations == 0;
        return fmt("alpha %.4f, C %.4g, violations %.0f", rep.alpha_hat, rep.C(),
                   double(rep.monotonicity_violations));
    });

    report(5, "cone chain, theta = pi/6, R = 8, r = 0.1", [&](bool& ok) {
        const ConeChain c = build_cone_chain(Vec3::UnitZ(), 0.1, unit, 8.0);
        int brute = 0;
        const double mu = chain_ratio(kPi / 6);
        while (std::pow(mu, brute + 1) * 0.05 <= 1.0)
            ++brute;
        const ChainDiagnostics d = chain_diagnostics(c, unit, 8.0);
        const ChainBound b = chain_lower_bound(c, 1e-3, 2.0, 1.5, 0.5, 0.1);
        ok = c.count == 22 && brute == 22 && d.max_nesting_excess <= 1e-12 && d.max_outer_excess <= 1e-12 &&
             d.final_inner_margin >= -1e-12 && d.min_clearance > 0.0 && b.max_exponent_mismatch <= 1e-12;
        return fmt("N %.0f, nesting excess %.2e, exponent mismatch %.2e", double(c.count),
                   d.max_nesting_excess, b.max_exponent_mismatch);
    });

    report(6, "energy identity, ka = 1, lambda = 1", [&](bool& ok) {
        const auto sol = solve_density({1.0, Vec3::UnitZ()}, unit, ImpedanceField::constant(1.0));
        const EnergyBalance e = energy_identity(sol);
        const double rel = std::abs(e.residual) / e.absorption;
        ok = rel <= 1e-8;
        return fmt("relative residual %.3e (tol 1e-8)", rel);
    });

    report(7, "stability sweep dominance and refinement", [&](bool& ok) {
        const WaveContext ctx{1.0, Vec3::UnitZ()};
        const std::vector<double> eps{0.1, 0.05, 0.025, 0.0125};
        const auto base = ImpedanceField::constant(1.0);
        const StabilitySweep s = stability_sweep(base, default_perturbation_shape(), eps, ctx, unit);
        SolverOptions fine;
        fine.band_limit = 32;
        const StabilitySweep r = stability_sweep(base, default_perturbation_shape(), eps, ctx, unit, fine);
        bool dominated = true;
        for (const auto& rec : s.records)
            dominated = dominated && rec.dsup <= rec.bound * (1 + 1e-12);
        const double ratio = std::max(s.C_fit / r.C_fit, r.C_fit / s.C_fit);
        ok = s.delta_monotone && dominated && ratio <= 2.0;
        return fmt("C %.4g sigma %.2f, C ratio under N+8 %.6f", s.C_fit, s.sigma_fit, ratio);
    });

    report(8, "closed-form bound evaluators", [&](bool& ok) {
        const double e = std::exp(1.0);
        const double a = std::abs(theorem13_bound(std::exp(-e * e), 1.0, 1.0) - 1.0 / (2.0 - std::log(4.0)));
        const double b = std::abs(bushuyev_theta(std::exp(-e)) - 1.0 / (2.0 + std::log(2.0)));
        const double c = prop41_minimizer(1.0, 1.0, 1e-6).residual;
        ok = a <= 1e-14 && b <= 1e-14 && c <= 1e-12;
        return fmt("errors %.2e, %.2e; stationarity residual %.2e", a, b, c);
    });

    report(9, "reconstruction round trip and zero perturbation", [&](bool& ok) {
        const WaveContext ctx{1.0, Vec3::UnitZ()};
        const FarField data = farfield(solve_density(ctx, unit, ImpedanceField::constant(1.0)), 24);
        const auto r = reconstruct(data, ctx, unit, ImpedanceField::constant(0.5), 1e-10);
        const double err = std::abs(r.lambda.constant_value() - 1.0);
        const StabilitySweep z =
            stability_sweep(ImpedanceField::constant(1.0), default_perturbation_shape(), {0.0}, ctx, unit);
        ok = err <= 1e-3 && z.records[0].delta == 0.0 && z.records[0].dsup == 0.0;
        return fmt("recovered error %.3e, zero sweep delta %.1e dsup %.1e", err, z.records[0].delta,
                   z.records[0].dsup);
    });

    report(10, "uniform bound across lambda in {0, M/2, M}, M = 5", [&](bool& ok) {
        const double M = 5.0;
        const UniformBoundReport rep = uniform_bound_check(
            M, {ImpedanceField::constant(0.0), ImpedanceField::constant(M / 2), ImpedanceField::constant(M)},
            {1.0, Vec3::UnitZ()}, unit);
        ok = std::isfinite(rep.max_sup) && rep.spread <= 2.0;
        return fmt("max sup %.4f, spread %.4f (tol 2)", rep.max_sup, rep.spread);
    });

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
