#include "impscat/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "impscat/errors.hpp"
#include "impscat/parallel.hpp"

namespace impscat {

namespace {

constexpr double kE = 2.718281828459045235360287;

double abs_log(double delta, const char* what)
{
    if (!(delta > 0.0 && delta < 1.0))
        throw DomainError(std::string(what) + ": argument must lie in (0, 1)");
    return -std::log(delta);
}

/// Sup of |f| over the impedance check grid.
double sup_abs(const ImpedanceField& f)
{
    return std::max(std::abs(f.sup()), std::abs(f.inf()));
}

int farfield_order(const ObstacleGeometry& geom, const SolverOptions& options)
{
    return geom.is_sphere() ? options.band_limit : options.band_limit + 8;
}

} // namespace

double far_field_delta(const ImpedanceField& lambda, const ImpedanceField& lambda_tilde,
                       const WaveContext& ctx, const ObstacleGeometry& geom,
                       const SolverOptions& options)
{
    lambda.check_admissible();
    lambda_tilde.check_admissible();
    OperatorCache local;
    SolverOptions opts = options;
    if (!opts.cache)
        opts.cache = &local;
    const int order = farfield_order(geom, opts);
    const FarField a = farfield(solve_density(ctx, geom, lambda, opts), order);
    const FarField b = farfield(solve_density(ctx, geom, lambda_tilde, opts), order);
    return l2_distance(a, b);
}

double theorem13_inner_ratio(double delta)
{
    const double L = abs_log(delta, "double-log bound");
    return 2.0 * std::log(L) / L;
}

double theorem13_bound(double delta, double C, double sigma)
{
    const double L = abs_log(delta, "double-log bound");
    if (!(L > 1.0))
        throw DomainError("double-log bound: requires |ln delta| > 1");
    const double inner = 2.0 * std::log(L) / L;
    if (!(inner > 0.0 && inner < 1.0))
        throw DomainError("double-log bound: inner ratio outside (0, 1)");
    return C * std::pow(std::abs(std::log(inner)), -sigma);
}

double bushuyev_theta(double delta)
{
    const double L = abs_log(delta, "theta");
    return 1.0 / (1.0 + std::log(L + kE));
}

double prop41_bound(double fu_norm, double C, double sigma)
{
    const double L = abs_log(fu_norm, "prop41 bound");
    return C / std::pow(L, sigma);
}

double prop41_intermediate(double s, double C, double sigma, double N)
{
    if (!(s > 0.0))
        throw DomainError("prop41 intermediate: s must be positive");
    return C / std::pow(s, sigma) + N * std::exp(s);
}

Prop41Minimizer prop41_minimizer(double C, double sigma, double N)
{
    if (!(C > 0.0) || !(sigma > 0.0) || !(N > 0.0))
        throw DomainError("prop41 minimiser: C, sigma and N must be positive");
    // g(s) = ln(σC) - (σ+1) ln s - ln N - s is strictly decreasing on (0, ∞)
    const double c0 = std::log(sigma * C) - std::log(N);
    auto g = [&](double s) { return c0 - (sigma + 1.0) * std::log(s) - s; };
    double lo = 1e-300, hi = 1.0;
    for (int i = 0; g(hi) > 0.0; ++i) {
        lo = hi;
        hi *= 2.0;
        if (i > 2000)
            throw ConvergenceError("prop41 minimiser: no sign change found");
    }
    if (!(g(lo) > 0.0))
        throw ConvergenceError("prop41 minimiser: no sign change found");
    Prop41Minimizer out;
    for (; out.iterations < 2000; ++out.iterations) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    out.s_hat = std::abs(g(lo)) < std::abs(g(hi)) ? lo : hi;
    const double a = sigma * C / std::pow(out.s_hat, sigma + 1.0);
    out.residual = std::abs(-a + N * std::exp(out.s_hat)) / a;
    return out;
}

Lemma51Result lemma51_check(const WaveContext& ctx, const ObstacleGeometry& geom,
                            const ImpedanceField& lambda, std::vector<double> candidates,
                            const SolverOptions& options, int grid_order)
{
    if (candidates.empty())
        throw DomainError("lemma51: no candidate radii");
    std::sort(candidates.begin(), candidates.end());
    const ScatteringSolution sol = solve_density(ctx, geom, lambda, options);
    const QuadratureRule rule = gauss_product_rule(grid_order);
    Lemma51Result res;
    const double inner = geom.max_radius();
    for (double R : candidates) {
        if (!(R > inner))
            continue;
        double sup_s = 0.0, min_u = std::numeric_limits<double>::infinity();
        for (double f : {1.0, 2.0, 4.0, 8.0})
            for (const Vec3& d : rule.directions) {
                const Vec3 x = f * R * d;
                const cplx us = eval_scattered(x, sol);
                const cplx ui = std::exp(cplx(0.0, ctx.k * x.dot(ctx.omega)));
                sup_s = std::max(sup_s, std::abs(us));
                min_u = std::min(min_u, std::abs(ui + us));
            }
        res.candidates.push_back(R);
        res.sup_scattered.push_back(sup_s);
        res.min_total.push_back(min_u);
        if (!res.found && min_u >= 0.5) {
            res.found = true;
            res.R = R;
        }
    }
    return res;
}

ImpedanceField default_perturbation_shape()
{
    return ImpedanceField::from_coefficients(
        {std::sqrt(4.0 * kPi), 0.0, std::sqrt(4.0 * kPi / 3.0), 0.0});
}

StabilitySweep stability_sweep(const ImpedanceField& base, const ImpedanceField& shape,
                               std::vector<double> epsilons, const WaveContext& ctx,
                               const ObstacleGeometry& geom, const SolverOptions& options,
                               const std::vector<double>& sigma_grid, unsigned threads)
{
    if (epsilons.empty())
        throw DomainError("stability sweep: empty epsilon list");
    if (sigma_grid.empty())
        throw DomainError("stability sweep: empty sigma grid");
    std::sort(epsilons.begin(), epsilons.end());
    epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());
    base.check_admissible();
    std::vector<ImpedanceField> perturbed;
    for (double eps : epsilons) {
        if (!(eps >= 0.0))
            throw DomainError("stability sweep: epsilon must be nonnegative");
        perturbed.push_back(base.plus(shape, eps));
        perturbed.back().check_admissible();
    }

    OperatorCache local;
    SolverOptions opts = options;
    if (!opts.cache)
        opts.cache = &local;
    const int order = farfield_order(geom, opts);
    const FarField reference = farfield(solve_density(ctx, geom, base, opts), order);

    StabilitySweep out;
    out.records.resize(epsilons.size());
    parallel_for(epsilons.size(), threads, [&](std::size_t i) {
        StabilityRecord& rec = out.records[i];
        rec.epsilon = epsilons[i];
        if (epsilons[i] == 0.0)
            return;
        const FarField f = farfield(solve_density(ctx, geom, perturbed[i], opts), order);
        rec.delta = l2_distance(reference, f);
        rec.dsup = sup_abs(perturbed[i].plus(base, -1.0));
    });

    for (std::size_t i = 1; i < out.records.size(); ++i)
        if (!(out.records[i].delta > out.records[i - 1].delta))
            out.delta_monotone = false;

    // smallest C over the σ grid with C |ln inner(δ)|^{-σ} ≥ dsup on every record
    double best_C = std::numeric_limits<double>::infinity(), best_sigma = sigma_grid.front();
    for (double sigma : sigma_grid) {
        double C = 0.0;
        for (const StabilityRecord& rec : out.records) {
            if (rec.delta == 0.0)
                continue;
            const double t = theorem13_bound(rec.delta, 1.0, sigma);
            C = std::max(C, rec.dsup / t);
        }
        if (C < best_C) {
            best_C = C;
            best_sigma = sigma;
        }
    }
    out.C_fit = best_C;
    out.sigma_fit = best_sigma;
    for (StabilityRecord& rec : out.records)
        rec.bound = rec.delta == 0.0 ? 0.0 : theorem13_bound(rec.delta, best_C, best_sigma);
    return out;
}

ReconstructionResult reconstruct(const FarField& data, const WaveContext& ctx,
                                 const ObstacleGeometry& geom, const ImpedanceField& prior,
                                 double reg, const SolverOptions& options,
                                 const ReconstructionOptions& ropts)
{
    if (!(reg > 0.0))
        throw DomainError("reconstruct: regularisation must be positive");
    if (ropts.degree < 0 || ropts.degree > 4)
        throw DomainError("reconstruct: degree must lie in [0, 4]");
    prior.check_admissible();

    const int P = harmonic_count(ropts.degree);
    Eigen::VectorXd c_prior = Eigen::VectorXd::Zero(P);
    for (int i = 0; i < P && i < static_cast<int>(prior.coefficients().size()); ++i)
        c_prior[i] = prior.coefficients()[i];

    OperatorCache local;
    SolverOptions opts = options;
    if (!opts.cache)
        opts.cache = &local;
    const std::size_t Q = data.values.size();
    const int rows = static_cast<int>(2 * Q) + P;
    std::vector<double> sqrt_w(Q);
    for (std::size_t q = 0; q < Q; ++q)
        sqrt_w[q] = std::sqrt(data.rule.weights[q]);
    const double sqrt_reg = std::sqrt(reg);

    auto field_of = [&](const Eigen::VectorXd& c) {
        return ImpedanceField::from_coefficients(std::vector<double>(c.data(), c.data() + P));
    };
    auto admissible = [&](const Eigen::VectorXd& c) {
        try {
            field_of(c).check_admissible();
            return true;
        } catch (const DomainError&) {
            return false;
        }
    };
    auto residual = [&](const Eigen::VectorXd& c) {
        const FarField f = farfield(solve_density(ctx, geom, field_of(c), opts), data.rule.order);
        Eigen::VectorXd r(rows);
        for (std::size_t q = 0; q < Q; ++q) {
            const cplx d = f.values[q] - data.values[q];
            r[2 * q] = sqrt_w[q] * d.real();
            r[2 * q + 1] = sqrt_w[q] * d.imag();
        }
        r.tail(P) = sqrt_reg * (c - c_prior);
        return r;
    };
    auto misfit_of = [&](const Eigen::VectorXd& r) { return r.head(2 * Q).norm(); };

    Eigen::VectorXd c = c_prior;
    Eigen::VectorXd r = residual(c);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    ReconstructionResult res;

    for (res.iterations = 0; res.iterations < ropts.max_iterations; ++res.iterations) {
        Eigen::MatrixXd J(rows, P);
        parallel_for(P, ropts.threads, [&](std::size_t j) {
            Eigen::VectorXd cp = c;
            double h = ropts.fd_step * std::max(1.0, std::abs(c[j]));
            cp[j] += h;
            if (!admissible(cp)) {
                h = -h;
                cp[j] = c[j] + h;
            }
            J.col(j) = (residual(cp) - r) / h;
        });
        const Eigen::VectorXd grad = J.transpose() * r;
        res.gradient_norm = 2.0 * grad.norm();
        if (res.gradient_norm < ropts.gradient_tol || misfit_of(r) < ropts.misfit_tol) {
            res.converged = true;
            break;
        }
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        bool accepted = false, stop = false;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal().array() += mu * (JtJ.diagonal().array().maxCoeff() + 1e-30);
            const Eigen::VectorXd step = A.ldlt().solve(-grad);
            const Eigen::VectorXd trial = c + step;
            if (admissible(trial)) {
                const Eigen::VectorXd rt = residual(trial);
                const double ct = rt.squaredNorm();
                if (ct < cost) {
                    const bool stalled = step.norm() <= 1e-15 * std::max(1.0, c.norm());
                    c = trial;
                    r = rt;
                    cost = ct;
                    mu = std::max(mu / 3.0, 1e-15);
                    accepted = true;
                    if (stalled)
                        stop = true;
                }
            }
            if (!accepted)
                mu *= 4.0;
        }
        if (stop) {
            res.converged = true;
            ++res.iterations;
            break;
        }
        if (!accepted) {
            // no descent direction left at working precision
            res.converged = res.gradient_norm < 1e-6 * std::max(1.0, cost);
            break;
        }
    }
    res.lambda = field_of(c);
    res.misfit = misfit_of(r);
    return res;
}

} // namespace impscat
