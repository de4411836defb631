#pragma once

#include <vector>

#include "impscat/forward.hpp"

namespace impscat {

/// ‖u∞(λ) - u∞(λ̃)‖_{L²(S²)} from two forward solves sharing the operator cache.
double far_field_delta(const ImpedanceField& lambda, const ImpedanceField& lambda_tilde,
                       const WaveContext& ctx, const ObstacleGeometry& geom,
                       const SolverOptions& options = {});

/// C |ln(2 ln|ln δ| / |ln δ|)|^{-σ}. Throws DomainError unless |ln δ| > 1 and the inner
/// ratio lies in (0, 1).
double theorem13_bound(double delta, double C, double sigma);

/// 2 ln|ln δ| / |ln δ|.
double theorem13_inner_ratio(double delta);

/// θ(δ) = 1 / (1 + ln(|ln δ| + e)) for δ ∈ (0, 1).
double bushuyev_theta(double delta);

/// C / |ln ‖fu‖|^σ for ‖fu‖ ∈ (0, 1).
double prop41_bound(double fu_norm, double C, double sigma);

/// C/s^σ + N e^s, the bound before optimising over s = |ln δ|.
double prop41_intermediate(double s, double C, double sigma, double N);

struct Prop41Minimizer
{
    double s_hat = 0.0;
    double residual = 0.0; // |−σC/ŝ^{σ+1} + N e^ŝ| relative to σC/ŝ^{σ+1}
    int iterations = 0;
};

/// Root of −σC/s^{σ+1} + N e^s = 0 by bisection on its logarithmic form.
/// Throws ConvergenceError if no bracket is found.
Prop41Minimizer prop41_minimizer(double C, double sigma, double N);

struct Lemma51Result
{
    bool found = false;
    double R = 0.0;
    std::vector<double> candidates;
    std::vector<double> sup_scattered; // max over the shells scanned for each candidate
    std::vector<double> min_total;     // min |u| over the same shells
};

/// Smallest candidate R with |u(x)| ≥ 1/2 on the shells |x| ∈ {1, 2, 4, 8}·R.
/// Candidates inside the obstacle are skipped. Never throws on "not found"; see `found`.
Lemma51Result lemma51_check(const WaveContext& ctx, const ObstacleGeometry& geom,
                            const ImpedanceField& lambda, std::vector<double> candidates,
                            const SolverOptions& options = {}, int grid_order = 16);

struct StabilityRecord
{
    double epsilon = 0.0;
    double delta = 0.0;
    double dsup = 0.0;
    double bound = 0.0;
};

struct StabilitySweep
{
    std::vector<StabilityRecord> records; // ε increasing
    double C_fit = 0.0;
    double sigma_fit = 0.0;
    bool delta_monotone = true; // δ strictly decreasing as ε decreases
};

/// Default perturbation shape 1 + cos θ (nonnegative, degree 1).
ImpedanceField default_perturbation_shape();

/// Records for λ + ε p over the ε list, with the dominating curve C|ln(2ln|lnδ|/|lnδ|)|^{-σ}
/// of smallest C over the σ grid. Throws DomainError if any λ + ε p is negative.
StabilitySweep stability_sweep(const ImpedanceField& base, const ImpedanceField& shape,
                               std::vector<double> epsilons, const WaveContext& ctx,
                               const ObstacleGeometry& geom, const SolverOptions& options = {},
                               const std::vector<double>& sigma_grid = {0.25, 0.5, 1.0, 2.0},
                               unsigned threads = 1);

struct ReconstructionOptions
{
    int degree = 0;           // harmonic degree of the unknown impedance, at most 4
    int max_iterations = 50;
    double gradient_tol = 1e-12;
    double misfit_tol = 1e-12;
    double fd_step = 1e-6;
    unsigned threads = 1;
};

struct ReconstructionResult
{
    ImpedanceField lambda;
    double misfit = 0.0;        // ‖u∞(λ) - data‖_{L²(S²)}
    double gradient_norm = 0.0; // of the regularised objective
    int iterations = 0;
    bool converged = false;
};

/// Levenberg-Marquardt on ‖u∞(λ) - data‖² + reg ‖λ - prior‖² over nonnegative impedances of
/// the given degree, with finite-difference Jacobians. Returns the best iterate; `converged`
/// is false when the iteration budget runs out.
ReconstructionResult reconstruct(const FarField& data, const WaveContext& ctx,
                                 const ObstacleGeometry& geom, const ImpedanceField& prior,
                                 double reg, const SolverOptions& options = {},
                                 const ReconstructionOptions& ropts = {});

} // namespace impscat
