#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "impscat/fields.hpp"
#include "impscat/geometry.hpp"

namespace impscat {

/// Weighted estimate on the annulus ρ ≤ |x - x0| ≤ ρ + d with weight φ = e^{λψ},
/// ψ(x) = ln((ρ+d)² / |x - x0|²).
struct CarlemanSetup
{
    Vec3 x0 = Vec3::Zero();
    double rho = 1.0;
    double d = 1.0;
    double lambda_w = 1.0;
    double tau = 1.0;
    double m = 1.0;
    double M = 1.0;

    /// Admissible thresholds 6M³/m⁴ and 88M⁶/m⁴.
    double lambda_threshold() const;
    double tau_threshold() const;
    double psi_max() const; // ψ on the inner sphere
};

/// Setup with m = min(1, 2/(ρ+d)), M = max(1, Σ_{|α|≤2} sup|∂^α ψ|) in closed form and
/// (λ_w, τ) at the admissible thresholds.
CarlemanSetup make_carleman_setup(const Vec3& x0, double rho, double d);

/// Σ_{|α|≤2} sup|∂^α ψ| with each supremum taken over a grid of the annulus.
double psi_c2_norm_on_grid(double rho, double d, int grid_order = 24, int radial_points = 16);

/// min |∇ψ| over the same kind of grid.
double psi_min_gradient_on_grid(double rho, double d, int grid_order = 24, int radial_points = 16);

struct CarlemanQuadrature
{
    int angular_order = 24;
    int radial_points = 12; // Gauss points per panel
    double cutoff = 90.0;   // weights below e^{-cutoff} times the maximum are dropped
    bool enforce_thresholds = true;
};

/// Both sides divided by the common factor e^{2τφ_max}, φ_max = φ on the inner sphere.
/// log_common = ln(2τφ_max) so that the true sides are exp(e^{log_common}) · exp(log_side).
struct CarlemanSides
{
    double log_lhs = 0.0;
    double log_rhs = 0.0;
    double log_common = 0.0;

    double log_ratio() const { return log_rhs - log_lhs; }
    bool holds() const;
};

/// lhs = ∫ e^{2τφ}(m⁴λ⁴τ³φ³|v|² + m²λ²τφ|∇v|²),
/// rhs = 8∫ e^{2τφ}|Δv|² + 48∫_Γ e^{2τφ}(M³λ³τ³φ³|v|² + Mλτφ|∇v|²), Γ both spheres.
/// Throws DomainError below the admissible thresholds unless enforcement is switched off.
CarlemanSides carleman_sides(const Field& v, const CarlemanSetup& setup,
                             const CarlemanQuadrature& quad = {});

struct ThresholdPair
{
    double lambda_min = 0.0;
    double tau_min = 0.0;
};

struct CorollaryThresholds
{
    ThresholdPair primary;   // λ ≥ 6M³/m⁴, τ ≥ max(88M⁶, 16Λ)/m⁴
    ThresholdPair alternate; // λ ≥ max(6M³, 16Λ)/m⁴, τ ≥ 88M⁶/m⁴
};

CorollaryThresholds corollary_thresholds(double Lambda, double m, double M);

struct CarlemanCase
{
    std::string function;
    double multiplier = 1.0;
    CarlemanSides sides;
};

struct CarlemanSuiteReport
{
    std::vector<CarlemanCase> cases;
    int failures = 0;
    int monotonicity_violations = 0; // log ratio decreasing by more than ln(1.01) as τ grows
};

/// Random real plane waves (k ∈ [0.5, 4]) alternating with random quadratics.
std::vector<FieldPtr> carleman_test_functions(std::uint64_t seed, int count = 50);

/// Evaluates every function at the setup's (λ_w, τ) scaled by each multiplier.
CarlemanSuiteReport carleman_suite(const CarlemanSetup& setup,
                                   const std::vector<FieldPtr>& functions,
                                   const std::vector<double>& multipliers = {1.0, 2.0, 4.0},
                                   const CarlemanQuadrature& quad = {}, unsigned threads = 0);

struct ContinuationConstants
{
    double log_alpha = 0.0;
    double log_beta = 0.0;
    double gamma = 0.5;
    double log_one_minus_gamma = 0.0; // ln(α / (α + β))

    double alpha() const;
    double beta() const;
};

/// α = λ(ρ+d)^{2λ} / (2(ρ+3d/4)^{2λ+1}), β = λ(ρ+d)^{2λ} / ρ^{2λ+1}, γ = β/(α+β), in logs.
ContinuationConstants continuation_constants(double rho, double d, double lambda_w);

struct ContinuationOptions
{
    double wavenumber = 1.0;          // Λ = 4k⁴ for Δ + k²
    double computational_radius = -1; // Ω ∩ B(0, R); default 2 max_radius
    int angular_order = 24;
    int radial_points = 16;
    int azimuth_points = 64;
};

struct ContinuationReport
{
    double r = 0.0;
    double lhs = 0.0;          // r² ‖u‖_{H¹(𝓑(x̃, r/4) ∩ Ω)}
    double rhs = 0.0;          // ‖u‖_{H²(Ω)}^{1-γ/2} (‖u‖_{L²(cap)} + ‖|∇u|‖_{L²(cap)})^{γ/2}
    double gamma = 0.5;
    double C_emp = 0.0;        // rhs / lhs
    double lens_measure = 0.0; // |𝓑(x̃, r/4) ∩ Ω|
    double cap_area = 0.0;     // |𝓑(x̃, r) ∩ ∂D|
    double h2_norm = 0.0;
    double lens_h1_norm = 0.0;
    double cap_value_norm = 0.0;
    double cap_gradient_norm = 0.0;
};

/// Both sides of the H¹ form of the continuation estimate from Cauchy data near x̃, with
/// 𝓑(x̃, s) = B(x0, ρ + s) for the exterior contact ball B(x0, ρ) at x̃.
/// Throws GeometryError if the lens has measure below 1e-8.
ContinuationReport continuation_check(const Field& u, const Vec3& x_tilde, double r,
                                      const ObstacleGeometry& geom,
                                      const ContinuationOptions& options = {});

/// ‖u‖_{H¹(B(c, R))} from analytic derivatives.
double ball_h1_norm(const Field& u, const Vec3& center, double radius, int angular_order = 16,
                    int radial_points = 16);

struct ThreeSphereMember
{
    std::string name;
    double n1 = 0.0, n2 = 0.0, n3 = 0.0; // H¹ norms on B(y, r), B(y, 2r), B(y, 3r)
};

struct ThreeSphereReport
{
    std::vector<ThreeSphereMember> members;
    double alpha_hat = 0.0; // least-squares exponent of log(r n2/n3) against log(n1/n3)
    double log_C = 0.0;     // smallest ln C dominating every member at α̂
    int monotonicity_violations = 0;
    bool degenerate = false; // no spread in log(n1/n3) across the family

    double C() const;
};

/// Fits r‖u‖_{H¹(B(y,2r))} ≤ C‖u‖_{H¹(B(y,r))}^α ‖u‖_{H¹(B(y,3r))}^{1-α} over a family.
/// Throws DomainError for fewer than 5 members; ResolutionError if a middle norm exceeds the
/// outer one.
ThreeSphereReport three_sphere_check(const std::vector<FieldPtr>& family, const Vec3& y, double r,
                                     int angular_order = 16, int radial_points = 16);

/// Eight real plane waves cos(k d·x + φ) with random d and φ.
std::vector<FieldPtr> plane_wave_family(double k, std::uint64_t seed, int count = 8);

struct ChainBound
{
    int N = 0;
    double alpha = 0.5;
    std::vector<double> log_I;          // iterated upper bounds ln I_k, k = 0..N
    std::vector<double> log_I_closed;   // (C/ρ0)^{(1-α^k)/(1-α)} M̃^{1-α^k} I0^{α^k}
    std::vector<double> log_I_radii;    // iteration with the actual ρ_k in the denominators
    double max_exponent_mismatch = 0.0; // |iterated - closed form| exponent of C/ρ0
    double log_I0_recovered = 0.0;      // inversion of the closed form from I_N
    double gamma = 0.0;                 // n/2 + β
    double beta = 0.0;                  // 1/(1-α)
    double s = 0.0;                     // 6|ln α|
    double eta = 0.0;                   // s + 1
    double log_lower_bound = 0.0;       // (γ/α^N) ln(C r)
    double log_simplified_bound = 0.0;  // -C / r^η
};

/// Propagates the three-sphere estimate along the chain and inverts it.
ChainBound chain_lower_bound(const ConeChain& chain, double I0, double M_tilde, double C,
                             double alpha, double r, int dimension = 3);

/// ln I0 implied by a value of I_N through the closed form.
double chain_invert(const ChainBound& bound, double log_IN, double C, double M_tilde,
                    double rho0);

struct WitnessSet
{
    std::vector<std::size_t> nodes;
    bool empty = true;
    double max_abs = 0.0; // sup |u| over the nodes inside the ball
};

/// Nodes of B(x̃, r*) ∩ Γ0 where |u| ≥ δ.
WitnessSet lemma42_witness(const std::vector<Vec3>& points, const Eigen::VectorXcd& values,
                           const Vec3& x_tilde, double r_star, double delta);

} // namespace impscat
