#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "impscat/geometry.hpp"
#include "impscat/layer_ops.hpp"

namespace impscat {

/// Incident plane wave e^{ik x·ω}.
struct WaveContext
{
    double k = 1.0;
    Vec3 omega = Vec3::UnitZ();

    void validate() const;
};

struct HarmonicDensity
{
    int band_limit = 0;
    Eigen::VectorXcd coeffs;
};

struct SolverOptions
{
    int band_limit = 24;
    double eta = 0.0; // 0 selects max(1, k)
    SystemForm form = SystemForm::Consistent;
    double resolution_tol = 1e-10; // tail energy of the top two degrees over total energy
    OperatorQuadrature quadrature;
    OperatorCache* cache = nullptr;
};

/// Boundary nodes carrying the density values, used by direct quadrature of the ansatz.
struct SourceNodes
{
    std::vector<ObstacleGeometry::SurfacePoint> points;
    std::vector<double> weights; // dΩ weight times surface jacobian
    Eigen::VectorXcd phi, psi;
};

/// Density of the combined-field ansatz and everything needed to evaluate the field it represents.
struct ScatteringSolution
{
    WaveContext ctx;
    ObstacleGeometry geom = ObstacleGeometry::sphere(1.0);
    ImpedanceField lambda;
    double eta = 1.0;
    HarmonicDensity phi;
    Eigen::VectorXcd psi; // S₀²φ
    double residual = 0.0;
    double tail_ratio = 0.0;
    bool truncation_warning = false;
    std::shared_ptr<const SurfaceOperators> ops;
    std::shared_ptr<const SourceNodes> sources; // perturbed geometry only

    int band_limit() const { return phi.band_limit; }
};

/// Solves the combined-field boundary integral equation for the impedance problem.
/// Throws SingularityError for a singular system and ResolutionError if the density is not
/// resolved by the band limit.
ScatteringSolution solve_density(const WaveContext& ctx, const ObstacleGeometry& geom,
                                 const ImpedanceField& lambda, const SolverOptions& options = {});

/// Scattered field at an exterior point. Sets *near_boundary when the point is closer to the
/// boundary than 2π/(kN).
cplx eval_scattered(const Vec3& x, const ScatteringSolution& sol, bool* near_boundary = nullptr);

/// Far-field samples on a product rule.
struct FarField
{
    QuadratureRule rule;
    std::vector<cplx> values;

    double l2_norm() const;
};

/// ‖f - g‖_{L²(S²)} for far fields sampled on the same rule.
double l2_distance(const FarField& f, const FarField& g);

/// Far field u∞ with u^s(x) = e^{ik|x|}/|x| [u∞(x̂) + O(1/|x|)].
cplx farfield_at(const ScatteringSolution& sol, const Vec3& dir);
FarField farfield(const ScatteringSolution& sol, int rule_order = -1);

/// Mode coefficients c_n of the scattered field Σ iⁿ(2n+1) c_n h_n(kr) P_n(x̂·ω) for the
/// sphere of radius a with constant impedance λ₀, truncated when the tail drops below `tol`.
std::vector<cplx> mie_coefficients(double k, double a, double lambda0, double tol = 1e-14);

cplx mie_farfield_at(const WaveContext& ctx, double a, double lambda0, const Vec3& dir);
FarField mie_farfield(const WaveContext& ctx, double a, double lambda0, int rule_order = 24);

/// Total field and its outward normal derivative on the boundary at the nodes of a product rule.
struct BoundaryTraces
{
    QuadratureRule rule;
    std::vector<ObstacleGeometry::SurfacePoint> points;
    Eigen::VectorXcd u, dnu;     // total field
    Eigen::VectorXcd us, dnus;   // scattered part
};

BoundaryTraces boundary_traces(const ScatteringSolution& sol, int rule_order = -1);

struct EnergyBalance
{
    double flux = 0.0;       // Im ∫ u ∂_{ν_in} ū ds, ν_in pointing into the obstacle
    double absorption = 0.0; // ∫ λ |u|² ds
    double residual = 0.0;   // flux + absorption
};

/// Energy balance from boundary samples of u and its derivative along the normal pointing out of
/// the obstacle; the reported flux uses the inward normal so the balance reads flux + absorption = 0.
EnergyBalance energy_identity(const ObstacleGeometry& geom, const ImpedanceField& lambda,
                              const QuadratureRule& rule, const Eigen::VectorXcd& u,
                              const Eigen::VectorXcd& dnu);

EnergyBalance energy_identity(const ScatteringSolution& sol, int rule_order = -1);

struct UniformBoundReport
{
    std::vector<double> sup_total;     // sup |u| over the shell, per impedance
    std::vector<double> sup_scattered; // sup |u^s| over the shell
    std::vector<double> min_total;     // min |u| over the shell
    double max_sup = 0.0;
    double min_sup = 0.0;
    double spread = 1.0; // max_sup / min_sup
};

/// Evaluates sup |u| on the shells |x| ∈ {1.5, 2, 4, 8} max_radius for each impedance.
UniformBoundReport uniform_bound_check(double M, const std::vector<ImpedanceField>& samples,
                                       const WaveContext& ctx, const ObstacleGeometry& geom,
                                       const SolverOptions& options = {});

} // namespace impscat
