#pragma once

#include <vector>

#include "impscat/specfun.hpp"

namespace impscat {

/// Star-shaped obstacle D centred at the origin: r(x̂) = a + Σ c_i R_i(x̂) with real
/// orthonormal harmonics R_i. The exterior Ω = ℝ³ \ D̄ is the propagation domain.
class ObstacleGeometry
{
  public:
    enum class Kind { Sphere, PerturbedSphere };

    static ObstacleGeometry sphere(double radius, double exterior_radius = -1.0,
                                   double cone_half_angle = kPi / 6.0);

    /// `coefficients` are real-harmonic coefficients of r(x̂) - radius, index harmonic_index(n, m).
    static ObstacleGeometry perturbed_sphere(double radius, std::vector<double> coefficients,
                                             double exterior_radius = -1.0,
                                             double cone_half_angle = kPi / 6.0);

    Kind kind() const { return kind_; }
    bool is_sphere() const { return kind_ == Kind::Sphere; }
    double base_radius() const { return radius_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    int perturbation_degree() const { return degree_; }

    /// Radius of the exterior touching ball used by GA0/GA1 checks.
    double exterior_radius() const { return exterior_radius_; }
    double cone_half_angle() const { return cone_half_angle_; }

    double radial(const Vec3& dir) const;

    struct SurfacePoint
    {
        Vec3 dir;      // parameter direction x̂
        Vec3 x;        // boundary point r(x̂) x̂
        Vec3 normal;   // unit normal pointing out of D (into Ω)
        double jacobian; // ds = jacobian dΩ(x̂)
    };

    SurfacePoint surface_point(const Vec3& dir) const;

    /// True if x lies strictly outside the closed obstacle.
    bool in_exterior(const Vec3& x) const;

    /// max |x| over the boundary, estimated on a refined grid.
    double max_radius() const;
    double min_radius() const;
    double diameter() const { return 2.0 * max_radius(); }

    /// Distance from x to the boundary, minimised over a product grid of the given order.
    double boundary_distance(const Vec3& x, int grid_order = 96) const;

  private:
    Kind kind_ = Kind::Sphere;
    double radius_ = 1.0;
    std::vector<double> coefficients_;
    int degree_ = 0;
    double exterior_radius_ = 0.5;
    double cone_half_angle_ = kPi / 6.0;
    double max_radius_ = 1.0;
    double min_radius_ = 1.0;

    void validate_and_cache();
};

/// Boundary nodes of a product rule pushed onto the surface.
struct BoundarySample
{
    std::vector<ObstacleGeometry::SurfacePoint> points;
    std::vector<double> weights; // dΩ weights (parameter domain)
};

BoundarySample sample_boundary(const ObstacleGeometry& geom, const QuadratureRule& rule);

/// Centre x0 = x̃ - ρ ν(x̃) of the exterior-sphere ball B(x0, ρ) touching ∂Ω only at x̃.
/// Throws GeometryError if any node of a dense boundary sample lies strictly inside the ball.
Vec3 exterior_contact_point(const ObstacleGeometry& geom, const Vec3& x_tilde,
                            int grid_order = 100);

/// μ = (3 + 2 sinθ) / (3 + sinθ).
double chain_ratio(double cone_half_angle);

/// Number of growth steps N = ⌊ln(R/4r) / ln μ⌋.
int chain_ball_count(double r, double R, double cone_half_angle);

struct ConeChain
{
    std::vector<Vec3> centers;
    std::vector<double> radii;
    std::vector<double> distances;
    double ratio = 0.0;
    int count = 0;
    Vec3 axis = Vec3::Zero();
    Vec3 base_point = Vec3::Zero();
};

/// Balls B(x_k, ρ_k) marching from x̃ along the outward normal, ρ_k = (sinθ/3) d_k,
/// d_{k+1} = μ d_k. Verifies nesting and containment; throws GeometryError on violation.
ConeChain build_cone_chain(const Vec3& x_tilde, double r, const ObstacleGeometry& geom, double R);

struct ChainDiagnostics
{
    double max_nesting_excess = 0.0;    // max_k |x_{k+1}-x_k| + ρ_{k+1} - 2ρ_k
    double min_clearance = 0.0;          // min_k dist(x_k, ∂D) - 3ρ_k
    double max_outer_excess = 0.0;       // max_k |x_k| + 3ρ_k - 3R/4
    double final_inner_margin = 0.0;     // min_{B(x_N,ρ_N)} |x| - R/12
};

ChainDiagnostics chain_diagnostics(const ConeChain& chain, const ObstacleGeometry& geom, double R);

struct GA2Fit
{
    double C = 0.0;
    double kappa = 0.0;
    std::vector<double> radii;
    std::vector<double> cap_radius; // s(r), sup over sampled x̃
};

/// Fits s(r) ≈ C r^κ where s(r) = sup{|y - x̃| : y ∈ ∂D, |y - x'| ≤ ρ + r} and x' is the
/// exterior contact centre for ρ = `exterior_radius` (default: the geometry's value).
GA2Fit check_GA2(const ObstacleGeometry& geom, const std::vector<double>& radii,
                 const std::vector<Vec3>& sample_directions = {}, double exterior_radius = -1.0);

/// Default GA2 radius cap min(0.5, diam/4).
double default_ga2_radius_cap(const ObstacleGeometry& geom);

} // namespace impscat
