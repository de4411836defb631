#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "impscat/geometry.hpp"
#include "impscat/specfun.hpp"

namespace impscat {

/// Nonnegative surface impedance λ(x̂), stored as real-harmonic coefficients over the
/// parameter sphere.
class ImpedanceField
{
  public:
    ImpedanceField() = default; // λ ≡ 0

    static ImpedanceField constant(double value);
    static ImpedanceField from_coefficients(std::vector<double> coefficients);

    int degree() const { return degree_; }
    const std::vector<double>& coefficients() const { return coefficients_; }
    bool is_constant() const;
    /// Value of a constant field (throws if not constant).
    double constant_value() const;

    double value(const Vec3& dir) const;
    std::vector<double> samples(const QuadratureRule& rule) const;

    /// Extremes over a product grid (order >= 4 * degree) and the two poles.
    double sup() const;
    double inf() const;

    /// Throws DomainError if λ < -tol anywhere on the check grid, or if sup λ > bound.
    void check_admissible(double bound = -1.0, double tol = 1e-12) const;

    /// this + scale * other.
    ImpedanceField plus(const ImpedanceField& other, double scale = 1.0) const;

  private:
    std::vector<double> check_samples() const;

    std::vector<double> coefficients_{0.0};
    int degree_ = 0;
};

enum class OperatorKind { S, K, KPrime, T, S0 };

/// Eigenvalue on Y_n^m of the operator on the sphere of radius a, including the leading factor 2
/// of each layer operator; normal pointing out of the ball.
cplx sphere_operator_eigenvalue(OperatorKind kind, double k, double a, int n);

/// Eigenvalues of the Laplace operators on the sphere of radius a.
double sphere_laplace_kprime_eigenvalue(int n);
double sphere_laplace_t_eigenvalue(double a, int n);

/// Dense Galerkin matrix in the Y_n^m basis with a tag of what it represents.
struct BoundaryOperatorMatrix
{
    enum class Kind { S, K, KPrime, T, S0, Multiplication, Combined, Other };
    Kind kind = Kind::Other;
    Eigen::MatrixXcd entries;
};

/// Rows: quadrature nodes, columns: Y_n^m with n <= N.
Eigen::MatrixXcd harmonic_synthesis_matrix(int N, const std::vector<Vec3>& directions);

/// Coefficients ∫ f conj(Y_n^m) dΩ from node values of f on the rule.
Eigen::VectorXcd project_onto_harmonics(int N, const QuadratureRule& rule,
                                        const Eigen::VectorXcd& values);

/// Values of Σ c_nm Y_n^m at the given directions.
Eigen::VectorXcd synthesize(int N, const Eigen::VectorXcd& coeffs,
                            const std::vector<Vec3>& directions);

/// Galerkin matrix of f -> iλf. Exact if quad_order >= N + N_λ; aliasing error otherwise.
BoundaryOperatorMatrix assemble_multiplication(const ImpedanceField& lambda, int N,
                                               int quad_order = -1);

struct IdentityPlusInverse
{
    BoundaryOperatorMatrix inverse;
    double condition = 1.0;
    bool ill_conditioned = false; // condition > 1e8
    double residual = 0.0;        // ||(I+M)X - I||_max
};

IdentityPlusInverse invert_identity_plus(const BoundaryOperatorMatrix& multiplication);

struct OperatorQuadrature
{
    int projection_order = -1; // product-rule order for Galerkin projection; default N + 2
    int polar_points = -1;     // Gauss points in the polar angle about each target; default N + 24
    int azimuth_points = -1;   // trapezoid points about each target; default 2N + 24
    unsigned threads = 0;
};

/// Layer operators in the Y_n^m basis. For sphere geometry only the diagonal vectors are
/// filled; `matrix` densifies on demand.
struct SurfaceOperators
{
    enum class Which { S, K, KPrime, T_S0sq, S0, S0sq };

    double k = 0.0;
    int band_limit = 0;
    bool diagonal = true;
    Eigen::VectorXcd d_S, d_K, d_Kp, d_TS0sq, d_S0;
    Eigen::MatrixXcd S, K, Kp, TS0sq, S0;

    Eigen::MatrixXcd matrix(Which which) const;
    Eigen::VectorXcd apply(Which which, const Eigen::VectorXcd& v) const;
};

/// Galerkin layer operators for the geometry. Perturbed spheres use polar quadrature about
/// each target node so every kernel is integrated with its weak singularity cancelled.
SurfaceOperators surface_operators(double k, const ObstacleGeometry& geom, int N,
                                   const OperatorQuadrature& quad = {});

/// Thread-safe memo of surface_operators keyed by (k, geometry, N, quadrature settings).
class OperatorCache
{
  public:
    std::shared_ptr<const SurfaceOperators> get(double k, const ObstacleGeometry& geom, int N,
                                                const OperatorQuadrature& quad = {});
    std::size_t size() const;

  private:
    using Key = std::tuple<double, int, double, std::vector<double>, int, int, int, int>;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const SurfaceOperators>> store_;
};

/// How the impedance couples into the combined-field equation.
///  Consistent:   D1 + M (I + S + iη(K+I)S₀²), the boundary condition of the ansatz.
///  ReducedCoupling: D1 + M (S + K).
/// In both, D1 = K' + iη T S₀².
enum class SystemForm { Consistent, ReducedCoupling };

/// The bracket D1 + M D2 before composition with (I+M)^{-1}.
Eigen::MatrixXcd combined_bracket(const SurfaceOperators& ops, const BoundaryOperatorMatrix& mult,
                                  double eta, SystemForm form = SystemForm::Consistent);

/// A = I - (I+M)^{-1}[bracket]. Throws SingularityError if σ_min(A) < 1e-12.
BoundaryOperatorMatrix assemble_combined_system(double k, const ObstacleGeometry& geom,
                                                const ImpedanceField& lambda, double eta, int N,
                                                SystemForm form = SystemForm::Consistent,
                                                const SurfaceOperators* ops = nullptr);

/// Smallest singular value of a square matrix.
double smallest_singular_value(const Eigen::MatrixXcd& a);

struct IncidentData
{
    Eigen::VectorXcd g;   // coefficients of -(∂_ν u^i + iλ u^i)
    Eigen::VectorXcd rhs; // -2 (I+M)^{-1} g
    bool truncation_warning = false;
};

IncidentData rhs_from_incident(double k, const Vec3& omega, const ImpedanceField& lambda,
                               const ObstacleGeometry& geom, int N, int quad_order = -1);

/// Default coupling max(1, k).
inline double default_coupling(double k) { return k > 1.0 ? k : 1.0; }

} // namespace impscat
