#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace impscat {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Flat index of (n, m), |m| <= n, in a degree-major harmonic coefficient vector.
constexpr int harmonic_index(int n, int m) { return n * n + n + m; }

/// Number of harmonics of degree <= N.
constexpr int harmonic_count(int N) { return (N + 1) * (N + 1); }

// ---------------------------------------------------------------------------
// Spherical Bessel functions
// ---------------------------------------------------------------------------

/// Spherical Bessel function of the first kind j_n(x), x > 0.
double sph_bessel_j(int n, double x);

/// Spherical Bessel function of the second kind y_n(x), x > 0.
double sph_bessel_y(int n, double x);

/// Spherical Hankel function h_n^(1)(x) = j_n(x) + i y_n(x).
cplx sph_hankel1(int n, double x);

/// j_0..j_nmax at x. Upward recurrence while n <= x, Miller downward recurrence beyond.
std::vector<double> sph_bessel_j_array(int nmax, double x);

/// y_0..y_nmax at x by upward recurrence.
std::vector<double> sph_bessel_y_array(int nmax, double x);

/// Values and first derivatives of j_n, y_n for n = 0..nmax at a single argument.
struct SphericalBesselTable
{
    double x = 0.0;
    std::vector<double> j, dj, y, dy;

    cplx h(int n) const { return {j[n], y[n]}; }
    cplx dh(int n) const { return {dj[n], dy[n]}; }
    int nmax() const { return static_cast<int>(j.size()) - 1; }
};

SphericalBesselTable sph_bessel_table(int nmax, double x);

// ---------------------------------------------------------------------------
// Spherical harmonics
// ---------------------------------------------------------------------------

/// Orthonormal complex spherical harmonic Y_n^m (Condon-Shortley phase).
cplx sph_harmonic(int n, int m, const Vec3& dir);

/// All Y_n^m with n <= N at `dir`, written at harmonic_index(n, m).
void eval_harmonics(int N, const Vec3& dir, std::span<cplx> out);

/// All real orthonormal harmonics (cos for m > 0, sin for m < 0) with n <= N.
void eval_real_harmonics(int N, const Vec3& dir, std::span<double> out);

/// Real harmonics together with their tangential (surface) gradients in Cartesian form.
void eval_real_harmonics_with_gradient(int N, const Vec3& dir, std::span<double> value,
                                       std::span<Vec3> surface_gradient);

/// Legendre polynomials P_0..P_nmax at t with first and second derivatives.
struct LegendreTable
{
    std::vector<double> p, dp, d2p;
};

LegendreTable legendre_table(int nmax, double t);

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre
{
    std::vector<double> nodes, weights;
};

GaussLegendre gauss_legendre(int npoints);

/// Gauss-Legendre rule mapped to [a, b].
GaussLegendre gauss_legendre(int npoints, double a, double b);

/// Product rule on the unit sphere. Weights sum to 4 pi.
struct QuadratureRule
{
    int order = 0;
    std::vector<double> cos_theta;
    std::vector<double> azimuth;
    std::vector<double> weights;
    std::vector<Vec3> directions;

    std::size_t size() const { return weights.size(); }
};

/// (N+1) Gauss-Legendre nodes in cos(theta) times (2N+2) uniform azimuths;
/// exact for harmonics of degree <= 2N+1.
QuadratureRule gauss_product_rule(int N);

/// Unit vector from polar cosine and azimuth.
Vec3 direction_from_angles(double cos_theta, double azimuth);

} // namespace impscat
