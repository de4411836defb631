#include "impscat/specfun.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "impscat/errors.hpp"

namespace impscat {

namespace {

void require_positive_argument(double x, const char* what)
{
    if (!(x > 0.0) || !std::isfinite(x))
        throw DomainError(std::string(what) + ": argument must be finite and positive, got " +
                          std::to_string(x));
}

void require_order(int n, const char* what)
{
    if (n < 0)
        throw DomainError(std::string(what) + ": negative order " + std::to_string(n));
}

// Unnormalised minimal solution of the spherical Bessel recurrence, f_0..f_nmax,
// obtained by downward recurrence from well above max(nmax, x).
std::vector<double> miller_downward(int nmax, double x)
{
    const int start =
        nmax + 20 + static_cast<int>(std::sqrt(40.0 * (nmax + 1))) + static_cast<int>(x);
    std::vector<double> f(nmax + 1, 0.0);
    double above = 0.0;   // f_{n+1}
    double current = 1e-300; // f_n
    for (int n = start; n > 0; --n) {
        const double below = (2.0 * n + 1.0) / x * current - above;
        above = current;
        current = below;
        if (n - 1 <= nmax)
            f[n - 1] = current;
        if (std::abs(current) > 1e250) {
            constexpr double shrink = 1e-250;
            current *= shrink;
            above *= shrink;
            for (int i = std::max(n - 1, 0); i <= nmax; ++i)
                f[i] *= shrink;
        }
    }
    return f;
}

// Fully normalised associated Legendre functions without Condon-Shortley phase,
// scaled so that p(n,m) e^{i m phi} is orthonormal on the sphere. `q` receives
// p / sin(theta) for m >= 1 (regular at the poles).
struct LegendreWork
{
    int N = 0;
    std::vector<double> p, q;

    static int tri(int n, int m) { return n * (n + 1) / 2 + m; }

    void compute(int degree, double t, double s)
    {
        N = degree;
        const std::size_t size = static_cast<std::size_t>((N + 1) * (N + 2) / 2);
        p.assign(size, 0.0);
        q.assign(size, 0.0);
        double pmm = 1.0 / std::sqrt(4.0 * kPi);
        double qmm = 0.0;
        for (int m = 0; m <= N; ++m) {
            if (m > 0) {
                const double factor = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
                qmm = pmm * factor;
                pmm = qmm * s;
            }
            p[tri(m, m)] = pmm;
            q[tri(m, m)] = qmm;
            if (m + 1 <= N) {
                const double c = std::sqrt(2.0 * m + 3.0) * t;
                p[tri(m + 1, m)] = c * pmm;
                q[tri(m + 1, m)] = c * qmm;
            }
            for (int n = m + 2; n <= N; ++n) {
                const double nn = n, mm = m;
                const double a = std::sqrt((4.0 * nn * nn - 1.0) / (nn * nn - mm * mm));
                const double b = std::sqrt(((nn - 1.0) * (nn - 1.0) - mm * mm) /
                                           (4.0 * (nn - 1.0) * (nn - 1.0) - 1.0));
                p[tri(n, m)] = a * (t * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
                q[tri(n, m)] = a * (t * q[tri(n - 1, m)] - b * q[tri(n - 2, m)]);
            }
        }
    }

    // d/dtheta of p(n, m).
    double dtheta(int n, int m, double t) const
    {
        if (m == 0)
            return n == 0 ? 0.0 : -std::sqrt(double(n) * (n + 1)) * p[tri(n, 1)];
        double value = n * t * q[tri(n, m)];
        if (n > m) {
            const double nn = n, mm = m;
            value -= std::sqrt((2.0 * nn + 1.0) * (nn * nn - mm * mm) / (2.0 * nn - 1.0)) *
                     q[tri(n - 1, m)];
        }
        return value;
    }
};

struct Angles
{
    double t, s, phi;
};

Angles angles_of(const Vec3& dir)
{
    const double norm = dir.norm();
    if (!(norm > 0.0))
        throw DomainError("direction vector has zero length");
    const Vec3 d = dir / norm;
    const double s = std::hypot(d.x(), d.y());
    return {std::clamp(d.z(), -1.0, 1.0), s, std::atan2(d.y(), d.x())};
}

} // namespace

// ---------------------------------------------------------------------------

std::vector<double> sph_bessel_j_array(int nmax, double x)
{
    require_order(nmax, "sph_bessel_j");
    require_positive_argument(x, "sph_bessel_j");

    const double j0 = std::sin(x) / x;
    if (x < 1.0) {
        std::vector<double> f = miller_downward(nmax, x);
        const double scale = j0 / f[0];
        for (double& v : f)
            v *= scale;
        return f;
    }

    const int n0 = std::min(nmax, static_cast<int>(std::floor(x)));
    std::vector<double> up(n0 + 2);
    up[0] = j0;
    up[1] = std::sin(x) / (x * x) - std::cos(x) / x;
    for (int n = 1; n < n0 + 1; ++n)
        up[n + 1] = (2.0 * n + 1.0) / x * up[n] - up[n - 1];

    std::vector<double> out(nmax + 1);
    if (nmax <= n0) {
        std::copy(up.begin(), up.begin() + nmax + 1, out.begin());
        return out;
    }
    const std::vector<double> f = miller_downward(nmax, x);
    const double norm = std::max(std::abs(f[n0]), std::abs(f[n0 + 1]));
    const double a = f[n0] / norm, b = f[n0 + 1] / norm;
    const double scale = (up[n0] * a + up[n0 + 1] * b) / (a * a + b * b) / norm;
    for (int n = 0; n <= nmax; ++n)
        out[n] = n <= n0 ? up[n] : scale * f[n];
    return out;
}

std::vector<double> sph_bessel_y_array(int nmax, double x)
{
    require_order(nmax, "sph_bessel_y");
    require_positive_argument(x, "sph_bessel_y");
    std::vector<double> y(nmax + 1);
    y[0] = -std::cos(x) / x;
    if (nmax >= 1)
        y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
    for (int n = 1; n < nmax; ++n)
        y[n + 1] = (2.0 * n + 1.0) / x * y[n] - y[n - 1];
    return y;
}

double sph_bessel_j(int n, double x) { return sph_bessel_j_array(n, x)[n]; }

double sph_bessel_y(int n, double x) { return sph_bessel_y_array(n, x)[n]; }

cplx sph_hankel1(int n, double x) { return {sph_bessel_j(n, x), sph_bessel_y(n, x)}; }

SphericalBesselTable sph_bessel_table(int nmax, double x)
{
    require_order(nmax, "sph_bessel_table");
    SphericalBesselTable table;
    table.x = x;
    const std::vector<double> j = sph_bessel_j_array(nmax + 1, x);
    const std::vector<double> y = sph_bessel_y_array(nmax + 1, x);
    table.j.assign(j.begin(), j.begin() + nmax + 1);
    table.y.assign(y.begin(), y.begin() + nmax + 1);
    table.dj.resize(nmax + 1);
    table.dy.resize(nmax + 1);
    table.dj[0] = -j[1];
    table.dy[0] = -y[1];
    for (int n = 1; n <= nmax; ++n) {
        table.dj[n] = j[n - 1] - (n + 1.0) / x * j[n];
        table.dy[n] = y[n - 1] - (n + 1.0) / x * y[n];
    }
    return table;
}

// ---------------------------------------------------------------------------

cplx sph_harmonic(int n, int m, const Vec3& dir)
{
    if (n < 0 || std::abs(m) > n)
        throw std::out_of_range("sph_harmonic: require |m| <= n, got n=" + std::to_string(n) +
                                " m=" + std::to_string(m));
    if (std::abs(dir.norm() - 1.0) > 1e-12)
        throw DomainError("sph_harmonic: direction must be a unit vector");
    std::vector<cplx> values(harmonic_count(n));
    eval_harmonics(n, dir, values);
    return values[harmonic_index(n, m)];
}

void eval_harmonics(int N, const Vec3& dir, std::span<cplx> out)
{
    if (out.size() < static_cast<std::size_t>(harmonic_count(N)))
        throw std::invalid_argument("eval_harmonics: output span too small");
    const Angles a = angles_of(dir);
    LegendreWork lw;
    lw.compute(N, a.t, a.s);
    for (int m = 0; m <= N; ++m) {
        const cplx phase = std::polar(1.0, m * a.phi);
        const double sign = (m % 2 == 0) ? 1.0 : -1.0;
        for (int n = m; n <= N; ++n) {
            const double p = lw.p[LegendreWork::tri(n, m)];
            out[harmonic_index(n, m)] = sign * p * phase;
            if (m > 0)
                out[harmonic_index(n, -m)] = p * std::conj(phase);
        }
    }
}

void eval_real_harmonics(int N, const Vec3& dir, std::span<double> out)
{
    if (out.size() < static_cast<std::size_t>(harmonic_count(N)))
        throw std::invalid_argument("eval_real_harmonics: output span too small");
    const Angles a = angles_of(dir);
    LegendreWork lw;
    lw.compute(N, a.t, a.s);
    const double root2 = std::sqrt(2.0);
    for (int m = 0; m <= N; ++m) {
        const double c = std::cos(m * a.phi), s = std::sin(m * a.phi);
        for (int n = m; n <= N; ++n) {
            const double p = lw.p[LegendreWork::tri(n, m)];
            if (m == 0) {
                out[harmonic_index(n, 0)] = p;
            } else {
                out[harmonic_index(n, m)] = root2 * p * c;
                out[harmonic_index(n, -m)] = root2 * p * s;
            }
        }
    }
}

void eval_real_harmonics_with_gradient(int N, const Vec3& dir, std::span<double> value,
                                       std::span<Vec3> surface_gradient)
{
    const auto count = static_cast<std::size_t>(harmonic_count(N));
    if (value.size() < count || surface_gradient.size() < count)
        throw std::invalid_argument("eval_real_harmonics_with_gradient: output span too small");
    const Angles a = angles_of(dir);
    LegendreWork lw;
    lw.compute(N, a.t, a.s);
    const double cphi = std::cos(a.phi), sphi = std::sin(a.phi);
    const Vec3 e_theta(a.t * cphi, a.t * sphi, -a.s);
    const Vec3 e_phi(-sphi, cphi, 0.0);
    const double root2 = std::sqrt(2.0);
    for (int m = 0; m <= N; ++m) {
        const double c = std::cos(m * a.phi), s = std::sin(m * a.phi);
        for (int n = m; n <= N; ++n) {
            const int k = LegendreWork::tri(n, m);
            const double p = lw.p[k];
            const double dp = lw.dtheta(n, m, a.t);
            if (m == 0) {
                value[harmonic_index(n, 0)] = p;
                surface_gradient[harmonic_index(n, 0)] = dp * e_theta;
            } else {
                const double q = lw.q[k];
                value[harmonic_index(n, m)] = root2 * p * c;
                value[harmonic_index(n, -m)] = root2 * p * s;
                surface_gradient[harmonic_index(n, m)] =
                    root2 * (dp * c * e_theta - m * q * s * e_phi);
                surface_gradient[harmonic_index(n, -m)] =
                    root2 * (dp * s * e_theta + m * q * c * e_phi);
            }
        }
    }
}

LegendreTable legendre_table(int nmax, double t)
{
    LegendreTable table;
    table.p.assign(nmax + 1, 0.0);
    table.dp.assign(nmax + 1, 0.0);
    table.d2p.assign(nmax + 1, 0.0);
    table.p[0] = 1.0;
    if (nmax >= 1) {
        table.p[1] = t;
        table.dp[1] = 1.0;
    }
    for (int n = 1; n < nmax; ++n) {
        table.p[n + 1] = ((2.0 * n + 1.0) * t * table.p[n] - n * table.p[n - 1]) / (n + 1.0);
        table.dp[n + 1] = table.dp[n - 1] + (2.0 * n + 1.0) * table.p[n];
        table.d2p[n + 1] = table.d2p[n - 1] + (2.0 * n + 1.0) * table.dp[n];
    }
    return table;
}

// ---------------------------------------------------------------------------

GaussLegendre gauss_legendre(int npoints)
{
    if (npoints < 1)
        throw DomainError("gauss_legendre: need at least one point");
    GaussLegendre rule;
    rule.nodes.resize(npoints);
    rule.weights.resize(npoints);
    const int half = (npoints + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (npoints + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int n = 1; n < npoints; ++n) {
                const double p2 = ((2.0 * n + 1.0) * z * p1 - n * p0) / (n + 1.0);
                p0 = p1;
                p1 = p2;
            }
            if (npoints == 1) {
                p1 = z;
                p0 = 1.0;
            }
            dp = npoints * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        {
            double p0 = 1.0, p1 = z;
            for (int n = 1; n < npoints; ++n) {
                const double p2 = ((2.0 * n + 1.0) * z * p1 - n * p0) / (n + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = npoints * (z * p1 - p0) / (z * z - 1.0);
        }
        rule.nodes[i] = -z;
        rule.nodes[npoints - 1 - i] = z;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.weights[i] = w;
        rule.weights[npoints - 1 - i] = w;
    }
    if (npoints % 2 == 1)
        rule.nodes[npoints / 2] = 0.0;
    return rule;
}

GaussLegendre gauss_legendre(int npoints, double a, double b)
{
    GaussLegendre rule = gauss_legendre(npoints);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (int i = 0; i < npoints; ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

Vec3 direction_from_angles(double cos_theta, double azimuth)
{
    const double s = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return {s * std::cos(azimuth), s * std::sin(azimuth), cos_theta};
}

QuadratureRule gauss_product_rule(int N)
{
    if (N < 1)
        throw DomainError("gauss_product_rule: band limit must be >= 1, got " + std::to_string(N));
    const GaussLegendre gl = gauss_legendre(N + 1);
    const int nphi = 2 * N + 2;
    const double dphi = 2.0 * kPi / nphi;
    QuadratureRule rule;
    rule.order = N;
    const std::size_t total = static_cast<std::size_t>(N + 1) * nphi;
    rule.cos_theta.reserve(total);
    rule.azimuth.reserve(total);
    rule.weights.reserve(total);
    rule.directions.reserve(total);
    for (int i = 0; i <= N; ++i) {
        for (int j = 0; j < nphi; ++j) {
            const double phi = j * dphi;
            rule.cos_theta.push_back(gl.nodes[i]);
            rule.azimuth.push_back(phi);
            rule.weights.push_back(gl.weights[i] * dphi);
            rule.directions.push_back(direction_from_angles(gl.nodes[i], phi));
        }
    }
    return rule;
}

} // namespace impscat
