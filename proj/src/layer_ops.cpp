#include "impscat/layer_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "impscat/errors.hpp"
#include "impscat/parallel.hpp"

namespace impscat {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

constexpr cplx kI{0.0, 1.0};

int degree_from_count(std::size_t count, const char* what)
{
    const int root = static_cast<int>(std::lround(std::sqrt(double(count))));
    if (count == 0 || static_cast<std::size_t>(root * root) != count)
        throw DomainError(std::string(what) + ": coefficient count must be (N+1)^2");
    return root - 1;
}

void require_band_limit(int N)
{
    if (N < 1)
        throw DomainError("band limit must be >= 1, got " + std::to_string(N));
}

// Radial derivatives of G(r) = (e^{ikr} - 1)/(4πr), the difference of the Helmholtz and
// Laplace fundamental solutions. Small kr uses the power series to avoid cancellation.
void smooth_kernel_derivatives(double k, double r, cplx& g1, cplx& g2)
{
    const double kr = k * r;
    if (kr < 0.1) {
        const cplx z = kI * kr;
        cplx s1 = 0.0, s2 = 0.0;
        cplx zp = 1.0;        // z^(m-2) for s1, z^(m-3) for s2 handled below
        double fact = 2.0;    // m!
        for (int m = 2; m < 20; ++m) {
            if (m > 2)
                fact *= m;
            s1 += double(m - 1) / fact * zp;
            if (m >= 3)
                s2 += double((m - 1) * (m - 2)) / fact * (zp / z);
            zp *= z;
        }
        const cplx ik = kI * k;
        g1 = ik * ik * s1 / (4.0 * kPi);
        g2 = ik * ik * ik * s2 / (4.0 * kPi);
        return;
    }
    const cplx e = std::exp(kI * kr);
    const cplx num = e * (kI * kr - 1.0) + 1.0;
    g1 = num / (4.0 * kPi * r * r);
    g2 = (-kr * kr * e - 2.0 * num) / (4.0 * kPi * r * r * r);
}

} // namespace

// ---------------------------------------------------------------------------
// ImpedanceField

ImpedanceField ImpedanceField::constant(double value)
{
    if (!std::isfinite(value))
        throw DomainError("impedance constant must be finite");
    return from_coefficients({value * std::sqrt(4.0 * kPi)});
}

ImpedanceField ImpedanceField::from_coefficients(std::vector<double> coefficients)
{
    ImpedanceField f;
    f.degree_ = degree_from_count(coefficients.size(), "impedance");
    for (double c : coefficients)
        if (!std::isfinite(c))
            throw DomainError("impedance coefficients must be finite");
    f.coefficients_ = std::move(coefficients);
    return f;
}

bool ImpedanceField::is_constant() const
{
    return std::all_of(coefficients_.begin() + 1, coefficients_.end(),
                       [](double c) { return c == 0.0; });
}

double ImpedanceField::constant_value() const
{
    if (!is_constant())
        throw DomainError("impedance field is not constant");
    return coefficients_[0] / std::sqrt(4.0 * kPi);
}

double ImpedanceField::value(const Vec3& dir) const
{
    if (degree_ == 0)
        return coefficients_[0] / std::sqrt(4.0 * kPi);
    std::vector<double> r(harmonic_count(degree_));
    eval_real_harmonics(degree_, dir, r);
    double v = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        v += coefficients_[i] * r[i];
    return v;
}

std::vector<double> ImpedanceField::samples(const QuadratureRule& rule) const
{
    std::vector<double> out(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i)
        out[i] = value(rule.directions[i]);
    return out;
}

// Product grid plus both poles, which the Gauss nodes never hit.
std::vector<double> ImpedanceField::check_samples() const
{
    std::vector<double> s = samples(gauss_product_rule(std::max(16, 4 * degree_)));
    s.push_back(value(Vec3::UnitZ()));
    s.push_back(value(-Vec3::UnitZ()));
    return s;
}

double ImpedanceField::sup() const
{
    if (is_constant())
        return constant_value();
    const auto s = check_samples();
    return *std::max_element(s.begin(), s.end());
}

double ImpedanceField::inf() const
{
    if (is_constant())
        return constant_value();
    const auto s = check_samples();
    return *std::min_element(s.begin(), s.end());
}

void ImpedanceField::check_admissible(double bound, double tol) const
{
    const double lo = inf();
    if (lo < -tol)
        throw DomainError("impedance must be nonnegative; minimum sampled value " +
                          std::to_string(lo));
    if (bound >= 0.0) {
        const double hi = sup();
        if (hi > bound * (1.0 + 1e-12) + tol)
            throw DomainError("impedance exceeds the bound M = " + std::to_string(bound));
    }
}

ImpedanceField ImpedanceField::plus(const ImpedanceField& other, double scale) const
{
    const std::size_t n = std::max(coefficients_.size(), other.coefficients_.size());
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < coefficients_.size(); ++i)
        c[i] += coefficients_[i];
    for (std::size_t i = 0; i < other.coefficients_.size(); ++i)
        c[i] += scale * other.coefficients_[i];
    return from_coefficients(std::move(c));
}

// ---------------------------------------------------------------------------
// Sphere spectra

cplx sphere_operator_eigenvalue(OperatorKind kind, double k, double a, int n)
{
    if (!(a > 0.0) || !std::isfinite(a))
        throw DomainError("sphere radius must be positive");
    if (n < 0)
        throw DomainError("degree must be nonnegative");
    if (kind == OperatorKind::S0)
        return 2.0 * a / (2.0 * n + 1.0);
    if (!(k > 0.0) || !std::isfinite(k))
        throw DomainError("wavenumber must be positive");
    const SphericalBesselTable t = sph_bessel_table(n, k * a);
    const cplx h = t.h(n), dh = t.dh(n);
    const double j = t.j[n], dj = t.dj[n];
    switch (kind) {
    case OperatorKind::S:
        return 2.0 * kI * k * a * a * j * h;
    case OperatorKind::K:
    case OperatorKind::KPrime:
        return kI * k * k * a * a * (dj * h + j * dh);
    case OperatorKind::T:
        return 2.0 * kI * k * k * k * a * a * dj * dh;
    default:
        break;
    }
    throw DomainError("unknown operator kind");
}

double sphere_laplace_kprime_eigenvalue(int n) { return -1.0 / (2.0 * n + 1.0); }

double sphere_laplace_t_eigenvalue(double a, int n)
{
    return -2.0 * n * (n + 1.0) / ((2.0 * n + 1.0) * a);
}

// ---------------------------------------------------------------------------
// Harmonic transforms

MatrixXcd harmonic_synthesis_matrix(int N, const std::vector<Vec3>& directions)
{
    const int count = harmonic_count(N);
    MatrixXcd Y(static_cast<Eigen::Index>(directions.size()), count);
    std::vector<cplx> row(count);
    for (std::size_t i = 0; i < directions.size(); ++i) {
        eval_harmonics(N, directions[i], row);
        for (int j = 0; j < count; ++j)
            Y(static_cast<Eigen::Index>(i), j) = row[j];
    }
    return Y;
}

VectorXcd project_onto_harmonics(int N, const QuadratureRule& rule, const VectorXcd& values)
{
    const MatrixXcd Y = harmonic_synthesis_matrix(N, rule.directions);
    const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                              static_cast<Eigen::Index>(rule.size()));
    return Y.adjoint() * (w.cast<cplx>().cwiseProduct(values));
}

VectorXcd synthesize(int N, const VectorXcd& coeffs, const std::vector<Vec3>& directions)
{
    return harmonic_synthesis_matrix(N, directions) * coeffs.head(harmonic_count(N));
}

// ---------------------------------------------------------------------------
// Multiplication operator

BoundaryOperatorMatrix assemble_multiplication(const ImpedanceField& lambda, int N, int quad_order)
{
    require_band_limit(N);
    BoundaryOperatorMatrix out;
    out.kind = BoundaryOperatorMatrix::Kind::Multiplication;
    const int count = harmonic_count(N);
    if (lambda.is_constant()) {
        out.entries = MatrixXcd::Identity(count, count) * (kI * lambda.constant_value());
        return out;
    }
    const int needed = N + lambda.degree();
    if (quad_order < 0)
        quad_order = needed;
    if (quad_order < needed)
        throw AliasingError("assemble_multiplication: quadrature order " +
                            std::to_string(quad_order) + " < N + N_lambda = " +
                            std::to_string(needed));
    const QuadratureRule rule = gauss_product_rule(quad_order);
    const MatrixXcd Y = harmonic_synthesis_matrix(N, rule.directions);
    const std::vector<double> lam = lambda.samples(rule);
    Eigen::VectorXd w(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t i = 0; i < rule.size(); ++i)
        w[static_cast<Eigen::Index>(i)] = rule.weights[i] * lam[i];
    out.entries = kI * (Y.adjoint() * w.cast<cplx>().asDiagonal() * Y);
    return out;
}

IdentityPlusInverse invert_identity_plus(const BoundaryOperatorMatrix& multiplication)
{
    const MatrixXcd& M = multiplication.entries;
    const Eigen::Index n = M.rows();
    const MatrixXcd A = MatrixXcd::Identity(n, n) + M;
    IdentityPlusInverse out;
    out.inverse.kind = BoundaryOperatorMatrix::Kind::Other;
    const Eigen::PartialPivLU<MatrixXcd> lu(A);
    out.inverse.entries = lu.inverse();
    const double rcond = lu.rcond();
    out.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    out.ill_conditioned = out.condition > 1e8;
    out.residual = (A * out.inverse.entries - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Surface operators

MatrixXcd SurfaceOperators::matrix(Which which) const
{
    if (!diagonal) {
        switch (which) {
        case Which::S: return S;
        case Which::K: return K;
        case Which::KPrime: return Kp;
        case Which::T_S0sq: return TS0sq;
        case Which::S0: return S0;
        case Which::S0sq: return S0 * S0;
        }
    }
    switch (which) {
    case Which::S: return d_S.asDiagonal();
    case Which::K: return d_K.asDiagonal();
    case Which::KPrime: return d_Kp.asDiagonal();
    case Which::T_S0sq: return d_TS0sq.asDiagonal();
    case Which::S0: return d_S0.asDiagonal();
    case Which::S0sq: return d_S0.cwiseProduct(d_S0).asDiagonal();
    }
    return {};
}

VectorXcd SurfaceOperators::apply(Which which, const VectorXcd& v) const
{
    if (!diagonal) {
        switch (which) {
        case Which::S: return S * v;
        case Which::K: return K * v;
        case Which::KPrime: return Kp * v;
        case Which::T_S0sq: return TS0sq * v;
        case Which::S0: return S0 * v;
        case Which::S0sq: return S0 * (S0 * v);
        }
    }
    switch (which) {
    case Which::S: return d_S.cwiseProduct(v);
    case Which::K: return d_K.cwiseProduct(v);
    case Which::KPrime: return d_Kp.cwiseProduct(v);
    case Which::T_S0sq: return d_TS0sq.cwiseProduct(v);
    case Which::S0: return d_S0.cwiseProduct(v);
    case Which::S0sq: return d_S0.cwiseProduct(d_S0).cwiseProduct(v);
    }
    return {};
}

namespace {

SurfaceOperators sphere_surface_operators(double k, double a, int N)
{
    SurfaceOperators ops;
    ops.k = k;
    ops.band_limit = N;
    ops.diagonal = true;
    const int count = harmonic_count(N);
    ops.d_S.resize(count);
    ops.d_K.resize(count);
    ops.d_Kp.resize(count);
    ops.d_TS0sq.resize(count);
    ops.d_S0.resize(count);
    const SphericalBesselTable t = sph_bessel_table(N, k * a);
    for (int n = 0; n <= N; ++n) {
        const cplx h = t.h(n), dh = t.dh(n);
        const cplx s = 2.0 * kI * k * a * a * t.j[n] * h;
        const cplx kk = kI * k * k * a * a * (t.dj[n] * h + t.j[n] * dh);
        const cplx tt = 2.0 * kI * k * k * k * a * a * t.dj[n] * dh;
        const double s0 = 2.0 * a / (2.0 * n + 1.0);
        for (int m = -n; m <= n; ++m) {
            const int i = harmonic_index(n, m);
            ops.d_S[i] = s;
            ops.d_K[i] = kk;
            ops.d_Kp[i] = kk;
            ops.d_TS0sq[i] = tt * s0 * s0;
            ops.d_S0[i] = s0;
        }
    }
    return ops;
}

// Kernel values at one (target, source) pair, each already multiplied by the factor 2.
struct KernelRow
{
    cplx s, k, kp, s0, k0p, t_minus_t0;
};

KernelRow kernels(double k, const Vec3& x, const Vec3& nx, const Vec3& y, const Vec3& ny)
{
    const Vec3 R = x - y;
    const double r = R.norm();
    const double rx = R.dot(nx), ry = R.dot(ny);
    const cplx e = std::exp(kI * (k * r));
    const double inv4pi = 1.0 / (4.0 * kPi);
    const cplx phi = e * inv4pi / r;
    const cplx dphi = e * (kI * (k * r) - 1.0) * inv4pi / (r * r);
    const double dphi0 = -inv4pi / (r * r);
    cplx g1, g2;
    smooth_kernel_derivatives(k, r, g1, g2);

    KernelRow out;
    out.s = 2.0 * phi;
    out.s0 = 2.0 * inv4pi / r;
    out.k = -2.0 * dphi * ry / r;
    out.kp = 2.0 * dphi * rx / r;
    out.k0p = 2.0 * dphi0 * rx / r;
    out.t_minus_t0 = 2.0 * (-(g2 - g1 / r) * rx * ry / (r * r) - (g1 / r) * nx.dot(ny));
    return out;
}

SurfaceOperators perturbed_surface_operators(double k, const ObstacleGeometry& geom, int N,
                                             const OperatorQuadrature& quad)
{
    const int order = quad.projection_order > 0 ? quad.projection_order : N + 2;
    if (order < N)
        throw AliasingError("surface_operators: projection order below band limit");
    const int n_polar = quad.polar_points > 0 ? quad.polar_points : N + 24;
    const int n_azimuth = quad.azimuth_points > 0 ? quad.azimuth_points : 2 * N + 24;

    const QuadratureRule rule = gauss_product_rule(order);
    const GaussLegendre polar = gauss_legendre(n_polar, 0.0, kPi);
    const int count = harmonic_count(N);
    const int n_targets = static_cast<int>(rule.size());
    const int n_local = n_polar * n_azimuth;

    // Operator images of each basis function at each target node, one block per kernel.
    constexpr int n_kernels = 6;
    std::vector<MatrixXcd> images(n_kernels, MatrixXcd(n_targets, count));

    parallel_for(static_cast<std::size_t>(n_targets), quad.threads, [&](std::size_t it) {
        const int i = static_cast<int>(it);
        const auto target = geom.surface_point(rule.directions[i]);
        const Vec3 pole = target.dir;
        const Vec3 helper = std::abs(pole.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
        const Vec3 e1 = helper.cross(pole).normalized();
        const Vec3 e2 = pole.cross(e1);

        MatrixXcd kern(n_kernels, n_local);
        MatrixXcd basis(n_local, count);
        std::vector<cplx> row(count);
        const double dchi = 2.0 * kPi / n_azimuth;
        for (int a = 0; a < n_polar; ++a) {
            const double psi = polar.nodes[a];
            const double w_psi = polar.weights[a] * std::sin(psi) * dchi;
            for (int b = 0; b < n_azimuth; ++b) {
                const double chi = (b + 0.5) * dchi;
                const Vec3 d = std::cos(psi) * pole +
                               std::sin(psi) * (std::cos(chi) * e1 + std::sin(chi) * e2);
                const auto src = geom.surface_point(d);
                const int l = a * n_azimuth + b;
                const double w = w_psi * src.jacobian;
                const KernelRow kr = kernels(k, target.x, target.normal, src.x, src.normal);
                kern(0, l) = w * kr.s;
                kern(1, l) = w * kr.k;
                kern(2, l) = w * kr.kp;
                kern(3, l) = w * kr.s0;
                kern(4, l) = w * kr.k0p;
                kern(5, l) = w * kr.t_minus_t0;
                eval_harmonics(N, src.dir, row);
                for (int j = 0; j < count; ++j)
                    basis(l, j) = row[j];
            }
        }
        const MatrixXcd values = kern * basis;
        for (int q = 0; q < n_kernels; ++q)
            images[q].row(i) = values.row(q);
    });

    const MatrixXcd Y = harmonic_synthesis_matrix(N, rule.directions);
    const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(), n_targets);
    const MatrixXcd Yw = Y.adjoint() * w.cast<cplx>().asDiagonal();

    SurfaceOperators ops;
    ops.k = k;
    ops.band_limit = N;
    ops.diagonal = false;
    ops.S = Yw * images[0];
    ops.K = Yw * images[1];
    ops.Kp = Yw * images[2];
    ops.S0 = Yw * images[3];
    const MatrixXcd K0p = Yw * images[4];
    const MatrixXcd TmT0 = Yw * images[5];
    const MatrixXcd I = MatrixXcd::Identity(count, count);
    // T S0^2 = (K0'^2 - I) S0 + (T - T0) S0^2, using the Calderón identity T0 S0 = K0'^2 - I.
    ops.TS0sq = (K0p * K0p - I) * ops.S0 + TmT0 * (ops.S0 * ops.S0);
    return ops;
}

} // namespace

SurfaceOperators surface_operators(double k, const ObstacleGeometry& geom, int N,
                                   const OperatorQuadrature& quad)
{
    require_band_limit(N);
    if (!(k > 0.0) || !std::isfinite(k))
        throw DomainError("wavenumber must be positive");
    if (geom.is_sphere())
        return sphere_surface_operators(k, geom.base_radius(), N);
    return perturbed_surface_operators(k, geom, N, quad);
}

std::shared_ptr<const SurfaceOperators> OperatorCache::get(double k, const ObstacleGeometry& geom,
                                                           int N, const OperatorQuadrature& quad)
{
    Key key{k,
            static_cast<int>(geom.kind()),
            geom.base_radius(),
            geom.coefficients(),
            N,
            quad.projection_order,
            quad.polar_points,
            quad.azimuth_points};
    {
        std::lock_guard lock(mutex_);
        if (auto it = store_.find(key); it != store_.end())
            return it->second;
    }
    auto ops = std::make_shared<const SurfaceOperators>(surface_operators(k, geom, N, quad));
    std::lock_guard lock(mutex_);
    return store_.emplace(std::move(key), std::move(ops)).first->second;
}

std::size_t OperatorCache::size() const
{
    std::lock_guard lock(mutex_);
    return store_.size();
}

// ---------------------------------------------------------------------------
// Combined system

MatrixXcd combined_bracket(const SurfaceOperators& ops, const BoundaryOperatorMatrix& mult,
                           double eta, SystemForm form)
{
    using W = SurfaceOperators::Which;
    const int count = harmonic_count(ops.band_limit);
    if (mult.entries.rows() != count)
        throw DomainError("combined_bracket: multiplication matrix has the wrong band limit");
    const MatrixXcd I = MatrixXcd::Identity(count, count);
    const MatrixXcd D1 = ops.matrix(W::KPrime) + kI * eta * ops.matrix(W::T_S0sq);
    MatrixXcd D2;
    if (form == SystemForm::Consistent)
        D2 = I + ops.matrix(W::S) + kI * eta * (ops.matrix(W::K) + I) * ops.matrix(W::S0sq);
    else
        D2 = ops.matrix(W::S) + ops.matrix(W::K);
    return D1 + mult.entries * D2;
}

double smallest_singular_value(const MatrixXcd& a)
{
    const Eigen::BDCSVD<MatrixXcd> svd(a);
    const auto& s = svd.singularValues();
    return s.size() ? s[s.size() - 1] : 0.0;
}

BoundaryOperatorMatrix assemble_combined_system(double k, const ObstacleGeometry& geom,
                                                const ImpedanceField& lambda, double eta, int N,
                                                SystemForm form, const SurfaceOperators* ops)
{
    require_band_limit(N);
    if (eta == 0.0 || !std::isfinite(eta))
        throw DomainError("coupling parameter eta must be real and nonzero");
    SurfaceOperators local;
    if (!ops) {
        local = surface_operators(k, geom, N);
        ops = &local;
    }
    const BoundaryOperatorMatrix mult = assemble_multiplication(lambda, N);
    const IdentityPlusInverse inv = invert_identity_plus(mult);
    const int count = harmonic_count(N);
    BoundaryOperatorMatrix A;
    A.kind = BoundaryOperatorMatrix::Kind::Combined;
    A.entries = MatrixXcd::Identity(count, count) -
                inv.inverse.entries * combined_bracket(*ops, mult, eta, form);
    const double smin = smallest_singular_value(A.entries);
    if (smin < 1e-12)
        throw SingularityError("combined system is numerically singular (sigma_min = " +
                               std::to_string(smin) + ")");
    return A;
}

// ---------------------------------------------------------------------------
// Right-hand side

IncidentData rhs_from_incident(double k, const Vec3& omega, const ImpedanceField& lambda,
                               const ObstacleGeometry& geom, int N, int quad_order)
{
    require_band_limit(N);
    if (!(k > 0.0) || !std::isfinite(k))
        throw DomainError("wavenumber must be positive");
    if (std::abs(omega.norm() - 1.0) > 1e-12)
        throw DomainError("incident direction must be a unit vector");
    if (quad_order < 0)
        quad_order = N + std::max(lambda.degree(), 8);
    const QuadratureRule rule = gauss_product_rule(quad_order);
    VectorXcd values(static_cast<Eigen::Index>(rule.size()));
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const auto p = geom.surface_point(rule.directions[i]);
        const cplx ui = std::exp(kI * (k * p.x.dot(omega)));
        const cplx dn = kI * k * omega.dot(p.normal) * ui;
        values[static_cast<Eigen::Index>(i)] = -(dn + kI * lambda.value(p.dir) * ui);
    }

    IncidentData out;
    out.g = project_onto_harmonics(N, rule, values);
    if (lambda.is_constant()) {
        out.rhs = -2.0 * out.g / (1.0 + kI * lambda.constant_value());
    } else {
        const BoundaryOperatorMatrix mult = assemble_multiplication(lambda, N);
        const Eigen::Index n = mult.entries.rows();
        out.rhs = (MatrixXcd::Identity(n, n) + mult.entries).partialPivLu().solve(-2.0 * out.g);
    }

    // Plane-wave series head ~1; its degree-N term is bounded by (2N+1)|j_N(k max|x|)|.
    const double tail = (2.0 * N + 1.0) * std::abs(sph_bessel_j(N, k * geom.max_radius()));
    out.truncation_warning = tail > 1e-12;
    return out;
}

} // namespace impscat
