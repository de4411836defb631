#include "impscat/fields.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impscat/errors.hpp"
#include "impscat/forward.hpp"

namespace impscat {

namespace {

constexpr cplx kI{0.0, 1.0};

Vec3 unit(const Vec3& v, const char* what)
{
    const double n = v.norm();
    if (!(n > 0.0))
        throw DomainError(std::string(what) + ": direction must be nonzero");
    return v / n;
}

} // namespace

PlaneWaveField::PlaneWaveField(double k, const Vec3& direction, double phase, bool real_part,
                               double amplitude)
    : k_(k), phase_(phase), amplitude_(amplitude), d_(unit(direction, "plane wave")),
      real_(real_part)
{
}

FieldJet PlaneWaveField::jet(const Vec3& x) const
{
    const double theta = k_ * d_.dot(x) + phase_;
    const Eigen::Matrix3d ddt = d_ * d_.transpose();
    FieldJet j;
    if (real_) {
        const double c = amplitude_ * std::cos(theta), s = amplitude_ * std::sin(theta);
        j.value = c;
        j.grad = (-s * k_ * d_).cast<cplx>();
        j.hess = (-c * k_ * k_ * ddt).cast<cplx>();
    } else {
        const cplx v = amplitude_ * std::exp(kI * theta);
        j.value = v;
        j.grad = (kI * k_ * v) * d_.cast<cplx>();
        j.hess = (-k_ * k_ * v) * ddt.cast<cplx>();
    }
    return j;
}

std::string PlaneWaveField::name() const { return real_ ? "real-plane-wave" : "plane-wave"; }

PointSourceField::PointSourceField(double k, const Vec3& source, cplx amplitude)
    : k_(k), z_(source), amplitude_(amplitude)
{
}

FieldJet PointSourceField::jet(const Vec3& x) const
{
    const Vec3 R = x - z_;
    const double r = R.norm();
    if (!(r > 0.0))
        throw DomainError("point source evaluated at its source");
    const Vec3 e = R / r;
    const cplx phi = amplitude_ * std::exp(kI * (k_ * r)) / (4.0 * kPi * r);
    const cplx a = kI * k_ - 1.0 / r;
    const cplx d1 = phi * a;
    const cplx d2 = phi * (a * a + 1.0 / (r * r));
    const Eigen::Matrix3d eet = e * e.transpose();
    FieldJet j;
    j.value = phi;
    j.grad = d1 * e.cast<cplx>();
    j.hess = d2 * eet.cast<cplx>() + (d1 / r) * (Eigen::Matrix3d::Identity() - eet).cast<cplx>();
    return j;
}

QuadraticField::QuadraticField(const Eigen::Matrix3d& A, const Vec3& b, double c)
    : A_(0.5 * (A + A.transpose())), b_(b), c_(c)
{
}

FieldJet QuadraticField::jet(const Vec3& x) const
{
    FieldJet j;
    j.value = x.dot(A_ * x) + b_.dot(x) + c_;
    j.grad = (2.0 * A_ * x + b_).cast<cplx>();
    j.hess = (2.0 * A_).cast<cplx>();
    return j;
}

AxisymmetricMultipoleField::AxisymmetricMultipoleField(double k, const Vec3& axis,
                                                       std::vector<cplx> coefficients,
                                                       Radial radial, const Vec3& center)
    : k_(k), axis_(unit(axis, "multipole axis")), center_(center), a_(std::move(coefficients)),
      radial_(radial)
{
    if (!(k > 0.0))
        throw DomainError("multipole field: k must be positive");
}

FieldJet AxisymmetricMultipoleField::jet(const Vec3& x) const
{
    const Vec3 R = x - center_;
    const double r = R.norm();
    if (!(r > 1e-12))
        throw DomainError("multipole field evaluated at its centre");
    const Vec3 e = R / r;
    const double t = std::clamp(e.dot(axis_), -1.0, 1.0);
    const int nmax = static_cast<int>(a_.size()) - 1;
    const double z = k_ * r;
    const SphericalBesselTable bt = sph_bessel_table(std::max(nmax, 0), z);
    const LegendreTable P = legendre_table(std::max(nmax, 0), t);

    const Vec3 grad_t = (axis_ - t * e) / r;
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    const Eigen::Matrix3d hess_r = (I - e * e.transpose()) / r;
    const Eigen::Matrix3d hess_t =
        (-axis_ * e.transpose() - e * axis_.transpose() + 3.0 * t * e * e.transpose() - t * I) /
        (r * r);
    const Eigen::Matrix3d eet = e * e.transpose();
    const Eigen::Matrix3d cross = e * grad_t.transpose() + grad_t * e.transpose();
    const Eigen::Matrix3d gtt = grad_t * grad_t.transpose();

    FieldJet j;
    for (int n = 0; n <= nmax; ++n) {
        cplx f, df;
        if (radial_ == Radial::Bessel) {
            f = bt.j[n];
            df = bt.dj[n];
        } else {
            f = bt.h(n);
            df = bt.dh(n);
        }
        const cplx d2f = -2.0 / z * df - (1.0 - n * (n + 1.0) / (z * z)) * f;
        const cplx g = a_[n] * f, g1 = a_[n] * k_ * df, g2 = a_[n] * k_ * k_ * d2f;
        const double p = P.p[n], dp = P.dp[n], d2p = P.d2p[n];
        j.value += g * p;
        j.grad += (g1 * p) * e.cast<cplx>() + (g * dp) * grad_t.cast<cplx>();
        j.hess += (g2 * p) * eet.cast<cplx>() + (g1 * dp) * cross.cast<cplx>() +
                  (g1 * p) * hess_r.cast<cplx>() + (g * d2p) * gtt.cast<cplx>() +
                  (g * dp) * hess_t.cast<cplx>();
    }
    return j;
}

std::string AxisymmetricMultipoleField::name() const
{
    return radial_ == Radial::Bessel ? "regular-multipole" : "outgoing-multipole";
}

SeparatedModeField::SeparatedModeField(double k, int n, int m, const Vec3& center,
                                       double max_radius)
    : k_(k), n_(n), m_(m), center_(center)
{
    if (n < 0 || std::abs(m) > n)
        throw DomainError("separated mode: require |m| <= n");
    if (!(k > 0.0) || !(max_radius > 0.0))
        throw DomainError("separated mode: k and max_radius must be positive");
    const int order = n + static_cast<int>(std::ceil(k * max_radius)) + 16;
    const QuadratureRule rule = gauss_product_rule(order);
    std::vector<double> R(harmonic_count(n));
    // j_n(k s) R(ŝ) = (4π iⁿ)^{-1} ∫ e^{ik s·d} R(d) dd
    cplx in = 1.0;
    for (int i = 0; i < n; ++i)
        in *= kI;
    const cplx scale = 1.0 / (4.0 * kPi * in);
    for (std::size_t q = 0; q < rule.size(); ++q) {
        eval_real_harmonics(n, rule.directions[q], R);
        const double value = R[harmonic_index(n, m)];
        if (value == 0.0)
            continue;
        dirs_.push_back(rule.directions[q]);
        weights_.push_back(scale * rule.weights[q] * value);
    }
}

FieldJet SeparatedModeField::jet(const Vec3& x) const
{
    const Vec3 s = x - center_;
    FieldJet j;
    for (std::size_t q = 0; q < dirs_.size(); ++q) {
        const Vec3& d = dirs_[q];
        const cplx v = weights_[q] * std::exp(kI * (k_ * d.dot(s)));
        j.value += v;
        j.grad += (kI * k_ * v) * d.cast<cplx>();
        j.hess += (-k_ * k_ * v) * (d * d.transpose()).cast<cplx>();
    }
    return j;
}

std::string SeparatedModeField::name() const
{
    return "separated-mode(" + std::to_string(n_) + "," + std::to_string(m_) + ")";
}

SumField::SumField(std::vector<FieldPtr> parts) : parts_(std::move(parts)) {}

FieldJet SumField::jet(const Vec3& x) const
{
    FieldJet j;
    for (const auto& p : parts_) {
        const FieldJet q = p->jet(x);
        j.value += q.value;
        j.grad += q.grad;
        j.hess += q.hess;
    }
    return j;
}

std::string SumField::name() const
{
    std::string s = "sum(";
    for (std::size_t i = 0; i < parts_.size(); ++i)
        s += (i ? "," : "") + parts_[i]->name();
    return s + ")";
}

ScaledField::ScaledField(FieldPtr field, cplx scale) : field_(std::move(field)), scale_(scale) {}

FieldJet ScaledField::jet(const Vec3& x) const
{
    FieldJet j = field_->jet(x);
    j.value *= scale_;
    j.grad *= scale_;
    j.hess *= scale_;
    return j;
}

FieldPtr mie_field(double k, const Vec3& omega, double a, double lambda0, bool total)
{
    const std::vector<cplx> c = mie_coefficients(k, a, lambda0);
    std::vector<cplx> coeffs(c.size());
    cplx in = 1.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        coeffs[n] = in * (2.0 * n + 1.0) * c[n];
        in *= kI;
    }
    auto scattered = std::make_shared<AxisymmetricMultipoleField>(
        k, omega, std::move(coeffs), AxisymmetricMultipoleField::Radial::Hankel);
    if (!total)
        return scattered;
    return std::make_shared<SumField>(
        std::vector<FieldPtr>{std::make_shared<PlaneWaveField>(k, omega), scattered});
}

} // namespace impscat
