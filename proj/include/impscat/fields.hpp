#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "impscat/specfun.hpp"

namespace impscat {

using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;

/// Value, gradient and Hessian of a field at one point.
struct FieldJet
{
    cplx value = 0.0;
    Vec3c grad = Vec3c::Zero();
    Mat3c hess = Mat3c::Zero();

    cplx laplacian() const { return hess.trace(); }
};

/// Smooth field with analytic derivatives up to second order.
class Field
{
  public:
    virtual ~Field() = default;
    virtual FieldJet jet(const Vec3& x) const = 0;
    virtual std::string name() const = 0;

    cplx value(const Vec3& x) const { return jet(x).value; }
};

using FieldPtr = std::shared_ptr<const Field>;

/// amplitude * e^{i(k d·x + phase)}; with `real_part` set, amplitude * cos(k d·x + phase).
class PlaneWaveField final : public Field
{
  public:
    PlaneWaveField(double k, const Vec3& direction, double phase = 0.0, bool real_part = false,
                   double amplitude = 1.0);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override;

  private:
    double k_, phase_, amplitude_;
    Vec3 d_;
    bool real_;
};

/// Fundamental solution e^{ik|x-z|} / (4π|x-z|) with source z.
class PointSourceField final : public Field
{
  public:
    PointSourceField(double k, const Vec3& source, cplx amplitude = 1.0);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override { return "point-source"; }

  private:
    double k_;
    Vec3 z_;
    cplx amplitude_;
};

/// xᵀAx + b·x + c with symmetric A.
class QuadraticField final : public Field
{
  public:
    QuadraticField(const Eigen::Matrix3d& A, const Vec3& b, double c);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override { return "quadratic"; }

  private:
    Eigen::Matrix3d A_;
    Vec3 b_;
    double c_;
};

/// Σ_n a_n f_n(k|x-c|) P_n(x̂·ω) with f_n = j_n (regular) or h_n^(1) (outgoing).
class AxisymmetricMultipoleField final : public Field
{
  public:
    enum class Radial { Bessel, Hankel };
    AxisymmetricMultipoleField(double k, const Vec3& axis, std::vector<cplx> coefficients,
                               Radial radial, const Vec3& center = Vec3::Zero());
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override;

  private:
    double k_;
    Vec3 axis_, center_;
    std::vector<cplx> a_;
    Radial radial_;
};

/// j_n(k|x-c|) R_n^m((x-c)/|x-c|), synthesised exactly from plane waves by the Funk-Hecke
/// formula on a product rule resolving |x-c| <= max_radius.
class SeparatedModeField final : public Field
{
  public:
    SeparatedModeField(double k, int n, int m, const Vec3& center, double max_radius);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override;

  private:
    double k_;
    int n_, m_;
    Vec3 center_;
    std::vector<Vec3> dirs_;
    std::vector<cplx> weights_;
};

/// Sum of fields.
class SumField final : public Field
{
  public:
    explicit SumField(std::vector<FieldPtr> parts);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override;

  private:
    std::vector<FieldPtr> parts_;
};

/// scale * field.
class ScaledField final : public Field
{
  public:
    ScaledField(FieldPtr field, cplx scale);
    FieldJet jet(const Vec3& x) const override;
    std::string name() const override { return "scaled-" + field_->name(); }

  private:
    FieldPtr field_;
    cplx scale_;
};

/// Mie solution for a sphere of radius a centred at the origin with constant impedance λ₀:
/// the scattered part, or incident + scattered when `total` is set.
FieldPtr mie_field(double k, const Vec3& omega, double a, double lambda0, bool total);

} // namespace impscat
