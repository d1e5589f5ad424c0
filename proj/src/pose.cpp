#include "rsoinv/pose.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "rsoinv/error.hpp"

namespace rsoinv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGimbalTol = 1e-7;

double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod of a tiny negative can round up to 2 pi
  return w;
}

}  // namespace

EulerXYZ EulerXYZ::wrapped(double rx, double ry, double rz) {
  if (!std::isfinite(rx) || !std::isfinite(ry) || !std::isfinite(rz)) throw_input("Euler angles must be finite");
  return EulerXYZ{wrap_angle(rx), wrap_angle(ry), wrap_angle(rz)};
}

double Rotation::orthogonality_error(const Eigen::Matrix3d& m) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
}

double Rotation::determinant_error(const Eigen::Matrix3d& m) { return std::abs(m.determinant() - 1.0); }

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m, double tol) {
  if (!m.allFinite()) throw_input("rotation matrix has non-finite entries");
  if (orthogonality_error(m) > tol) throw_input("matrix is not orthonormal");
  if (determinant_error(m) > tol) throw_input("matrix determinant is not +1");
  return Rotation(m);
}

Rotation Rotation::from_row_major(const std::array<double, 9>& v, double tol) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[static_cast<std::size_t>(3 * r + c)];
  return from_matrix(m, tol);
}

std::array<double, 9> Rotation::row_major() const {
  std::array<double, 9> v{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) v[static_cast<std::size_t>(3 * r + c)] = m_(r, c);
  return v;
}

Eigen::Matrix3d rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Eigen::Matrix3d rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Eigen::Matrix3d rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Eigen::Matrix3d m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Rotation euler_to_matrix(const EulerXYZ& e) {
  return Rotation::from_matrix(rot_z(e.rz) * rot_y(e.ry) * rot_x(e.rx));
}

EulerXYZ matrix_to_euler(const Rotation& r) {
  const Eigen::Matrix3d& m = r.matrix();
  // m(2,0) = -sin ry, m(2,1) = cos ry sin rx, m(2,2) = cos ry cos rx,
  // m(1,0) = sin rz cos ry, m(0,0) = cos rz cos ry.
  const double cy = std::hypot(m(0, 0), m(1, 0));
  const double ry = std::atan2(-m(2, 0), cy);
  if (cy < kGimbalTol) {
    // rx = 0: m(0,1) = -sin rz and m(1,1) = cos rz for either sign of sin ry.
    return EulerXYZ::wrapped(0.0, ry, std::atan2(-m(0, 1), m(1, 1)));
  }
  return EulerXYZ::wrapped(std::atan2(m(2, 1), m(2, 2)), ry, std::atan2(m(1, 0), m(0, 0)));
}

Rotation svd_orthogonalize(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw_numerical("cannot orthogonalize a non-finite matrix");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s[0] > 0.0) || s[1] <= 1e-12 * s[0]) throw_numerical("degenerate input: rank < 2");
  const Eigen::Matrix3d& U = svd.matrixU();
  const Eigen::Matrix3d& V = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return Rotation::from_matrix(U * d.asDiagonal() * V.transpose());
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
  const Eigen::Matrix3d rel = a.matrix().transpose() * b.matrix();
  // atan2 of (sin, cos) of the angle; equal to acos((tr - 1) / 2) but
  // well conditioned near 0 and pi.
  const double c = 0.5 * (rel.trace() - 1.0);
  const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), c);
}

std::vector<EulerXYZ> grid_labels(int steps) {
  if (steps < 1) throw_input("grid steps must be >= 1");
  std::vector<EulerXYZ> out;
  out.reserve(static_cast<std::size_t>(steps) * steps * steps);
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j)
      for (int k = 0; k < steps; ++k)
        out.push_back(EulerXYZ{kTwoPi * i / steps, kTwoPi * j / steps, kTwoPi * k / steps});
  return out;
}

}  // namespace rsoinv
