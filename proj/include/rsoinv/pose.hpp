#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

namespace rsoinv {

/// XYZ Euler angles in radians, each wrapped into [0, 2*pi).
struct EulerXYZ {
  double rx = 0.0;
  double ry = 0.0;
  double rz = 0.0;

  /// Wraps each component; throws InputError on non-finite input.
  static EulerXYZ wrapped(double rx, double ry, double rz);
};

/// Proper rotation matrix (orthonormal, det +1).
class Rotation {
 public:
  Rotation() : m_(Eigen::Matrix3d::Identity()) {}
  /// Throws InputError unless m^T m = I and det m = +1 within `tol`.
  static Rotation from_matrix(const Eigen::Matrix3d& m, double tol = 1e-6);
  /// Row-major 9-vector; validated as from_matrix.
  static Rotation from_row_major(const std::array<double, 9>& v, double tol = 1e-6);

  const Eigen::Matrix3d& matrix() const { return m_; }
  std::array<double, 9> row_major() const;

  /// Frobenius norms of m^T m - I and |det m - 1|.
  static double orthogonality_error(const Eigen::Matrix3d& m);
  static double determinant_error(const Eigen::Matrix3d& m);

 private:
  explicit Rotation(const Eigen::Matrix3d& m) : m_(m) {}
  Eigen::Matrix3d m_;
};

/// Composition convention tag written to manifests.
inline constexpr const char* kEulerConvention = "euler-xyz-rzryrx";

Eigen::Matrix3d rot_x(double a);
Eigen::Matrix3d rot_y(double a);
Eigen::Matrix3d rot_z(double a);

/// R = Rz(rz) * Ry(ry) * Rx(rx): X is applied first.
Rotation euler_to_matrix(const EulerXYZ& e);

/// Inverse of euler_to_matrix on the cos(ry) >= 0 branch. When |cos ry| < 1e-7
/// (gimbal lock) rx is set to 0 and the free angle is folded into rz.
EulerXYZ matrix_to_euler(const Rotation& r);

/// Nearest rotation in Frobenius norm: U diag(1, 1, det(U V^T)) V^T.
/// Throws NumericalError when fewer than two singular values are nonzero.
Rotation svd_orthogonalize(const Eigen::Matrix3d& m);

/// Angle of a^T b, in [0, pi].
double geodesic_angle(const Rotation& a, const Rotation& b);

/// Cartesian grid {2 pi k / steps}^3, rx slowest and rz fastest.
std::vector<EulerXYZ> grid_labels(int steps_per_axis = 24);

}  // namespace rsoinv
