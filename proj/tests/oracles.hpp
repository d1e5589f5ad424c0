// Reference implementations used only by tests. Each one takes a different
// route from the library code it checks: spatial sums instead of FFTs, dense
// matrices instead of operators, quaternions instead of matrices.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rsoinv/conv_operator.hpp"
#include "rsoinv/image.hpp"

namespace oracle {

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* root = std::getenv("TEST_TMPDIR");
  std::filesystem::path base = root ? root : std::filesystem::temp_directory_path() / "rsoinv-tests";
  const auto p = base / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline rsoinv::ImageGray random_image(std::size_t w, std::size_t h, std::mt19937_64& rng, double lo = 0.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> d(w * h);
  for (auto& v : d) v = static_cast<float>(u(rng));
  return rsoinv::ImageGray(w, h, std::move(d));
}

// Nonnegative kernel with odd sides summing to one (to float precision).
inline rsoinv::ImageGray random_kernel(std::size_t side, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> d(side * side);
  for (auto& v : d) v = u(rng);
  const double s = std::accumulate(d.begin(), d.end(), 0.0);
  std::vector<float> f(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) f[i] = static_cast<float>(d[i] / s);
  return rsoinv::ImageGray(side, side, std::move(f));
}

inline rsoinv::ImageGray delta_kernel(std::size_t side) {
  rsoinv::ImageGray k(side, side);
  k(side / 2, side / 2) = 1.0f;
  return k;
}

inline std::size_t wrap(long v, std::size_t n) {
  const long m = static_cast<long>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

// out(x, y) = sum over kernel offsets (dx, dy) of k(dx, dy) * img(x - dx, y - dy), periodic.
inline std::vector<double> brute_convolve(const rsoinv::ImageGray& img, const rsoinv::ImageGray& k) {
  const long rx = static_cast<long>(k.width() / 2), ry = static_cast<long>(k.height() / 2);
  std::vector<double> out(img.size(), 0.0);
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (long dy = -ry; dy <= ry; ++dy)
        for (long dx = -rx; dx <= rx; ++dx)
          acc += double(k(dx + rx, dy + ry)) *
                 double(img(wrap(long(x) - dx, img.width()), wrap(long(y) - dy, img.height())));
      out[y * img.width() + x] = acc;
    }
  return out;
}

// Block-circulant matrix assembled entry by entry from the kernel.
inline Eigen::MatrixXd circulant_matrix(const rsoinv::ImageGray& k, std::size_t w, std::size_t h) {
  const long rx = static_cast<long>(k.width() / 2), ry = static_cast<long>(k.height() / 2);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(long(w * h), long(w * h));
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (long dy = -ry; dy <= ry; ++dy)
        for (long dx = -rx; dx <= rx; ++dx) {
          const std::size_t col = wrap(long(y) - dy, h) * w + wrap(long(x) - dx, w);
          A(long(y * w + x), long(col)) += double(k(dx + rx, dy + ry));
        }
  return A;
}

// Dense matrix of an operator, column j = A e_j.
inline Eigen::MatrixXd materialize(const rsoinv::ConvOperator& op, bool adjoint = false) {
  const long n = long(op.dim());
  Eigen::MatrixXd A(n, n);
  for (long j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(j) = 1.0;
    A.col(j) = adjoint ? op.apply_adjoint(e) : op.apply(e);
  }
  return A;
}

// argmin ||A x - b||^2 + lambda^2 ||x||^2 through the filter factors of a Jacobi SVD.
inline Eigen::VectorXd dense_tikhonov(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const Eigen::VectorXd c = svd.matrixU().transpose() * b;
  Eigen::VectorXd f(s.size());
  for (long i = 0; i < s.size(); ++i) f(i) = s(i) / (s(i) * s(i) + lambda * lambda) * c(i);
  return svd.matrixV() * f;
}

// Symmetric Lanczos tridiagonal (k x k) with full reorthogonalization.
inline Eigen::MatrixXd dense_lanczos(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int k) {
  const long n = A.rows();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, k);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
  Q.col(0) = b.normalized();
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd w = A * Q.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) w -= Q.col(i).dot(w) * Q.col(i);
    T(j, j) = Q.col(j).dot(A * Q.col(j));
    if (j + 1 < k) {
      const double beta = w.norm();
      T(j + 1, j) = T(j, j + 1) = beta;
      Q.col(j + 1) = w / beta;
    }
  }
  return T;
}

// Shoemake's uniform quaternion on S^3.
inline Eigen::Quaterniond uniform_quaternion(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double u1 = u(rng), u2 = u(rng), u3 = u(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t2 = 2.0 * M_PI * u2, t3 = 2.0 * M_PI * u3;
  return Eigen::Quaterniond(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
}

inline double quaternion_angle(const Eigen::Quaterniond& p, const Eigen::Quaterniond& q) {
  const double d = std::min(1.0, std::abs(p.coeffs().dot(q.coeffs())));
  return 2.0 * std::acos(d);
}

// Monte-Carlo mean geodesic distance between independent uniform rotations.
inline double uniform_rotation_mean_angle(std::size_t pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double acc = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) acc += quaternion_angle(uniform_quaternion(rng), uniform_quaternion(rng));
  return acc / static_cast<double>(pairs);
}

// Hamilton apportionment with integer weights: floor shares, then leftover
// seats to the largest remainders, ties to the earlier category.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<std::size_t, 3>& weights) {
  const std::size_t total = weights[0] + weights[1] + weights[2];
  std::array<std::size_t, 3> seats{}, rem{};
  std::size_t given = 0;
  for (int i = 0; i < 3; ++i) {
    seats[i] = n * weights[i] / total;
    rem[i] = n * weights[i] % total;
    given += seats[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; given < n; ++i, ++given) ++seats[order[i]];
  return seats;
}

inline double ncc(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / double(a.size());
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / double(b.size());
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Pixel-integrated isotropic Gaussian of unit flux centred at (cx, cy);
// pixel (i, j) covers [i - 0.5, i + 0.5] x [j - 0.5, j + 0.5].
inline double gaussian_pixel(double i, double j, double cx, double cy, double sigma) {
  const double s = sigma * std::sqrt(2.0);
  const double ix = 0.5 * (std::erf((i + 0.5 - cx) / s) - std::erf((i - 0.5 - cx) / s));
  const double iy = 0.5 * (std::erf((j + 0.5 - cy) / s) - std::erf((j - 0.5 - cy) / s));
  return ix * iy;
}

}  // namespace oracle
