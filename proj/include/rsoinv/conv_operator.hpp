#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "rsoinv/image.hpp"

namespace rsoinv {

namespace detail {
class Fft2d;
}

/// Matrix-free periodic convolution operator A acting on row-major flattened
/// images of width x height (n = width * height). The kernel transform is
/// computed once; apply and apply_adjoint are reentrant.
class ConvOperator {
 public:
  ConvOperator(const ImageGray& kernel, std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  /// Number of rows (== columns) of A.
  std::size_t dim() const { return width_ * height_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  /// Multiplies by the conjugate spectrum: convolution with the point-reflected kernel.
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& y) const;

  const std::vector<std::complex<double>>& kernel_hat() const { return kernel_hat_; }

 private:
  Eigen::VectorXd transform(const Eigen::VectorXd& x, bool adjoint) const;

  std::size_t width_;
  std::size_t height_;
  std::shared_ptr<const detail::Fft2d> fft_;
  std::vector<std::complex<double>> kernel_hat_;
};

ConvOperator make_operator(const ImageGray& kernel, std::size_t width, std::size_t height);

Eigen::VectorXd to_vector(const ImageGray& img);
/// Throws InputError on a size mismatch, NumericalError on non-finite values.
ImageGray to_image(const Eigen::VectorXd& x, std::size_t width, std::size_t height);

}  // namespace rsoinv
