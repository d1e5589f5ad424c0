#include "rsoinv/conv_operator.hpp"

#include <cmath>
#include <span>

#include "fft.hpp"
#include "rsoinv/error.hpp"

namespace rsoinv {

ConvOperator::ConvOperator(const ImageGray& kernel, std::size_t width, std::size_t height)
    : width_(width), height_(height) {
  if (kernel.empty()) throw_input("empty kernel");
  if (width == 0 || height == 0) throw_input("operator dimensions must be positive");
  fft_ = std::make_shared<detail::Fft2d>(width, height);
  const auto grid = detail::embed_centered(kernel.pixels(), kernel.width(), kernel.height(), width, height);
  kernel_hat_ = fft_->forward(grid);
}

Eigen::VectorXd ConvOperator::transform(const Eigen::VectorXd& x, bool adjoint) const {
  if (static_cast<std::size_t>(x.size()) != dim()) throw_input("operator/vector length mismatch");
  const auto spec = fft_->forward(std::span<const double>(x.data(), dim()));
  const auto out = fft_->inverse(detail::multiply(spec, kernel_hat_, adjoint));
  Eigen::VectorXd result = Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  if (!result.allFinite()) throw_numerical("operator produced non-finite values");
  return result;
}

Eigen::VectorXd ConvOperator::apply(const Eigen::VectorXd& x) const { return transform(x, false); }

Eigen::VectorXd ConvOperator::apply_adjoint(const Eigen::VectorXd& y) const { return transform(y, true); }

ConvOperator make_operator(const ImageGray& kernel, std::size_t width, std::size_t height) {
  return ConvOperator(kernel, width, height);
}

Eigen::VectorXd to_vector(const ImageGray& img) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(img.size()));
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) v[static_cast<Eigen::Index>(i)] = px[i];
  return v;
}

ImageGray to_image(const Eigen::VectorXd& x, std::size_t width, std::size_t height) {
  if (static_cast<std::size_t>(x.size()) != width * height) throw_input("vector length does not match image size");
  std::vector<float> data(width * height);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<float>(x[static_cast<Eigen::Index>(i)]);
    if (!std::isfinite(data[i])) throw_numerical("non-finite value in solution vector");
  }
  return ImageGray(width, height, std::move(data));
}

}  // namespace rsoinv
