#include "rsoinv/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "rsoinv/error.hpp"

namespace rsoinv {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_rhs(const ConvOperator& op, const VectorXd& b, int k) {
  if (k < 1) throw_input("Krylov dimension must be >= 1");
  if (static_cast<std::size_t>(b.size()) != op.dim()) throw_input("right-hand side length mismatch");
  if (!b.allFinite()) throw_numerical("right-hand side has non-finite entries");
}

void check_noise(double delta, double eta) {
  if (!std::isfinite(delta) || delta < 0.0) throw_input("noise norm delta must be finite and >= 0");
  if (!std::isfinite(eta) || eta < 1.0) throw_input("safety factor eta must be finite and >= 1");
}

// Two passes of modified Gram-Schmidt of w against the first `count` columns
// of Q; accumulated coefficients are added to `coeffs` when non-null.
void orthogonalize(const MatrixXd& Q, Index count, VectorXd& w, double* coeffs) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Index i = 0; i < count; ++i) {
      const double c = Q.col(i).dot(w);
      w -= c * Q.col(i);
      if (coeffs) coeffs[i] += c;
    }
  }
}

// Arnoldi process that can be advanced one step at a time.
class ArnoldiProcess {
 public:
  ArnoldiProcess(const ConvOperator& op, const VectorXd& b, int k_max)
      : op_(op), V_(MatrixXd::Zero(b.size(), k_max + 1)), H_(MatrixXd::Zero(k_max + 1, k_max)), k_max_(k_max) {
    beta_ = b.norm();
    if (beta_ == 0.0) throw_input("Arnoldi requires a nonzero right-hand side");
    V_.col(0) = b / beta_;
  }

  bool can_step() const { return !breakdown_ && steps_ < k_max_; }

  void step() {
    const Index j = steps_;
    VectorXd w = op_.apply(V_.col(j));
    const double before = w.norm();
    orthogonalize(V_, j + 1, w, H_.col(j).data());
    const double h = w.norm();
    ++steps_;
    if (before == 0.0 || h <= kBreakdownTol * before) {
      H_(j + 1, j) = 0.0;
      breakdown_ = true;
      return;
    }
    H_(j + 1, j) = h;
    V_.col(j + 1) = w / h;
  }

  Index steps() const { return steps_; }
  bool breakdown() const { return breakdown_; }
  double beta() const { return beta_; }

  MatrixXd projected() const {
    const Index rows = breakdown_ ? steps_ : steps_ + 1;
    return H_.topLeftCorner(rows, steps_);
  }

  ArnoldiBasis basis() const {
    const Index cols = breakdown_ ? steps_ : steps_ + 1;
    return ArnoldiBasis{V_.leftCols(cols), projected(), beta_, breakdown_};
  }

  VectorXd lift(const VectorXd& y) const { return V_.leftCols(y.size()) * y; }

 private:
  const ConvOperator& op_;
  MatrixXd V_;
  MatrixXd H_;
  int k_max_;
  double beta_ = 0.0;
  Index steps_ = 0;
  bool breakdown_ = false;
};

RegSolution trivial_solution(const char* method, const ConvOperator& op, double delta, double eta) {
  RegSolution s;
  s.method = method;
  s.x = VectorXd::Zero(static_cast<Index>(op.dim()));
  s.delta = delta;
  s.eta = eta;
  s.discrepancy_target = eta * delta;
  s.status = delta == 0.0 ? DiscrepancyStatus::converged : DiscrepancyStatus::upper_bound;
  return s;
}

void finish(RegSolution& s, const ConvOperator& op, const VectorXd& b, const DiscrepancyResult& d,
            double delta, double eta) {
  s.lambda = d.lambda;
  s.alpha = d.lambda * d.lambda;
  s.projected_residual = d.residual;
  s.status = d.status;
  s.delta = delta;
  s.eta = eta;
  s.discrepancy_target = eta * delta;
  if (!s.x.allFinite()) throw_numerical(s.method + ": non-finite solution");
  s.residual_norm = (op.apply(s.x) - b).norm();
  if (!std::isfinite(s.residual_norm)) throw_numerical(s.method + ": non-finite residual");
}

}  // namespace

const char* to_string(DiscrepancyStatus s) {
  switch (s) {
    case DiscrepancyStatus::converged: return "converged";
    case DiscrepancyStatus::below_floor: return "below_floor";
    case DiscrepancyStatus::lower_bound: return "lower_bound";
    case DiscrepancyStatus::upper_bound: return "upper_bound";
  }
  return "unknown";
}

ArnoldiBasis arnoldi(const ConvOperator& op, const VectorXd& b, int k) {
  check_rhs(op, b, k);
  ArnoldiProcess proc(op, b, k);
  while (proc.can_step()) proc.step();
  return proc.basis();
}

BidiagBasis golub_kahan(const ConvOperator& op, const VectorXd& b, int k) {
  check_rhs(op, b, k);
  const double beta = b.norm();
  if (beta == 0.0) throw_input("Golub-Kahan requires a nonzero right-hand side");

  const Index n = b.size();
  MatrixXd U = MatrixXd::Zero(n, k + 1);
  MatrixXd V = MatrixXd::Zero(n, k);
  MatrixXd B = MatrixXd::Zero(k + 1, k);
  U.col(0) = b / beta;

  VectorXd r = op.apply_adjoint(U.col(0));
  double alpha = r.norm();
  if (alpha == 0.0) {
    // b is orthogonal to range(A): the projected problem is empty.
    return BidiagBasis{U.leftCols(1), MatrixXd(n, 0), MatrixXd(1, 0), beta, true};
  }
  V.col(0) = r / alpha;

  for (Index j = 0; j < k; ++j) {
    B(j, j) = alpha;
    VectorXd p = op.apply(V.col(j));
    const double p_before = p.norm();
    p -= alpha * U.col(j);
    orthogonalize(U, j + 1, p, nullptr);
    const double beta_next = p.norm();
    if (p_before == 0.0 || beta_next <= kBreakdownTol * p_before) {
      // A V_j lies in span(U_j): square projected problem.
      return BidiagBasis{U.leftCols(j + 1), V.leftCols(j + 1), B.topLeftCorner(j + 1, j + 1), beta, true};
    }
    B(j + 1, j) = beta_next;
    U.col(j + 1) = p / beta_next;
    if (j + 1 == k) break;

    VectorXd q = op.apply_adjoint(U.col(j + 1));
    const double q_before = q.norm();
    q -= beta_next * V.col(j);
    orthogonalize(V, j + 1, q, nullptr);
    alpha = q.norm();
    if (q_before == 0.0 || alpha <= kBreakdownTol * q_before) {
      // No new right direction: the (j+2) x (j+1) projection is exact.
      return BidiagBasis{U.leftCols(j + 2), V.leftCols(j + 1), B.topLeftCorner(j + 2, j + 1), beta, true};
    }
    V.col(j + 1) = q / alpha;
  }
  return BidiagBasis{U, V, B, beta, false};
}

VectorXd projected_tikhonov(const MatrixXd& M, double beta, double lambda) {
  if (!M.allFinite() || !std::isfinite(beta) || !std::isfinite(lambda))
    throw_numerical("projected Tikhonov: non-finite input");
  if (lambda < 0.0) throw_input("projected Tikhonov: lambda must be >= 0");
  const Index m = M.rows();
  const Index k = M.cols();
  if (k == 0) return VectorXd(0);

  MatrixXd stacked = MatrixXd::Zero(m + k, k);
  stacked.topRows(m) = M;
  stacked.bottomRows(k).diagonal().setConstant(lambda);
  VectorXd rhs = VectorXd::Zero(m + k);
  rhs[0] = beta;
  VectorXd y = stacked.completeOrthogonalDecomposition().solve(rhs);
  if (!y.allFinite()) throw_numerical("projected Tikhonov: non-finite solution");
  return y;
}

ProjectedResidual::ProjectedResidual(const MatrixXd& M, double beta) {
  if (!M.allFinite() || !std::isfinite(beta)) throw_numerical("projected residual: non-finite input");
  if (M.cols() == 0) {
    perp2_ = beta * beta;
    return;
  }
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeFullU);
  const VectorXd s = svd.singularValues();
  const VectorXd c = beta * svd.matrixU().row(0).transpose();
  const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(M.rows(), M.cols())) *
                     (s.size() > 0 ? s[0] : 0.0);
  Index rank = 0;
  while (rank < s.size() && s[rank] > tol) ++rank;
  sigma_ = s.head(rank);
  coeff_ = c.head(rank);
  perp2_ = c.tail(c.size() - rank).squaredNorm();
}

double ProjectedResidual::operator()(double lambda) const {
  const double l2 = lambda * lambda;
  double acc = perp2_;
  for (Index i = 0; i < sigma_.size(); ++i) {
    const double f = l2 / (sigma_[i] * sigma_[i] + l2);
    acc += f * f * coeff_[i] * coeff_[i];
  }
  return std::sqrt(acc);
}

DiscrepancyResult discrepancy_select(const MatrixXd& M, double beta, double delta, double eta) {
  check_noise(delta, eta);
  const ProjectedResidual phi(M, beta);
  const double target = eta * delta;
  const double lo_edge = target * (1.0 - kDiscrepancyRelTol);
  const double hi_edge = target * (1.0 + kDiscrepancyRelTol);

  auto result = [&](double lambda, DiscrepancyStatus status) {
    DiscrepancyResult r;
    r.lambda = lambda;
    r.status = status;
    r.y = projected_tikhonov(M, beta, lambda);
    VectorXd res = M * r.y;
    if (res.size() > 0) res[0] -= beta;
    r.residual = res.size() > 0 ? res.norm() : std::abs(beta);
    return r;
  };

  const double phi0 = phi(0.0);
  if (phi0 > hi_edge) return result(0.0, DiscrepancyStatus::below_floor);
  if (phi0 >= lo_edge) return result(0.0, DiscrepancyStatus::converged);

  const double phi_lo = phi(kLambdaMin);
  if (phi_lo >= lo_edge)
    return result(kLambdaMin, phi_lo <= hi_edge ? DiscrepancyStatus::converged : DiscrepancyStatus::lower_bound);
  const double phi_hi = phi(kLambdaMax);
  if (phi_hi < lo_edge) return result(kLambdaMax, DiscrepancyStatus::upper_bound);
  if (phi_hi <= hi_edge) return result(kLambdaMax, DiscrepancyStatus::converged);

  double lo = std::log(kLambdaMin);
  double hi = std::log(kLambdaMax);
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double v = phi(std::exp(mid));
    if (v < lo_edge) lo = mid;
    else if (v > hi_edge) hi = mid;
    else break;
  }
  return result(std::exp(mid), DiscrepancyStatus::converged);
}

RegSolution arnoldi_tikhonov(const ConvOperator& op, const VectorXd& b, double delta, double eta, int k) {
  check_rhs(op, b, k);
  check_noise(delta, eta);
  if (b.norm() == 0.0) return trivial_solution("at", op, delta, eta);

  ArnoldiProcess proc(op, b, k);
  while (proc.can_step()) proc.step();
  const auto d = discrepancy_select(proc.projected(), proc.beta(), delta, eta);

  RegSolution s;
  s.method = "at";
  s.x = proc.lift(d.y);
  s.iterations = static_cast<int>(proc.steps());
  s.breakdown = proc.breakdown();
  finish(s, op, b, d, delta, eta);
  s.history.push_back({d.residual, d.lambda});
  return s;
}

RegSolution hybrid_gmres(const ConvOperator& op, const VectorXd& b, double delta, double eta, int k_max,
                         bool early_stop) {
  check_rhs(op, b, k_max);
  check_noise(delta, eta);
  if (b.norm() == 0.0) return trivial_solution("hgmres", op, delta, eta);

  ArnoldiProcess proc(op, b, k_max);
  DiscrepancyResult d;
  std::vector<IterationRecord> history;
  const double stop_level = eta * delta * (1.0 + kDiscrepancyRelTol);
  VectorXd x, x_prev;
  while (proc.can_step()) {
    proc.step();
    d = discrepancy_select(proc.projected(), proc.beta(), delta, eta);
    history.push_back({d.residual, d.lambda});
    x_prev = std::move(x);
    x = proc.lift(d.y);
    if (!early_stop || proc.steps() < kHybridMinIters) continue;
    if (d.status == DiscrepancyStatus::upper_bound) break;
    const bool settled = x_prev.size() == x.size() && (x - x_prev).norm() <= kHybridStabilityTol * x.norm();
    if (d.residual <= stop_level && settled) break;
  }

  RegSolution s;
  s.method = "hgmres";
  s.x = std::move(x);
  s.iterations = static_cast<int>(proc.steps());
  s.breakdown = proc.breakdown();
  s.history = std::move(history);
  finish(s, op, b, d, delta, eta);
  return s;
}

RegSolution gk_tikhonov(const ConvOperator& op, const VectorXd& b, double delta, double eta, int k) {
  check_rhs(op, b, k);
  check_noise(delta, eta);
  if (b.norm() == 0.0) return trivial_solution("gkt", op, delta, eta);

  const BidiagBasis gk = golub_kahan(op, b, k);
  const auto d = discrepancy_select(gk.B, gk.beta, delta, eta);

  RegSolution s;
  s.method = "gkt";
  s.x = gk.V.leftCols(d.y.size()) * d.y;
  s.iterations = static_cast<int>(gk.steps());
  s.breakdown = gk.breakdown;
  finish(s, op, b, d, delta, eta);
  s.history.push_back({d.residual, d.lambda});
  return s;
}

}  // namespace rsoinv
