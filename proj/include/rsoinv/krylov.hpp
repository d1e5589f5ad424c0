#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsoinv/conv_operator.hpp"

namespace rsoinv {

/// Orthonormal Krylov basis of K_k(A, b) and its Hessenberg projection:
/// A V.leftCols(k) = V H. Without breakdown V has k+1 columns and H is
/// (k+1) x k. On breakdown the space is invariant, V has k columns and H is
/// square k x k.
struct ArnoldiBasis {
  Eigen::MatrixXd V;
  Eigen::MatrixXd H;
  double beta = 0.0;  // ||b||
  bool breakdown = false;

  Eigen::Index steps() const { return H.cols(); }
};

/// Golub-Kahan bidiagonalization: A V = U B with B lower bidiagonal.
/// Without breakdown U has k+1 columns and B is (k+1) x k; a breakdown on the
/// left recurrence leaves B square.
struct BidiagBasis {
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::MatrixXd B;
  double beta = 0.0;
  bool breakdown = false;

  Eigen::Index steps() const { return B.cols(); }
};

/// A new basis vector whose norm falls below this fraction of its norm before
/// orthogonalization signals an invariant subspace.
inline constexpr double kBreakdownTol = 1e-12;

/// Modified Gram-Schmidt Arnoldi with one full reorthogonalization pass.
/// Throws InputError if k < 1 or b == 0.
ArnoldiBasis arnoldi(const ConvOperator& op, const Eigen::VectorXd& b, int k);

/// Golub-Kahan recurrence with full reorthogonalization of both bases.
BidiagBasis golub_kahan(const ConvOperator& op, const Eigen::VectorXd& b, int k);

/// argmin_y ||M y - beta e1||^2 + lambda^2 ||y||^2, solved as the stacked
/// least-squares problem [M; lambda I] y = [beta e1; 0].
Eigen::VectorXd projected_tikhonov(const Eigen::MatrixXd& M, double beta, double lambda);

enum class DiscrepancyStatus {
  converged,    // residual within 1e-3 of eta * delta
  below_floor,  // unregularized residual already exceeds eta * delta; lambda = 0
  lower_bound,  // root lies below the search range; lambda = kLambdaMin
  upper_bound,  // residual cannot reach eta * delta; lambda = kLambdaMax
};

const char* to_string(DiscrepancyStatus s);

inline constexpr double kLambdaMin = 1e-10;
inline constexpr double kLambdaMax = 1e10;
inline constexpr double kDiscrepancyRelTol = 1e-3;
inline constexpr double kDefaultEta = 1.01;

struct DiscrepancyResult {
  double lambda = 0.0;
  Eigen::VectorXd y;
  double residual = 0.0;  // ||M y - beta e1||
  DiscrepancyStatus status = DiscrepancyStatus::converged;
};

/// Projected residual phi(lambda) = ||M y_lambda - beta e1|| evaluated through
/// the SVD filter factors of M. Monotone nondecreasing in lambda.
class ProjectedResidual {
 public:
  ProjectedResidual(const Eigen::MatrixXd& M, double beta);
  double operator()(double lambda) const;

 private:
  Eigen::VectorXd sigma_;
  Eigen::VectorXd coeff_;  // components of beta e1 along range(M)
  double perp2_ = 0.0;     // squared component outside range(M)
};

/// Chooses lambda so that phi(lambda) matches eta * delta, by bisection on
/// log(lambda) over [kLambdaMin, kLambdaMax].
DiscrepancyResult discrepancy_select(const Eigen::MatrixXd& M, double beta, double delta,
                                     double eta = kDefaultEta);

struct IterationRecord {
  double residual_norm;  // projected residual at this iteration
  double lambda;
};

struct RegSolution {
  std::string method;
  Eigen::VectorXd x;
  double lambda = 0.0;
  double alpha = 0.0;  // lambda^2, the weight of ||x||^2 in the functional
  int iterations = 0;  // 0 only for the trivial b == 0 problem
  double residual_norm = 0.0;       // ||A x - b|| in the full space
  double projected_residual = 0.0;  // ||M y - beta e1||
  double delta = 0.0;
  double eta = kDefaultEta;
  double discrepancy_target = 0.0;  // eta * delta
  DiscrepancyStatus status = DiscrepancyStatus::converged;
  bool breakdown = false;
  std::vector<IterationRecord> history;

  bool converged() const { return status == DiscrepancyStatus::converged; }
};

inline constexpr int kArnoldiTikhonovIters = 20;
inline constexpr int kHybridGmresIters = 20;
inline constexpr int kGolubKahanTikhonovIters = 10;
/// Hybrid GMRES never stops before this many Arnoldi steps.
inline constexpr int kHybridMinIters = 3;
/// Relative change of the lifted iterate below which hybrid GMRES stops.
inline constexpr double kHybridStabilityTol = 1e-3;

RegSolution arnoldi_tikhonov(const ConvOperator& op, const Eigen::VectorXd& b, double delta,
                             double eta = kDefaultEta, int k = kArnoldiTikhonovIters);

/// Re-selects lambda by the discrepancy principle after every Arnoldi step.
/// With early_stop, returns at the first step j >= kHybridMinIters where
/// either lambda sits at the upper bound (eta * delta exceeds ||b||) or the
/// projected residual reaches eta * delta and the iterate moved by less than
/// kHybridStabilityTol relative to the previous step. Otherwise runs k_max steps.
RegSolution hybrid_gmres(const ConvOperator& op, const Eigen::VectorXd& b, double delta,
                         double eta = kDefaultEta, int k_max = kHybridGmresIters, bool early_stop = true);

RegSolution gk_tikhonov(const ConvOperator& op, const Eigen::VectorXd& b, double delta,
                        double eta = kDefaultEta, int k = kGolubKahanTikhonovIters);

}  // namespace rsoinv
