#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/forward_model.hpp"
#include "rsoinv/krylov.hpp"

using namespace rsoinv;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd random_vector(long n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXd v(n);
  for (long i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

MatrixXd random_matrix(long r, long c, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

struct Problem {
  ImageGray truth;
  ConvOperator op;
  VectorXd b;
  double delta;
};

Problem blurred_problem(std::size_t side, std::uint64_t seed, double noise_sigma) {
  std::mt19937_64 rng(seed);
  ImageGray truth(side, side);
  // A few smooth blobs on a dark background.
  std::uniform_real_distribution<double> u(0.2, 0.8);
  for (int blob = 0; blob < 3; ++blob) {
    const double cx = u(rng) * side, cy = u(rng) * side, r = 1.5 + 2.0 * u(rng);
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        truth(x, y) += float(0.6 * std::exp(-d2 / (2 * r * r)));
      }
  }
  DegradeConfig cfg;
  cfg.kernel = gaussian_kernel(5, 1.2);
  cfg.noise_sigma = noise_sigma;
  cfg.seed = seed;
  const auto [obs, rec] = degrade(truth, cfg);
  return {truth, make_operator(cfg.kernel, side, side), to_vector(obs), rec.noise_norm};
}

double mse_to(const VectorXd& x, const ImageGray& truth) {
  return (x - to_vector(truth)).squaredNorm() / double(x.size());
}

}  // namespace

TEST_CASE("default iteration counts") {
  CHECK(kArnoldiTikhonovIters == 20);
  CHECK(kHybridGmresIters == 20);
  CHECK(kGolubKahanTikhonovIters == 10);
  CHECK(kDefaultEta == 1.01);
}

TEST_CASE("Arnoldi on the identity operator breaks down after one step") {
  std::mt19937_64 rng(31);
  const ConvOperator op = make_operator(oracle::delta_kernel(3), 6, 6);
  const VectorXd b = random_vector(36, rng);
  const ArnoldiBasis a = arnoldi(op, b, 5);
  CHECK(a.breakdown);
  REQUIRE(a.H.rows() == 1);
  REQUIRE(a.H.cols() == 1);
  CHECK(a.H(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.beta == doctest::Approx(b.norm()));
}

TEST_CASE("Arnoldi relation and orthogonality") {
  std::mt19937_64 rng(32);
  const ConvOperator op = make_operator(oracle::random_kernel(5, rng), 16, 16);
  const VectorXd b = random_vector(256, rng);
  const MatrixXd A = oracle::materialize(op);
  const double a_norm = A.jacobiSvd().singularValues()(0);

  const ArnoldiBasis a10 = arnoldi(op, b, 10);
  REQUIRE_FALSE(a10.breakdown);
  REQUIRE(a10.V.cols() == 11);
  REQUIRE(a10.H.rows() == 11);
  CHECK((A * a10.V.leftCols(10) - a10.V * a10.H).norm() <= 1e-8 * a_norm);
  for (long i = 2; i < 11; ++i)
    for (long j = 0; j + 1 < i; ++j) CHECK(a10.H(i, j) == 0.0);

  const ArnoldiBasis a20 = arnoldi(op, b, 20);
  const long m = a20.V.cols();
  CHECK((a20.V.transpose() * a20.V - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK_THROWS_AS(arnoldi(op, VectorXd::Zero(256), 3), InputError);
  CHECK_THROWS_AS(arnoldi(op, b, 0), InputError);
}

TEST_CASE("Golub-Kahan relations and orthogonality") {
  std::mt19937_64 rng(33);
  const ConvOperator op = make_operator(oracle::random_kernel(5, rng), 16, 16);
  const VectorXd b = random_vector(256, rng);
  const MatrixXd A = oracle::materialize(op);
  const BidiagBasis g = golub_kahan(op, b, 10);
  REQUIRE_FALSE(g.breakdown);
  REQUIRE(g.U.cols() == 11);
  REQUIRE(g.V.cols() == 10);
  const double scale = A.norm();
  CHECK((A * g.V - g.U * g.B).norm() <= 1e-8 * scale);
  // A^T U_k = V_k B_k^T restricted to the first k left vectors.
  CHECK((A.transpose() * g.U.leftCols(10) - g.V * g.B.topRows(10).transpose()).norm() <= 1e-8 * scale);
  CHECK((g.U.transpose() * g.U - MatrixXd::Identity(11, 11)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((g.V.transpose() * g.V - MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((g.U.col(0) - b.normalized()).norm() <= 1e-12);
  for (long i = 0; i < 11; ++i)
    for (long j = 0; j < 10; ++j)
      if (i != j && i != j + 1) CHECK(g.B(i, j) == 0.0);
  CHECK_THROWS_AS(golub_kahan(op, VectorXd::Zero(256), 3), InputError);
}

TEST_CASE("Golub-Kahan reproduces Lanczos on the normal operator") {
  std::mt19937_64 rng(34);
  const ConvOperator op = make_operator(gaussian_kernel(3, 0.8), 8, 8);
  const VectorXd b = random_vector(64, rng);
  const MatrixXd A = oracle::materialize(op);
  const int k = 6;
  const BidiagBasis g = golub_kahan(op, b, k);
  REQUIRE(g.steps() == k);
  const MatrixXd T = oracle::dense_lanczos(A.transpose() * A, A.transpose() * b, k);
  const MatrixXd BtB = g.B.transpose() * g.B;
  CHECK((BtB - T).cwiseAbs().maxCoeff() <= 1e-8 * T.cwiseAbs().maxCoeff());
}

TEST_CASE("Golub-Kahan truncates when the space is exhausted") {
  std::mt19937_64 rng(35);
  const ConvOperator op = make_operator(oracle::random_kernel(3, rng), 4, 4);
  const VectorXd b = random_vector(16, rng);
  const BidiagBasis g = golub_kahan(op, b, 40);
  CHECK(g.breakdown);
  CHECK(g.steps() <= 16);
  const MatrixXd A = oracle::materialize(op);
  // The projected least-squares problem is exact on the exhausted space.
  const VectorXd y = projected_tikhonov(g.B, g.beta, 0.0);
  const VectorXd x = g.V.leftCols(y.size()) * y;
  const VectorXd x_ls = A.colPivHouseholderQr().solve(b);
  CHECK((x - x_ls).norm() <= 1e-8 * x_ls.norm());
}

TEST_CASE("projected Tikhonov") {
  MatrixXd one(1, 1);
  one << 1.0;
  CHECK(projected_tikhonov(one, 2.0, 1.0)(0) == doctest::Approx(1.0));

  std::mt19937_64 rng(36);
  const MatrixXd M = random_matrix(9, 8, rng);
  const double beta = 3.0;
  VectorXd rhs = VectorXd::Zero(9);
  rhs(0) = beta;
  const VectorXd ls = M.colPivHouseholderQr().solve(rhs);
  CHECK((projected_tikhonov(M, beta, 0.0) - ls).norm() <= 1e-10 * ls.norm());

  for (double lambda : {1.0, 10.0, 1e3, 1e6}) CHECK(projected_tikhonov(M, beta, lambda).norm() <= beta / lambda);

  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
    const double n = projected_tikhonov(M, beta, lambda).norm();
    CHECK(n <= prev);
    prev = n;
  }

  // Against the normal equations on a well-conditioned problem.
  const double lam = 0.7;
  const VectorXd normal =
      (M.transpose() * M + lam * lam * MatrixXd::Identity(8, 8)).ldlt().solve(M.transpose() * rhs);
  CHECK((projected_tikhonov(M, beta, lam) - normal).norm() <= 1e-10 * normal.norm());

  CHECK_THROWS_AS(projected_tikhonov(M, beta, -1.0), InputError);
  CHECK_THROWS_AS(projected_tikhonov(M, std::nan(""), 1.0), NumericalError);
}

TEST_CASE("discrepancy selection closed form") {
  MatrixXd one(1, 1);
  one << 1.0;
  const DiscrepancyResult r = discrepancy_select(one, 2.0, 1.0, 1.0);
  CHECK(r.status == DiscrepancyStatus::converged);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(r.y(0) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(r.residual == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("discrepancy selection limits") {
  std::mt19937_64 rng(37);
  const MatrixXd M = random_matrix(10, 8, rng);
  const double beta = 2.0;

  const DiscrepancyResult zero = discrepancy_select(M, beta, 0.0, kDefaultEta);
  CHECK(zero.lambda == 0.0);
  CHECK((zero.y - projected_tikhonov(M, beta, 0.0)).norm() <= 1e-12);

  const DiscrepancyResult huge = discrepancy_select(M, beta, 10.0, kDefaultEta);
  CHECK(huge.status == DiscrepancyStatus::upper_bound);
  CHECK(huge.lambda == kLambdaMax);

  const double phi0 = ProjectedResidual(M, beta)(0.0);
  const double delta = 0.5 * (phi0 + beta) / kDefaultEta;
  const DiscrepancyResult mid = discrepancy_select(M, beta, delta, kDefaultEta);
  CHECK(mid.status == DiscrepancyStatus::converged);
  CHECK(std::abs(mid.residual - kDefaultEta * delta) <= kDiscrepancyRelTol * kDefaultEta * delta);

  const DiscrepancyResult floor = discrepancy_select(M, beta, 0.5 * phi0 / kDefaultEta, kDefaultEta);
  CHECK(floor.status == DiscrepancyStatus::below_floor);
  CHECK(floor.lambda == 0.0);

  CHECK_THROWS_AS(discrepancy_select(M, beta, -1.0, kDefaultEta), InputError);
  CHECK_THROWS_AS(discrepancy_select(M, beta, 1.0, 0.5), InputError);
}

TEST_CASE("projected residual is monotone and matches the direct residual") {
  std::mt19937_64 rng(38);
  for (int t = 0; t < 10; ++t) {
    const MatrixXd M = random_matrix(10, 8, rng);
    const double beta = 1.0 + t;
    const ProjectedResidual phi(M, beta);
    double prev = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double lambda = std::pow(10.0, -4.0 + 8.0 * i / 19.0);
      const double v = phi(lambda);
      CHECK(v >= prev * (1.0 - 1e-12));
      prev = v;
      VectorXd r = M * projected_tikhonov(M, beta, lambda);
      r(0) -= beta;
      CHECK(v == doctest::Approx(r.norm()).epsilon(1e-9));
    }
  }
}

TEST_CASE("identity operator with zero noise recovers b") {
  std::mt19937_64 rng(39);
  const ConvOperator op = make_operator(oracle::delta_kernel(3), 8, 8);
  const VectorXd b = random_vector(64, rng);
  for (const RegSolution& s :
       {arnoldi_tikhonov(op, b, 0.0), hybrid_gmres(op, b, 0.0), gk_tikhonov(op, b, 0.0)}) {
    CHECK((s.x - b).norm() <= 1e-8 * b.norm());
    CHECK(s.iterations >= 1);
  }
}

TEST_CASE("zero right-hand side gives the zero image") {
  const ConvOperator op = make_operator(gaussian_kernel(3, 1.0), 8, 8);
  for (const RegSolution& s : {arnoldi_tikhonov(op, VectorXd::Zero(64), 0.1), hybrid_gmres(op, VectorXd::Zero(64), 0.1),
                               gk_tikhonov(op, VectorXd::Zero(64), 0.1)}) {
    CHECK(s.x.norm() == 0.0);
    CHECK(s.residual_norm == 0.0);
  }
}

TEST_CASE("solutions lie in the Krylov space and report lambda squared") {
  const Problem p = blurred_problem(16, 40, 0.01);
  const RegSolution at = arnoldi_tikhonov(p.op, p.b, p.delta);
  const ArnoldiBasis basis = arnoldi(p.op, p.b, at.iterations);
  const MatrixXd Vk = basis.V.leftCols(at.iterations);
  CHECK((at.x - Vk * (Vk.transpose() * at.x)).norm() <= 1e-8 * at.x.norm());
  CHECK(at.alpha == doctest::Approx(at.lambda * at.lambda));
  CHECK(at.history.size() == 1);
  CHECK(at.iterations == 20);

  const RegSolution gk = gk_tikhonov(p.op, p.b, p.delta);
  CHECK(gk.iterations == 10);
  const BidiagBasis g = golub_kahan(p.op, p.b, 10);
  CHECK((gk.x - g.V * (g.V.transpose() * gk.x)).norm() <= 1e-8 * gk.x.norm());
}

TEST_CASE("projected residual equals the full residual") {
  const Problem p = blurred_problem(16, 41, 0.02);
  for (const RegSolution& s :
       {arnoldi_tikhonov(p.op, p.b, p.delta), hybrid_gmres(p.op, p.b, p.delta), gk_tikhonov(p.op, p.b, p.delta)})
    CHECK(s.residual_norm == doctest::Approx(s.projected_residual).epsilon(1e-8));
}

TEST_CASE("hybrid GMRES without regularization is GMRES") {
  const Problem p = blurred_problem(16, 42, 0.01);
  const RegSolution s = hybrid_gmres(p.op, p.b, 0.0, kDefaultEta, 8, false);
  REQUIRE(s.iterations == 8);
  CHECK(s.lambda == 0.0);
  const MatrixXd A = oracle::materialize(p.op);
  const ArnoldiBasis basis = arnoldi(p.op, p.b, 8);
  const VectorXd r = A * s.x - p.b;
  const VectorXd proj = (A * basis.V.leftCols(8)).transpose() * r;
  CHECK(proj.norm() <= 1e-8 * r.norm() * A.norm());
  CHECK(s.history.size() == 8);
}

TEST_CASE("hybrid GMRES bookkeeping and stopping floor") {
  const Problem p = blurred_problem(16, 43, 0.02);
  const RegSolution full = hybrid_gmres(p.op, p.b, p.delta, kDefaultEta, 20, false);
  CHECK(full.history.size() == std::size_t(full.iterations));
  for (const auto& h : full.history) {
    CHECK(std::isfinite(h.lambda));
    CHECK(std::isfinite(h.residual_norm));
  }

  const RegSolution early = hybrid_gmres(p.op, p.b, p.delta);
  CHECK(early.converged());
  CHECK(early.iterations >= kHybridMinIters);
  CHECK(early.iterations <= full.iterations);
  CHECK(early.history.size() == std::size_t(early.iterations));

  const RegSolution heavy = hybrid_gmres(p.op, p.b, 2.0 * p.b.norm());
  CHECK(heavy.iterations == kHybridMinIters);
  CHECK(heavy.status == DiscrepancyStatus::upper_bound);
  CHECK_FALSE(heavy.converged());
}

TEST_CASE("discrepancy target is met in the full space") {
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    const Problem p = blurred_problem(16, seed, 0.02);
    const RegSolution s = arnoldi_tikhonov(p.op, p.b, p.delta);
    REQUIRE(s.converged());
    CHECK(std::abs(s.residual_norm - kDefaultEta * p.delta) <= 0.1 * kDefaultEta * p.delta);
    CHECK(s.discrepancy_target == doctest::Approx(kDefaultEta * p.delta));
  }
}

TEST_CASE("hybrid GMRES is no worse than Arnoldi-Tikhonov") {
  for (std::uint64_t seed = 60; seed < 64; ++seed) {
    const Problem p = blurred_problem(16, seed, 0.02);
    const double at = mse_to(arnoldi_tikhonov(p.op, p.b, p.delta).x, p.truth);
    const double hg = mse_to(hybrid_gmres(p.op, p.b, p.delta).x, p.truth);
    CHECK(hg <= at * 1.05);
  }
}

TEST_CASE("full-space Golub-Kahan-Tikhonov equals dense Tikhonov") {
  const Problem p = blurred_problem(16, 70, 0.01);
  const RegSolution s = gk_tikhonov(p.op, p.b, p.delta, kDefaultEta, 256);
  const VectorXd ref = oracle::dense_tikhonov(oracle::materialize(p.op), p.b, s.lambda);
  CHECK((s.x - ref).norm() <= 1e-4 * ref.norm());
}

TEST_CASE("regularized solutions improve on the observation") {
  double before = 0, after = 0;
  for (std::uint64_t seed = 80; seed < 86; ++seed) {
    const Problem p = blurred_problem(24, seed, 0.01);
    before += mse_to(p.b, p.truth);
    after += mse_to(gk_tikhonov(p.op, p.b, p.delta).x, p.truth);
  }
  CHECK(after < before);
}

TEST_CASE("solver argument validation") {
  const ConvOperator op = make_operator(gaussian_kernel(3, 1.0), 8, 8);
  const VectorXd b = VectorXd::Ones(64);
  CHECK_THROWS_AS(gk_tikhonov(op, b, -0.1), InputError);
  CHECK_THROWS_AS(gk_tikhonov(op, b, 0.1, 0.9), InputError);
  CHECK_THROWS_AS(gk_tikhonov(op, VectorXd::Ones(10), 0.1), InputError);
  CHECK_THROWS_AS(arnoldi_tikhonov(op, b, 0.1, kDefaultEta, 0), InputError);
  VectorXd bad = b;
  bad(3) = std::nan("");
  CHECK_THROWS_AS(hybrid_gmres(op, bad, 0.1), NumericalError);
  CHECK(std::string(to_string(DiscrepancyStatus::below_floor)) == "below_floor");
}
