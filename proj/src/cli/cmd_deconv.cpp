#include <cmath>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "commands.hpp"
#include "rsoinv/cli.hpp"
#include "rsoinv/conv_operator.hpp"
#include "rsoinv/dataset.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/krylov.hpp"

namespace fs = std::filesystem;

namespace rsoinv::cli {

namespace {

struct DeconvArgs {
  std::string in;
  std::string psf;
  std::string method;
  int iters = 0;
  std::string delta = "auto";
  std::string manifest;
  double eta = kDefaultEta;
  bool full_iters = false;
  std::string out;
};

int default_iters(const std::string& method) {
  if (method == "at") return kArnoldiTikhonovIters;
  if (method == "hgmres") return kHybridGmresIters;
  if (method == "gkt") return kGolubKahanTikhonovIters;
  throw_input("unknown method '" + method + "'");
}

double manifest_delta(const DeconvArgs& a) {
  if (a.manifest.empty()) throw_input("--delta auto requires --manifest with a record for the input");
  const Manifest m = read_manifest(a.manifest);
  const fs::path in = fs::path(a.in);
  const fs::path base = fs::path(a.manifest).parent_path();
  for (const auto& r : m.records) {
    if (r.id == in.stem().string()) return r.noise_norm;
    std::error_code ec;
    if (fs::equivalent(base / r.degraded_path, in, ec)) return r.noise_norm;
  }
  throw_input("no manifest record for '" + a.in + "'");
}

double parse_delta(const DeconvArgs& a) {
  if (a.delta == "auto") return manifest_delta(a);
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(a.delta, &used);
    if (used != a.delta.size()) throw std::invalid_argument(a.delta);
  } catch (const std::exception&) {
    throw_input("--delta must be a number or 'auto'");
  }
  if (!std::isfinite(v) || v < 0.0) throw_input("--delta must be finite and non-negative");
  return v;
}

int run_deconv(const DeconvArgs& a, Context& ctx) {
  const int k = a.iters > 0 ? a.iters : default_iters(a.method);
  const double delta = parse_delta(a);
  const ImageGray blurred = load_image(a.in);
  const ImageGray kernel = load_kernel(a.psf);
  const ConvOperator op(kernel, blurred.width(), blurred.height());
  const Eigen::VectorXd b = to_vector(blurred);

  RegSolution sol;
  if (a.method == "at") {
    sol = arnoldi_tikhonov(op, b, delta, a.eta, k);
  } else if (a.method == "hgmres") {
    sol = hybrid_gmres(op, b, delta, a.eta, k, !a.full_iters);
  } else {
    sol = gk_tikhonov(op, b, delta, a.eta, k);
  }
  const ImageGray restored = to_image(sol.x, blurred.width(), blurred.height());
  save_image(restored, a.out, ImageFormat::imf);

  nlohmann::ordered_json diag;
  diag["method"] = a.method;
  diag["k"] = k;
  diag["iterations"] = sol.iterations;
  diag["lambda"] = sol.lambda;
  diag["alpha"] = sol.alpha;
  diag["residual"] = sol.residual_norm;
  diag["projected_residual"] = sol.projected_residual;
  diag["delta"] = sol.delta;
  diag["eta"] = sol.eta;
  diag["converged"] = sol.converged();
  diag["status"] = to_string(sol.status);
  diag["breakdown"] = sol.breakdown;
  auto hist = nlohmann::ordered_json::array();
  for (const auto& h : sol.history) hist.push_back({{"residual", h.residual_norm}, {"lambda", h.lambda}});
  diag["history"] = std::move(hist);
  std::ofstream f(a.out + ".json");
  if (!f) throw_input("cannot write diagnostics for '" + a.out + "'");
  f << diag.dump(2) << '\n';
  ctx.out << diag.dump() << '\n';
  return kExitOk;
}

}  // namespace

void register_deconv(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("deconv", "Krylov-Tikhonov deconvolution with discrepancy-principle lambda");
  auto a = std::make_shared<DeconvArgs>();
  cmd->add_option("--in", a->in, "Degraded image (PGM/IMF)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--psf", a->psf, "PSF kernel image or ePSF file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--method", a->method, "Solver: at (Arnoldi-Tikhonov), hgmres (hybrid GMRES), gkt (Golub-Kahan-Tikhonov)")
      ->required()
      ->check(CLI::IsMember({"at", "hgmres", "gkt"}));
  cmd->add_option("--iters", a->iters, "Krylov iterations; 0 uses the method default (at 20, hgmres 20, gkt 10)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--delta", a->delta, "Noise norm, or 'auto' to read noise_norm from --manifest");
  cmd->add_option("--manifest", a->manifest, "Dataset manifest used by --delta auto");
  cmd->add_option("--eta", a->eta, "Discrepancy safety factor")->check(CLI::Range(1.0, 100.0));
  cmd->add_flag("--full-iters", a->full_iters, "hgmres: run all iterations instead of stopping at the discrepancy");
  cmd->add_option("--out", a->out, "Output IMF path (diagnostics written to <out>.json)")->required();
  cmd->callback([a, &ctx] { ctx.action = [a, &ctx] { return run_deconv(*a, ctx); }; });
}

}  // namespace rsoinv::cli
