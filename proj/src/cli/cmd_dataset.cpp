#include <fstream>
#include <memory>

#include <json.hpp>

#include "commands.hpp"
#include "rsoinv/cli.hpp"
#include "rsoinv/dataset.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/forward_model.hpp"

namespace fs = std::filesystem;

namespace rsoinv::cli {

namespace {

struct GenArgs {
  std::string clean;
  std::string labels;
  int grid_steps = 24;
  std::string config;
  std::string psf;
  double gauss_sigma = 1.5;
  std::size_t kernel_side = 15;
  double bloom_threshold = 0.8;
  double bloom_sigma = 2.0;
  double bloom_strength = 0.0;
  double noise_sigma = 0.01;
  double background = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct SplitArgs {
  std::string manifest;
  std::vector<double> fractions{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;
  std::string out;
};

struct ValidateArgs {
  std::string manifest;
};

DegradeConfig make_config(const GenArgs& a) {
  DegradeConfig cfg;
  if (!a.config.empty()) {
    std::ifstream f(a.config);
    if (!f) throw_input("cannot read '" + a.config + "'");
    try {
      cfg = nlohmann::json::parse(f).get<DegradeConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw_input("invalid config '" + a.config + "': " + e.what());
    }
    cfg.validate();
    return cfg;
  }
  cfg.kernel = a.psf.empty() ? gaussian_kernel(a.kernel_side, a.gauss_sigma) : load_kernel(a.psf);
  cfg.bloom_threshold = a.bloom_threshold;
  cfg.bloom_sigma = a.bloom_sigma;
  cfg.bloom_strength = a.bloom_strength;
  cfg.noise_sigma = a.noise_sigma;
  cfg.background_level = a.background;
  cfg.seed = a.seed;
  cfg.validate();
  return cfg;
}

int run_gen(const GenArgs& a, Context& ctx) {
  const DegradeConfig cfg = make_config(a);
  LabelSource labels = GridLabels{a.grid_steps};
  if (!a.labels.empty()) labels = LabelFile{a.labels};
  const Manifest m = generate(a.clean, labels, cfg, a.out);
  ctx.out << "wrote " << m.records.size() << " records to " << (fs::path(a.out) / "manifest.jsonl").string()
          << '\n';
  return kExitOk;
}

int run_split(const SplitArgs& a, Context& ctx) {
  if (a.fractions.size() != 3) throw_input("--fractions needs three values");
  const Manifest in = read_manifest(a.manifest);
  const Manifest out = split(in, {a.fractions[0], a.fractions[1], a.fractions[2]}, a.seed);
  write_manifest(out, a.out.empty() ? a.manifest : a.out);
  std::array<std::size_t, 3> counts{};
  for (const auto& r : out.records) ++counts[static_cast<std::size_t>(*r.split)];
  ctx.out << "train " << counts[0] << " val " << counts[1] << " test " << counts[2] << '\n';
  return kExitOk;
}

int run_validate(const ValidateArgs& a, Context& ctx) {
  const Manifest m = read_manifest(a.manifest);
  const ValidationReport rep = validate(m, fs::path(a.manifest).parent_path());
  for (const auto& [name, c] : rep.checks) ctx.out << name << ": " << c.passed << " passed, " << c.failed << " failed\n";
  for (const auto& f : rep.failures) ctx.err << f << '\n';
  return rep.ok() ? kExitOk : kExitInput;
}

}  // namespace

void register_dataset(CLI::App& app, Context& ctx) {
  auto* ds = app.add_subcommand("dataset", "Synthetic degraded dataset generation, splitting and validation");
  ds->require_subcommand(1);

  auto* gen = ds->add_subcommand("gen", "Degrade clean renders and write manifest.jsonl");
  auto g = std::make_shared<GenArgs>();
  gen->add_option("--clean", g->clean, "Directory of clean renders (PGM/IMF)")->required()->check(CLI::ExistingDirectory);
  gen->add_option("--labels", g->labels, "Label CSV id,rx,ry,rz (radians); overrides --grid-steps")
      ->check(CLI::ExistingFile);
  gen->add_option("--grid-steps", g->grid_steps, "Euler grid steps per axis, assigned in sorted file order")
      ->check(CLI::PositiveNumber);
  gen->add_option("--config", g->config, "Degradation config JSON; overrides the flags below")->check(CLI::ExistingFile);
  gen->add_option("--psf", g->psf, "PSF kernel image or ePSF file");
  gen->add_option("--gauss-sigma", g->gauss_sigma, "Gaussian PSF sigma when --psf is absent");
  gen->add_option("--kernel-side", g->kernel_side, "Gaussian PSF side (odd) when --psf is absent");
  gen->add_option("--bloom-threshold", g->bloom_threshold, "Highlight threshold in [0,1]");
  gen->add_option("--bloom-sigma", g->bloom_sigma, "Bloom spread (pixels)");
  gen->add_option("--bloom-strength", g->bloom_strength, "Bloom strength; 0 disables");
  gen->add_option("--noise-sigma", g->noise_sigma, "Gaussian read-noise sigma");
  gen->add_option("--background", g->background, "Constant sky background level");
  gen->add_option("--seed", g->seed, "Dataset seed");
  gen->add_option("--out", g->out, "Output directory")->required();
  gen->callback([g, &ctx] { ctx.action = [g, &ctx] { return run_gen(*g, ctx); }; });

  auto* sp = ds->add_subcommand("split", "Seeded train/val/test assignment");
  auto s = std::make_shared<SplitArgs>();
  sp->add_option("--manifest", s->manifest, "Input manifest.jsonl")->required()->check(CLI::ExistingFile);
  sp->add_option("--fractions", s->fractions, "Train,val,test fractions")->delimiter(',')->expected(3);
  sp->add_option("--seed", s->seed, "Shuffle seed");
  sp->add_option("--out", s->out, "Output manifest (default: rewrite the input)");
  sp->callback([s, &ctx] { ctx.action = [s, &ctx] { return run_split(*s, ctx); }; });

  auto* va = ds->add_subcommand("validate", "Check ids, files, rotations and split tags");
  auto v = std::make_shared<ValidateArgs>();
  va->add_option("--manifest", v->manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  va->callback([v, &ctx] { ctx.action = [v, &ctx] { return run_validate(*v, ctx); }; });
}

}  // namespace rsoinv::cli
