#include <cmath>
#include <memory>

#include "commands.hpp"
#include "rsoinv/cli.hpp"
#include "rsoinv/dataset.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/metrics.hpp"

namespace fs = std::filesystem;

namespace rsoinv::cli {

namespace {

struct MetricsArgs {
  std::vector<std::string> pairs;
  std::string restored;
  double peak = 1.0;
  std::string out = "-";
  std::string violin;
};

struct Pair {
  std::string id;
  fs::path reference;
  fs::path test;
};

fs::path restored_file(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".imf", ".pgm"}) {
    const fs::path p = dir / (id + ext);
    if (fs::exists(p)) return p;
  }
  throw_input("no restored image for id '" + id + "' in '" + dir.string() + "'");
}

std::vector<Pair> resolve_pairs(const MetricsArgs& a) {
  if (a.pairs.size() == 2) return {{fs::path(a.pairs[1]).stem().string(), a.pairs[0], a.pairs[1]}};
  const fs::path manifest = a.pairs.at(0);
  const Manifest m = read_manifest(manifest);
  const fs::path base = manifest.parent_path();
  std::vector<Pair> out;
  for (const auto& r : m.records) {
    const fs::path test = a.restored.empty() ? base / r.degraded_path : restored_file(a.restored, r.id);
    out.push_back({r.id, base / r.clean_path, test});
  }
  return out;
}

void write_summary(std::ostream& os, const std::string& name, const std::vector<double>& values) {
  std::vector<double> finite;
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  os << "summary_" << name;
  if (finite.empty()) {
    os << ",0,nan,nan,nan,nan,nan,nan,nan,nan\n";
    return;
  }
  const auto s = summarize(finite);
  os << ',' << s.count << ',' << format_number(s.mean) << ',' << format_number(s.std) << ','
     << format_number(s.min) << ',' << format_number(s.q1) << ',' << format_number(s.median) << ','
     << format_number(s.q3) << ',' << format_number(s.max) << '\n';
}

int run_metrics(const MetricsArgs& a, Context& ctx) {
  const auto pairs = resolve_pairs(a);
  if (pairs.empty()) throw_input("empty pair list");

  std::vector<double> mses, psnrs, ssims;
  OutputFile out(a.out, ctx.out);
  auto& os = out.stream();
  os << "id,mse,psnr,ssim\n";
  for (const auto& p : pairs) {
    const MetricReport r = compare(load_image(p.reference), load_image(p.test), a.peak);
    os << p.id << ',' << format_number(r.mse) << ',' << format_number(r.psnr) << ',' << format_number(r.ssim)
       << '\n';
    mses.push_back(r.mse);
    psnrs.push_back(r.psnr);
    ssims.push_back(r.ssim);
  }
  os << "statistic,count,mean,std,min,q1,median,q3,max\n";
  write_summary(os, "mse", mses);
  write_summary(os, "psnr", psnrs);
  write_summary(os, "ssim", ssims);

  if (!a.violin.empty()) {
    OutputFile v(a.violin, ctx.out);
    v.stream() << "value,density\n";
    for (const auto& [x, d] : summarize(mses, true).kde_points)
      v.stream() << format_number(x) << ',' << format_number(d) << '\n';
  }
  return kExitOk;
}

}  // namespace

void register_metrics(CLI::App& app, Context& ctx) {
  auto* metrics = app.add_subcommand("metrics", "Image quality metrics");
  metrics->require_subcommand(1);
  auto* cmd = metrics->add_subcommand("compare", "MSE, PSNR and SSIM per pair plus box-plot summary rows");
  auto a = std::make_shared<MetricsArgs>();
  cmd->add_option("--pairs", a->pairs, "Manifest (clean vs degraded or --restored) or two files: reference test")
      ->required()
      ->expected(1, 2)
      ->check(CLI::ExistingFile);
  cmd->add_option("--restored", a->restored, "Directory of restored images named <id>.imf or <id>.pgm")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--peak", a->peak, "Peak signal value for PSNR")->check(CLI::PositiveNumber);
  cmd->add_option("--out", a->out, "Output CSV ('-' for stdout)");
  cmd->add_option("--violin", a->violin, "Optional KDE export of the MSE distribution (value,density)");
  cmd->callback([a, &ctx] { ctx.action = [a, &ctx] { return run_metrics(*a, ctx); }; });
}

}  // namespace rsoinv::cli
