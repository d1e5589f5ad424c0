#include <cmath>
#include <fstream>
#include <map>
#include <memory>

#include "commands.hpp"
#include "rsoinv/cli.hpp"
#include "rsoinv/dataset.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/metrics.hpp"
#include "rsoinv/pose.hpp"

namespace rsoinv::cli {

namespace {

struct PoseArgs {
  std::string pred;
  std::string truth;
  std::string out = "-";
  std::string violin;
};

double parse_field(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw_input("malformed 9-vector on line " + std::to_string(line));
}

int run_pose_eval(const PoseArgs& a, Context& ctx) {
  const Manifest truth = read_manifest(a.truth);
  std::map<std::string, const SampleRecord*> by_id;
  for (const auto& r : truth.records) by_id[r.id] = &r;

  std::ifstream in(a.pred);
  if (!in) throw_input("cannot read '" + a.pred + "'");
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (n == 1 && !f.empty() && f[0] == "id") continue;
    if (f.size() != 10) throw_input("malformed 9-vector on line " + std::to_string(n));
    const auto it = by_id.find(f[0]);
    if (it == by_id.end()) throw_input("unknown id '" + f[0] + "'");
    Eigen::Matrix3d m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = parse_field(f[i + 1], n);
    const Rotation pred = svd_orthogonalize(m);
    const Rotation gt = Rotation::from_row_major(it->second->rotation);
    rows.emplace_back(f[0], geodesic_angle(pred, gt));
  }
  if (rows.empty()) throw_input("no predictions in '" + a.pred + "'");

  std::vector<double> angles;
  for (const auto& r : rows) angles.push_back(r.second);
  const auto s = summarize(angles, !a.violin.empty());

  OutputFile out(a.out, ctx.out);
  auto& os = out.stream();
  os << "id,angle\n";
  for (const auto& [id, ang] : rows) os << id << ',' << format_number(ang) << '\n';
  os << "statistic,count,mean,std,min,q1,median,q3,max\n";
  os << "summary_angle," << s.count << ',' << format_number(s.mean) << ',' << format_number(s.std) << ','
     << format_number(s.min) << ',' << format_number(s.q1) << ',' << format_number(s.median) << ','
     << format_number(s.q3) << ',' << format_number(s.max) << '\n';

  if (!a.violin.empty()) {
    OutputFile v(a.violin, ctx.out);
    v.stream() << "value,density\n";
    for (const auto& [x, d] : s.kde_points) v.stream() << format_number(x) << ',' << format_number(d) << '\n';
  }
  return kExitOk;
}

}  // namespace

void register_pose_eval(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("pose-eval", "Geodesic rotation error of predicted matrices against a manifest");
  auto a = std::make_shared<PoseArgs>();
  cmd->add_option("--pred", a->pred, "Predictions CSV: id,m00,m01,...,m22 (row-major)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--truth", a->truth, "Ground-truth manifest.jsonl")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a->out, "Output CSV ('-' for stdout)");
  cmd->add_option("--violin", a->violin, "Optional KDE export of the angle distribution (value,density)");
  cmd->callback([a, &ctx] { ctx.action = [a, &ctx] { return run_pose_eval(*a, ctx); }; });
}

}  // namespace rsoinv::cli
