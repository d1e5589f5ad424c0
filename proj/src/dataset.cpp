#include "rsoinv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rsoinv/error.hpp"
#include "rsoinv/hash.hpp"
#include "rsoinv/image.hpp"
#include "rsoinv/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rsoinv {

namespace {

json record_to_json(const SampleRecord& r) {
  json j{{"id", r.id},
         {"clean_path", r.clean_path},
         {"degraded_path", r.degraded_path},
         {"euler", {r.euler.rx, r.euler.ry, r.euler.rz}},
         {"rotation", r.rotation},
         {"noise_norm", r.noise_norm},
         {"seed", r.seed}};
  if (r.split) j["split"] = to_string(*r.split);
  return j;
}

SampleRecord record_from_json(const json& j) {
  SampleRecord r;
  r.id = j.at("id").get<std::string>();
  r.clean_path = j.at("clean_path").get<std::string>();
  r.degraded_path = j.at("degraded_path").get<std::string>();
  const auto e = j.at("euler").get<std::vector<double>>();
  if (e.size() != 3) throw_input("record '" + r.id + "': euler must have 3 entries");
  r.euler = EulerXYZ{e[0], e[1], e[2]};
  const auto rot = j.at("rotation").get<std::vector<double>>();
  if (rot.size() != 9) throw_input("record '" + r.id + "': rotation must have 9 entries");
  std::copy(rot.begin(), rot.end(), r.rotation.begin());
  r.noise_norm = j.at("noise_norm").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("split")) r.split = parse_split(j.at("split").get<std::string>());
  return r;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw_input("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".imf") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

std::map<std::string, EulerXYZ> read_label_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open labels '" + path.string() + "'");
  std::map<std::string, EulerXYZ> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (lineno == 1 && !fields.empty() && fields[0] == "id") continue;
    if (fields.size() != 4) throw_input("labels line " + std::to_string(lineno) + ": expected id,rx,ry,rz");
    try {
      labels[fields[0]] = EulerXYZ::wrapped(std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3]));
    } catch (const std::logic_error&) {
      throw_input("labels line " + std::to_string(lineno) + ": bad number");
    }
  }
  return labels;
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  return fs::relative(target, base).generic_string();
}

// Removes every file registered here unless release() was called.
class WrittenFiles {
 public:
  void add(const fs::path& p) {
    std::lock_guard lock(mutex_);
    files_.push_back(p);
  }
  void release() { files_.clear(); }
  ~WrittenFiles() {
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
  }

 private:
  std::mutex mutex_;
  std::vector<fs::path> files_;
};

}  // namespace

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw_input("unknown split tag '" + s + "'");
}

void write_manifest(const Manifest& m, const fs::path& path) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_input("cannot write manifest '" + path.string() + "'");
    json header{{"config", m.config}, {"convention", m.convention}, {"version", m.version}};
    out << header.dump() << '\n';
    for (const auto& r : m.records) out << record_to_json(r).dump() << '\n';
    if (!out) throw_input("write failed for manifest '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open manifest '" + path.string() + "'");
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        m.config = j.at("config").get<DegradeConfig>();
        m.convention = j.at("convention").get<std::string>();
        m.version = j.at("version").get<int>();
        if (m.convention != kEulerConvention) throw_input("unsupported Euler convention '" + m.convention + "'");
        have_header = true;
      } else {
        m.records.push_back(record_from_json(j));
      }
    } catch (const json::exception& e) {
      throw_input("manifest '" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw_input("manifest '" + path.string() + "' has no header line");
  return m;
}

std::uint64_t sample_seed(std::uint64_t config_seed, const std::string& id) {
  std::array<unsigned char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(config_seed >> (8 * i));
  return mix64(fnv1a64(id, fnv1a64(bytes)));
}

Manifest generate(const fs::path& clean_dir, const LabelSource& labels, const DegradeConfig& cfg,
                  const fs::path& out_dir) {
  cfg.validate();
  const auto files = list_images(clean_dir);

  std::vector<std::string> ids;
  for (const auto& f : files) ids.push_back(f.stem().string());
  std::set<std::string> unique;
  for (const auto& id : ids)
    if (!unique.insert(id).second) throw_input("duplicate image id '" + id + "'");

  std::vector<EulerXYZ> euler(files.size());
  if (const auto* grid = std::get_if<GridLabels>(&labels)) {
    const auto all = grid_labels(grid->steps);
    if (files.size() > all.size())
      throw_input("missing label: " + std::to_string(files.size()) + " images but only " +
                  std::to_string(all.size()) + " grid labels");
    std::copy_n(all.begin(), files.size(), euler.begin());
  } else {
    const auto table = read_label_file(std::get<LabelFile>(labels).path);
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto it = table.find(ids[i]);
      if (it == table.end()) throw_input("missing label for image '" + ids[i] + "'");
      euler[i] = it->second;
    }
  }

  fs::create_directories(out_dir / "degraded");
  fs::create_directories(out_dir / "preview");
  const fs::path base = fs::absolute(out_dir);

  Manifest m;
  m.config = cfg;
  m.records.resize(files.size());
  WrittenFiles written;

  parallel_for(files.size(), [&](std::size_t i) {
    const ImageGray clean = load_image(files[i]);
    DegradeConfig sample_cfg = cfg;
    sample_cfg.seed = sample_seed(cfg.seed, ids[i]);
    const auto [degraded, rec] = degrade(clean, sample_cfg);

    const fs::path imf = out_dir / "degraded" / (ids[i] + ".imf");
    const fs::path pgm = out_dir / "preview" / (ids[i] + ".pgm");
    written.add(imf);
    save_image(degraded, imf, ImageFormat::imf);
    written.add(pgm);
    save_image(degraded, pgm, ImageFormat::pgm8);

    SampleRecord& r = m.records[i];
    r.id = ids[i];
    r.clean_path = relative_to(fs::absolute(files[i]), base);
    r.degraded_path = relative_to(fs::absolute(imf), base);
    r.euler = euler[i];
    r.rotation = euler_to_matrix(euler[i]).row_major();
    r.noise_norm = rec.noise_norm;
    r.seed = sample_cfg.seed;
  });

  std::sort(m.records.begin(), m.records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
  write_manifest(m, out_dir / "manifest.jsonl");
  written.release();
  return m;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& f) {
  if (!std::all_of(f.begin(), f.end(), [](double v) { return v > 0.0 && std::isfinite(v); }))
    throw_input("split fractions must be positive");
  if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) throw_input("split fractions must sum to 1");

  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * f[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return counts;
}

Manifest split(const Manifest& manifest, const std::array<double, 3>& fractions, std::uint64_t seed) {
  if (manifest.records.empty()) throw_input("cannot split an empty manifest");
  const auto counts = split_counts(manifest.records.size(), fractions);

  std::vector<std::size_t> order(manifest.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return manifest.records[a].id < manifest.records[b].id; });
  SplitMix64 rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  Manifest out = manifest;
  std::size_t pos = 0;
  const std::array<Split, 3> tags{Split::train, Split::val, Split::test};
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t c = 0; c < counts[s]; ++c) out.records[order[pos++]].split = tags[s];
  return out;
}

ValidationReport validate(const Manifest& manifest, const fs::path& base_dir) {
  ValidationReport rep;
  auto& ids = rep.checks["unique_ids"];
  auto& files = rep.checks["files_exist"];
  auto& rot = rep.checks["rotation_consistent"];
  auto& part = rep.checks["split_partition"];

  std::set<std::string> seen;
  const bool any_split = std::any_of(manifest.records.begin(), manifest.records.end(),
                                     [](const SampleRecord& r) { return r.split.has_value(); });
  for (const auto& r : manifest.records) {
    if (seen.insert(r.id).second) {
      ++ids.passed;
    } else {
      ++ids.failed;
      rep.failures.push_back("duplicate id '" + r.id + "'");
    }

    for (const auto& rel : {r.clean_path, r.degraded_path}) {
      if (fs::is_regular_file(base_dir / rel)) {
        ++files.passed;
      } else {
        ++files.failed;
        rep.failures.push_back("record '" + r.id + "': missing file '" + rel + "'");
      }
    }

    bool consistent = false;
    try {
      const auto expected = euler_to_matrix(EulerXYZ::wrapped(r.euler.rx, r.euler.ry, r.euler.rz)).row_major();
      double err = 0.0;
      for (std::size_t i = 0; i < 9; ++i) err = std::max(err, std::abs(expected[i] - r.rotation[i]));
      consistent = err <= 1e-9;
    } catch (const InputError&) {
    }
    if (consistent) {
      ++rot.passed;
    } else {
      ++rot.failed;
      rep.failures.push_back("record '" + r.id + "': rotation does not match euler angles");
    }

    if (any_split) {
      if (r.split) {
        ++part.passed;
      } else {
        ++part.failed;
        rep.failures.push_back("record '" + r.id + "': missing split tag");
      }
    }
  }
  return rep;
}

}  // namespace rsoinv
