#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rsoinv/forward_model.hpp"
#include "rsoinv/pose.hpp"

namespace rsoinv {

enum class Split { train, val, test };

const char* to_string(Split s);
/// Throws InputError for anything other than "train", "val" or "test".
Split parse_split(const std::string& s);

struct SampleRecord {
  std::string id;
  std::string clean_path;     // relative to the manifest directory
  std::string degraded_path;  // relative to the manifest directory
  EulerXYZ euler;
  std::array<double, 9> rotation{};  // row-major
  double noise_norm = 0.0;
  std::uint64_t seed = 0;
  std::optional<Split> split;
};

struct Manifest {
  DegradeConfig config;
  std::string convention = kEulerConvention;
  int version = 1;
  std::vector<SampleRecord> records;
};

/// Manifest I/O as JSON Lines: a header object, then one record per line.
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Labels assigned by position in the sorted image list against grid_labels(steps).
struct GridLabels {
  int steps = 24;
};
/// CSV `id,rx,ry,rz` (radians) keyed by image file stem.
struct LabelFile {
  std::filesystem::path path;
};
using LabelSource = std::variant<GridLabels, LabelFile>;

/// Per-sample seed: FNV-1a of the id chained from the config seed, then mixed.
std::uint64_t sample_seed(std::uint64_t config_seed, const std::string& id);

/// Degrades every *.pgm / *.imf image in clean_dir (sorted by file name) and
/// writes out_dir/degraded/<id>.imf, out_dir/preview/<id>.pgm and
/// out_dir/manifest.jsonl. Files written by a failed run are removed.
Manifest generate(const std::filesystem::path& clean_dir, const LabelSource& labels, const DegradeConfig& cfg,
                  const std::filesystem::path& out_dir);

/// Counts by largest remainder: floor(n * f_i) plus one extra for the largest
/// fractional parts, ties to the earlier split.
std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& fractions);

/// Seeded Fisher-Yates permutation of the id-sorted records, then contiguous
/// train / val / test assignment. Record order is unchanged.
Manifest split(const Manifest& manifest, const std::array<double, 3>& fractions = {0.8, 0.1, 0.1},
               std::uint64_t seed = 0);

struct CheckCount {
  std::size_t passed = 0;
  std::size_t failed = 0;
};

struct ValidationReport {
  std::map<std::string, CheckCount> checks;  // unique_ids, files_exist, rotation_consistent, split_partition
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

/// Paths are resolved against base_dir (normally the manifest's directory).
ValidationReport validate(const Manifest& manifest, const std::filesystem::path& base_dir);

}  // namespace rsoinv
