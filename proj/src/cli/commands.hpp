#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <vector>
#include <functional>
#include <ostream>
#include <string>

#include <CLI11.hpp>

#include "rsoinv/image.hpp"

namespace rsoinv::cli {

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::function<int()> action;  // set by whichever subcommand was parsed
};

void register_epsf(CLI::App& app, Context& ctx);
void register_deconv(CLI::App& app, Context& ctx);
void register_metrics(CLI::App& app, Context& ctx);
void register_pose_eval(CLI::App& app, Context& ctx);
void register_dataset(CLI::App& app, Context& ctx);

/// Shortest round-trip decimal text; "inf", "-inf" or "nan" for non-finite values.
std::string format_number(double v);

/// Splits one CSV line on commas (no quoting is produced by this tool).
std::vector<std::string> split_csv(const std::string& line);

/// Opens `path` for writing, or returns the fallback stream for "-".
class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback);
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

/// Kernel from an ePSF file (with `.json` sidecar, sampled at zero offset) or
/// from a plain image, normalized to sum 1.
ImageGray load_kernel(const std::filesystem::path& path);

}  // namespace rsoinv::cli
