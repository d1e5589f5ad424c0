#include "rsoinv/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "rsoinv/error.hpp"
#include "rsoinv/psf.hpp"

namespace rsoinv {

namespace cli {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

OutputFile::OutputFile(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
  if (path.empty() || path == "-") return;
  file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
  if (!*file_) throw_input("cannot write '" + path + "'");
  stream_ = file_.get();
}

ImageGray load_kernel(const std::filesystem::path& path) {
  if (std::filesystem::exists(path.string() + ".json")) return sample_kernel(load_epsf(path));
  const ImageGray k = load_image(path);
  if (k.width() % 2 == 0 || k.height() % 2 == 0) throw_input("PSF kernel sides must be odd");
  std::vector<float> data(k.pixels().begin(), k.pixels().end());
  double total = 0.0;
  for (float v : data) {
    if (v < 0.0f) throw_input("PSF kernel has negative entries");
    total += v;
  }
  if (!(total > 0.0)) throw_input("PSF kernel has zero mass");
  for (float& v : data) v = static_cast<float>(v / total);
  return ImageGray(k.width(), k.height(), std::move(data));
}

}  // namespace cli

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Effective-PSF estimation, Krylov-Tikhonov deconvolution and evaluation toolkit", "rsoinv"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  cli::Context ctx{out, err, {}};
  cli::register_epsf(app, ctx);
  cli::register_deconv(app, ctx);
  cli::register_metrics(app, ctx);
  cli::register_pose_eval(app, ctx);
  cli::register_dataset(app, ctx);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand --help surfaces here as well; CLI11 knows which app to describe.
    if (e.get_exit_code() == 0) {
      std::ostringstream o, er;
      app.exit(e, o, er);
      out << o.str() << er.str();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  if (!ctx.action) {
    err << "error: no command given\n";
    return kExitInput;
  }
  try {
    return ctx.action();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace rsoinv
