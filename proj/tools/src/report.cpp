#include "esi/cli/commands.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>
#include <sstream>

namespace esi::cli {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double number(const std::string& s, const std::string& ctx) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaError(ctx + ": expected a number, got '" + s + "'");
  }
  return v;
}

long long integer(const std::string& s, const std::string& ctx) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaError(ctx + ": expected an integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t uinteger(const std::string& s, const std::string& ctx) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw SchemaError(ctx + ": expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

std::string fmt(double v) {
  return std::isfinite(v) ? io::format_double(v) : std::string("nan");
}

struct Mean {
  double sum = 0.0;
  int n = 0;
  double value() const { return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(); }
};

}  // namespace

std::vector<CellResult> read_long_csv(const std::filesystem::path& path) {
  const auto text = io::read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw SchemaError(path.string() + ": empty results file");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLongCsvHeader) {
    throw SchemaError(path.string() + ": unexpected header; expected '" +
                      std::string(kLongCsvHeader) + "'");
  }
  std::vector<CellResult> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto ctx = path.string() + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != 14) {
      throw SchemaError(ctx + ": expected 14 fields, found " + std::to_string(f.size()));
    }
    CellResult r;
    r.method = f[0];
    r.family = f[1];
    r.basis_size = static_cast<int>(integer(f[2], ctx));
    r.noise = f[3];
    r.snr_db = number(f[4], ctx);
    r.trial = static_cast<int>(integer(f[5], ctx));
    r.seed = uinteger(f[6], ctx);
    r.beta_used = number(f[7], ctx);
    r.metrics.se = number(f[8], ctx);
    r.metrics.mcc = number(f[9], ctx);
    r.metrics.le_mm = number(f[10], ctx);
    r.metrics.sd_mm = number(f[11], ctx);
    r.wall_ms = number(f[12], ctx);
    r.status = f[13];
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw SchemaError(path.string() + ": no data rows");
  return rows;
}

int cmd_report(const std::filesystem::path& csv_path, const std::filesystem::path& out_dir,
               double bar_snr_db, const GlobalOptions& g) {
  const auto rows = read_long_csv(csv_path);

  std::vector<std::string> methods, noises;
  std::vector<double> snrs;
  auto note = [](auto& list, const auto& v) {
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
  };
  for (const auto& r : rows) {
    note(methods, r.method);
    note(noises, r.noise);
    note(snrs, r.snr_db);
  }
  std::sort(snrs.begin(), snrs.end());

  static constexpr const char* kMetrics[] = {"se", "mcc", "le_mm", "sd_mm"};
  auto metric = [](const CellResult& r, int k) {
    switch (k) {
      case 0: return r.metrics.se;
      case 1: return r.metrics.mcc;
      case 2: return r.metrics.le_mm;
      default: return r.metrics.sd_mm;
    }
  };

  // (metric, noise, method, snr) -> mean over successful trials
  std::map<std::tuple<int, std::string, std::string, double>, Mean> means;
  std::map<std::pair<std::string, double>, int> trials;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    for (int k = 0; k < 4; ++k) {
      auto& m = means[{k, r.noise, r.method, r.snr_db}];
      m.sum += metric(r, k);
      ++m.n;
    }
  }
  for (const auto& r : rows) {
    if (r.method == methods.front()) ++trials[{r.noise, r.snr_db}];
  }

  std::filesystem::create_directories(out_dir);
  std::string header_methods;
  for (const auto& m : methods) header_methods += " " + m;

  int files = 0;
  for (const auto& noise : noises) {
    int max_trials = 0;
    for (double s : snrs) max_trials = std::max(max_trials, trials[{noise, s}]);
    const std::string preamble = "# source: " + csv_path.filename().string() + ", noise " + noise +
                                 ", up to " + std::to_string(max_trials) +
                                 " trials per condition (mean over successful trials)\n";
    for (int k = 0; k < 4; ++k) {
      std::string out = preamble + "# snr_db" + header_methods + "\n";
      for (double s : snrs) {
        out += fmt(s);
        for (const auto& m : methods) out += " " + fmt(means[{k, noise, m, s}].value());
        out += "\n";
      }
      io::write_text_file(out_dir / ("curve_" + std::string(kMetrics[k]) + "_" + noise + ".dat"),
                          out);
      ++files;
    }

    if (std::find(snrs.begin(), snrs.end(), bar_snr_db) == snrs.end()) {
      log(g, "no rows at SNR " + fmt(bar_snr_db) + " dB for noise " + noise +
                 "; bar table skipped");
      continue;
    }
    std::string bars = preamble + "# snr_db " + fmt(bar_snr_db) + "\n# method se mcc le_mm sd_mm\n";
    for (const auto& m : methods) {
      bars += m;
      for (int k = 0; k < 4; ++k) bars += " " + fmt(means[{k, noise, m, bar_snr_db}].value());
      bars += "\n";
    }
    io::write_text_file(out_dir / ("bars_snr" + fmt(bar_snr_db) + "_" + noise + ".dat"), bars);
    ++files;
  }
  log(g, "wrote " + std::to_string(files) + " report files to " + out_dir.string());
  return kExitOk;
}

}  // namespace esi::cli
