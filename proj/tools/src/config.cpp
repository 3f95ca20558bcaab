#include "esi/cli/config.hpp"

#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace esi::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"mesh", {"path", "hemisphere_sidecar"}},
      {"leadfield", {"kind", "sensors", "conductivity", "matrix", "sensor_meta"}},
      {"methods", {"list"}},
      {"basis",
       {"gbf_count", "harmonic_degree", "msp_count", "per_hemisphere", "msp_weights",
        "epsilon_frac"}},
      {"source", {"kind", "centers", "fwhm_mm", "amplitude", "paths"}},
      {"noise", {"kinds", "covariance", "rho_mm", "normalization"}},
      {"benchmark",
       {"snr_db", "trials", "seed", "output", "sample_maps", "threshold_frac", "record_timing"}},
      {"solver", {"beta", "noise_power", "prewhiten", "eloreta_tol", "eloreta_max_iter"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string token;
  for (char c : value) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> out;
  std::string token;
  for (char ch : s) {
    if (ch == ':') {
      out.push_back(token);
      token.clear();
    } else {
      token += ch;
    }
  }
  out.push_back(token);
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  std::string_view s = text;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("config key '" + key + "': expected a non-negative integer, got '" + text +
                     "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ParseError("config key '" + key + "': expected true or false, got '" + text + "'");
}

template <typename Fn>
void with_key(const pt::ptree& tree, const std::string& key, Fn&& fn) {
  if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
    fn(key, trim(*v));
  }
}

bool path_exists(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::exists(p, ec);
}

Eigen::Vector3d centroid(const TriMesh& mesh) {
  return mesh.vertices().colwise().mean().transpose();
}

}  // namespace

BenchmarkConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      throw ValidationError("unknown config section [" + section + "]");
    }
    if (body.empty() && !body.data().empty()) {
      throw ValidationError("config key '" + section + "' must be inside a section");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ValidationError("unknown config key '" + section + "." + key + "'");
      }
    }
  }

  BenchmarkConfig c;
  c.base_dir = base_dir;

  with_key(tree, "mesh.path", [&](auto&, const std::string& v) { c.mesh = v; });
  with_key(tree, "mesh.hemisphere_sidecar",
           [&](auto&, const std::string& v) { c.hemisphere_sidecar = v; });

  with_key(tree, "leadfield.kind", [&](auto&, const std::string& v) { c.leadfield_kind = v; });
  with_key(tree, "leadfield.sensors", [&](auto&, const std::string& v) { c.sensors = v; });
  with_key(tree, "leadfield.conductivity",
           [&](auto& k, const std::string& v) { c.conductivity = to_double(k, v); });
  with_key(tree, "leadfield.matrix", [&](auto&, const std::string& v) { c.leadfield_matrix = v; });
  with_key(tree, "leadfield.sensor_meta",
           [&](auto&, const std::string& v) { c.sensor_meta = v; });

  with_key(tree, "methods.list", [&](auto&, const std::string& v) {
    c.methods.clear();
    for (const auto& name : split_list(v)) c.methods.push_back(parse_method(name));
  });

  with_key(tree, "basis.gbf_count",
           [&](auto& k, const std::string& v) { c.gbf_count = static_cast<int>(to_integer(k, v)); });
  with_key(tree, "basis.harmonic_degree", [&](auto& k, const std::string& v) {
    c.harmonic_degree = static_cast<int>(to_integer(k, v));
  });
  with_key(tree, "basis.msp_count",
           [&](auto& k, const std::string& v) { c.msp_count = static_cast<int>(to_integer(k, v)); });
  with_key(tree, "basis.per_hemisphere",
           [&](auto& k, const std::string& v) { c.per_hemisphere = to_bool(k, v); });
  with_key(tree, "basis.msp_weights",
           [&](auto&, const std::string& v) { c.msp_weights = parse_msp_weighting(v); });
  with_key(tree, "basis.epsilon_frac",
           [&](auto& k, const std::string& v) { c.epsilon_frac = to_double(k, v); });

  with_key(tree, "source.kind", [&](auto&, const std::string& v) { c.source_kind = v; });
  with_key(tree, "source.centers", [&](auto& k, const std::string& v) {
    c.centers.clear();
    if (v == "random") return;
    for (const auto& t : split_list(v)) c.centers.push_back(static_cast<int>(to_integer(k, t)));
  });
  with_key(tree, "source.fwhm_mm",
           [&](auto& k, const std::string& v) { c.fwhm_mm = to_double(k, v); });
  with_key(tree, "source.amplitude",
           [&](auto& k, const std::string& v) { c.amplitude = to_double(k, v); });
  with_key(tree, "source.paths",
           [&](auto&, const std::string& v) { c.source_paths = split_list(v); });

  with_key(tree, "noise.kinds", [&](auto&, const std::string& v) {
    c.noise_kinds.clear();
    for (const auto& t : split_list(v)) c.noise_kinds.push_back(parse_noise_kind(t));
  });
  with_key(tree, "noise.covariance", [&](auto&, const std::string& v) { c.covariance = v; });
  with_key(tree, "noise.rho_mm", [&](auto& k, const std::string& v) { c.rho_mm = to_double(k, v); });
  with_key(tree, "noise.normalization",
           [&](auto&, const std::string& v) { c.normalization = parse_cov_normalization(v); });

  with_key(tree, "benchmark.snr_db", [&](auto& k, const std::string& v) {
    c.snr_db.clear();
    for (const auto& t : split_list(v)) c.snr_db.push_back(to_double(k, t));
  });
  with_key(tree, "benchmark.trials",
           [&](auto& k, const std::string& v) { c.trials = static_cast<int>(to_integer(k, v)); });
  with_key(tree, "benchmark.seed", [&](auto& k, const std::string& v) { c.seed = to_unsigned(k, v); });
  with_key(tree, "benchmark.output", [&](auto&, const std::string& v) { c.output = v; });
  with_key(tree, "benchmark.sample_maps", [&](auto& k, const std::string& v) {
    c.sample_maps = static_cast<int>(to_integer(k, v));
  });
  with_key(tree, "benchmark.threshold_frac",
           [&](auto& k, const std::string& v) { c.threshold_frac = to_double(k, v); });
  with_key(tree, "benchmark.record_timing",
           [&](auto& k, const std::string& v) { c.record_timing = to_bool(k, v); });

  with_key(tree, "solver.beta", [&](auto& k, const std::string& v) {
    if (v == "auto") {
      c.beta.reset();
    } else {
      c.beta = to_double(k, v);
    }
  });
  with_key(tree, "solver.noise_power",
           [&](auto& k, const std::string& v) { c.noise_power = to_double(k, v); });
  with_key(tree, "solver.prewhiten",
           [&](auto& k, const std::string& v) { c.prewhiten = to_bool(k, v); });
  with_key(tree, "solver.eloreta_tol",
           [&](auto& k, const std::string& v) { c.eloreta_tol = to_double(k, v); });
  with_key(tree, "solver.eloreta_max_iter", [&](auto& k, const std::string& v) {
    c.eloreta_max_iter = static_cast<int>(to_integer(k, v));
  });

  validate(c);
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  const auto text = io::read_text_file(path);
  try {
    return parse_config(text, path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::filesystem::path resolve_path(const BenchmarkConfig& config, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute()) return p;
  const auto local = config.base_dir / p;
  if (path_exists(local)) return local;
  if (const char* root = std::getenv("ESI_DATA_DIR"); root != nullptr && *root != '\0') {
    const auto fixture = std::filesystem::path(root) / p;
    if (path_exists(fixture)) return fixture;
  }
  return local;
}

namespace {

void require_file(const BenchmarkConfig& c, const std::string& key, const std::string& path) {
  if (path.empty()) throw ValidationError("config key '" + key + "' is required");
  if (!path_exists(resolve_path(c, path))) {
    throw ValidationError("config key '" + key + "': file not found: " + path);
  }
}

}  // namespace

void validate(const BenchmarkConfig& c) {
  if (c.mesh.rfind("icosphere:", 0) != 0) require_file(c, "mesh.path", c.mesh);
  if (!c.hemisphere_sidecar.empty()) {
    require_file(c, "mesh.hemisphere_sidecar", c.hemisphere_sidecar);
  }

  if (c.leadfield_kind == "file") {
    require_file(c, "leadfield.matrix", c.leadfield_matrix);
    require_file(c, "leadfield.sensor_meta", c.sensor_meta);
  } else if (c.leadfield_kind == "analytic") {
    if (c.sensors.rfind("cap:", 0) != 0) require_file(c, "leadfield.sensors", c.sensors);
    if (!(c.conductivity > 0.0)) throw ValidationError("leadfield.conductivity must be positive");
  } else {
    throw ValidationError("leadfield.kind must be 'analytic' or 'file', got '" + c.leadfield_kind +
                          "'");
  }

  if (c.methods.empty()) throw ValidationError("methods.list is empty");
  if (c.gbf_count < 1) throw ValidationError("basis.gbf_count must be at least 1");
  if (c.harmonic_degree < 0) throw ValidationError("basis.harmonic_degree must be non-negative");
  if (c.msp_count < 1) throw ValidationError("basis.msp_count must be at least 1");
  if (!(c.epsilon_frac >= 0.0)) throw ValidationError("basis.epsilon_frac must be non-negative");

  if (c.source_kind == "patch") {
    if (!(c.fwhm_mm > 0.0)) throw ValidationError("source.fwhm_mm must be positive");
    if (c.amplitude == 0.0) throw ValidationError("source.amplitude must be nonzero");
    for (int v : c.centers) {
      if (v < 0) throw ValidationError("source.centers: negative vertex index");
    }
  } else if (c.source_kind == "import") {
    if (c.source_paths.empty()) throw ValidationError("source.paths is required for import");
    for (const auto& p : c.source_paths) require_file(c, "source.paths", p);
  } else {
    throw ValidationError("source.kind must be 'patch' or 'import', got '" + c.source_kind + "'");
  }

  if (c.noise_kinds.empty()) throw ValidationError("noise.kinds is empty");
  if (!c.covariance.empty()) require_file(c, "noise.covariance", c.covariance);
  if (!(c.rho_mm > 0.0)) throw ValidationError("noise.rho_mm must be positive");

  if (c.snr_db.empty()) throw ValidationError("benchmark.snr_db is empty");
  if (c.trials < 1) throw ValidationError("benchmark.trials must be at least 1");
  if (c.sample_maps < 0) throw ValidationError("benchmark.sample_maps must be non-negative");
  if (!(c.threshold_frac > 0.0 && c.threshold_frac <= 1.0)) {
    throw ValidationError("benchmark.threshold_frac must be in (0, 1]");
  }
  if (c.output.empty()) throw ValidationError("benchmark.output is empty");

  if (c.beta && !(*c.beta > 0.0)) throw ValidationError("solver.beta must be positive");
  if (c.noise_power && !(*c.noise_power > 0.0)) {
    throw ValidationError("solver.noise_power must be positive");
  }
  if (!(c.eloreta_tol > 0.0)) throw ValidationError("solver.eloreta_tol must be positive");
  if (c.eloreta_max_iter < 1) throw ValidationError("solver.eloreta_max_iter must be at least 1");
}

TriMesh load_mesh_spec(const std::string& spec, const std::filesystem::path& base_dir) {
  if (spec.rfind("icosphere:", 0) == 0) {
    const auto fields = split_colon(spec.substr(10));
    if (fields.empty() || fields.size() > 2 || fields[0].empty()) {
      throw ParseError("mesh spec '" + spec + "': expected icosphere:<subdivisions>[:<radius>]");
    }
    const auto subdiv = static_cast<int>(to_integer("mesh.path", fields[0]));
    const double radius = fields.size() == 2 ? to_double("mesh.path", fields[1]) : 1.0;
    if (subdiv < 0) throw ValidationError("icosphere subdivisions must be non-negative");
    if (!(radius > 0.0)) throw ValidationError("icosphere radius must be positive");
    return make_icosphere(subdiv, radius);
  }
  BenchmarkConfig probe;
  probe.base_dir = base_dir;
  return load_mesh(resolve_path(probe, spec));
}

namespace {

SensorMeta sensor_layout(const BenchmarkConfig& c, const TriMesh& mesh) {
  if (c.sensors.rfind("cap:", 0) != 0) return load_sensor_meta(resolve_path(c, c.sensors));
  const auto f = split_colon(c.sensors);
  if (f.size() < 2 || f.size() > 4) {
    throw ParseError("leadfield.sensors: expected cap:<count>[:<radius>[:<coverage>]]");
  }
  const auto count = static_cast<int>(to_integer("leadfield.sensors", f[1]));
  const Eigen::Vector3d center = centroid(mesh);
  double radius = 0.0;
  if (f.size() >= 3) {
    radius = to_double("leadfield.sensors", f[2]);
  } else {
    // Scalp-like shell 25% beyond the furthest vertex.
    radius = 1.25 * (mesh.vertices().rowwise() - center.transpose()).rowwise().norm().maxCoeff();
  }
  const double coverage = f.size() == 4 ? to_double("leadfield.sensors", f[3]) : 0.6;
  return make_sensor_cap(count, radius, center, coverage);
}

}  // namespace

Experiment build_experiment(const BenchmarkConfig& c) {
  TriMesh mesh = load_mesh_spec(c.mesh, c.base_dir);
  if (!c.hemisphere_sidecar.empty()) {
    mesh = with_hemisphere_labels(
        mesh, load_hemisphere_sidecar(resolve_path(c, c.hemisphere_sidecar), mesh.vertex_count()));
  }

  auto fm = c.leadfield_kind == "file"
                ? load_leadfield(resolve_path(c, c.leadfield_matrix),
                                 resolve_path(c, c.sensor_meta), mesh)
                : analytic_leadfield(mesh, sensor_layout(c, mesh), c.conductivity);

  Experiment ex{std::move(mesh), std::move(fm), std::nullopt, {}, {}, {}};
  if (!c.covariance.empty()) {
    ex.covariance = io::read_matrix(resolve_path(c, c.covariance));
    if (ex.covariance->rows() != ex.fm.sensor_count() ||
        ex.covariance->cols() != ex.fm.sensor_count()) {
      throw ShapeError("noise.covariance must be " + std::to_string(ex.fm.sensor_count()) + "x" +
                       std::to_string(ex.fm.sensor_count()));
    }
  }

  auto wants = [&](Method m) {
    return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
  };
  if (wants(Method::GbfMap)) ex.gbf = gbf_basis(ex.mesh, c.gbf_count, c.per_hemisphere);
  if (wants(Method::HarmonicMap)) {
    ex.harmonic = harmonic_basis(ex.mesh, c.harmonic_degree, c.per_hemisphere);
  }
  if (wants(Method::MspMap)) {
    const int m = ex.fm.sensor_count();
    const Eigen::MatrixXd cov =
        c.prewhiten && ex.covariance ? *ex.covariance : Eigen::MatrixXd::Identity(m, m);
    ex.msp = msp_basis(ex.fm, cov, c.msp_count, {c.msp_weights, ex.mesh.fingerprint()});
  }
  return ex;
}

const BasisSet& basis_for(const Experiment& ex, Method method) {
  const std::optional<BasisSet>* b = nullptr;
  switch (method) {
    case Method::GbfMap: b = &ex.gbf; break;
    case Method::HarmonicMap: b = &ex.harmonic; break;
    case Method::MspMap: b = &ex.msp; break;
    default: break;
  }
  if (b == nullptr || !b->has_value()) {
    throw ValidationError("no basis was built for method " + std::string(to_string(method)));
  }
  return **b;
}

InverseSolution run_method(const Experiment& ex, const BenchmarkConfig& c, Method method,
                           const Eigen::VectorXd& y, std::optional<double> beta,
                           std::optional<double> noise_power) {
  if (!beta && !noise_power) {
    throw ValidationError("automatic beta needs a noise power (solver.noise_power)");
  }
  const std::optional<Eigen::MatrixXd> cov = c.prewhiten ? ex.covariance : std::nullopt;

  if (is_basis_method(method)) {
    const BasisSet& basis = basis_for(ex, method);
    const PriorSpec prior = build_prior(basis, c.epsilon_frac);
    const MapOptions options{c.prewhiten, cov};
    const MapProblem problem(y, ex.fm, basis, prior, options);
    double b = 0.0;
    if (beta) {
      b = *beta;
    } else {
      b = bisect_discrepancy([&](double v) { return problem.residual_sq(v); },
                             problem.beta_scale(), ex.fm.sensor_count() * *noise_power)
              .beta;
    }
    auto out = problem.solve(b);
    out.method = std::string(to_string(method));
    out.source.provenance = "solver:" + out.method;
    return out;
  }

  if (method == Method::Eloreta) {
    EloretaOptions opts;
    opts.tol = c.eloreta_tol;
    opts.max_iter = c.eloreta_max_iter;
    double b = beta ? *beta
                    : select_beta_discrepancy_eloreta(y, ex.fm, cov, *noise_power, opts).beta;
    return solve_eloreta(y, ex.fm, cov, b, opts);
  }

  const MneProblem problem(ex.fm, cov);
  double b = 0.0;
  if (beta) {
    b = *beta;
  } else {
    b = bisect_discrepancy([&](double v) { return problem.residual_sq(y, v); },
                           problem.beta_scale(), ex.fm.sensor_count() * *noise_power)
            .beta;
  }
  switch (method) {
    case Method::Mne: return problem.mne(y, b);
    case Method::Dspm: return problem.dspm(y, b);
    default: return problem.sloreta(y, b);
  }
}

SourceEstimate trial_source(const Experiment& ex, const BenchmarkConfig& c, int trial,
                            std::uint64_t seed) {
  const int n = ex.mesh.vertex_count();
  if (c.source_kind == "import") {
    const auto& p = c.source_paths[static_cast<std::size_t>(trial) % c.source_paths.size()];
    return import_source_map(resolve_path(c, p), ex.mesh);
  }
  int center = 0;
  if (c.centers.empty()) {
    center = static_cast<int>(seed % static_cast<std::uint64_t>(n));
  } else {
    center = c.centers[static_cast<std::size_t>(trial) % c.centers.size()];
    if (center >= n) {
      throw IndexError("source.centers: vertex " + std::to_string(center) + " is out of range for " +
                       std::to_string(n) + " vertices");
    }
  }
  return patch_source(ex.mesh, center, c.fwhm_mm, c.amplitude);
}

}  // namespace esi::cli
