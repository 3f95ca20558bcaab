#include "support.hpp"

#include "esi/cli/commands.hpp"
#include "esi/cli/config.hpp"
#include "esi/errors.hpp"
#include "esi/matrix_io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

using namespace esi;
using namespace esi::cli;

namespace {

const GlobalOptions kQuiet{};

std::string small_config(const std::string& methods, const std::string& snr, int trials,
                         const std::string& extra = "") {
  return "[mesh]\npath = icosphere:2:75\n"
         "[leadfield]\nkind = analytic\nsensors = cap:32\n"
         "[methods]\nlist = " + methods + "\n"
         "[basis]\ngbf_count = 40\nharmonic_degree = 4\nmsp_count = 20\n"
         "[source]\nkind = patch\nfwhm_mm = 30\n"
         "[noise]\nkinds = gaussian\n"
         "[benchmark]\nsnr_db = " + snr + "\ntrials = " + std::to_string(trials) +
         "\nseed = 7\n" + extra;
}

std::filesystem::path write_config(const esi::test::TempDir& dir, const std::string& text,
                                   const std::string& name = "run.ini") {
  const auto path = dir / name;
  std::ofstream(path) << text;
  return path;
}

int run_esi(const std::string& args) {
  const std::string cmd = std::string(ESI_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, Defaults) {
  const auto c = parse_config("", ".");
  EXPECT_EQ(c.mesh, "icosphere:3:75");
  EXPECT_EQ(c.methods.size(), 7u);
  EXPECT_EQ(c.gbf_count, 300);
  EXPECT_EQ(c.harmonic_degree, 6);
  EXPECT_EQ(c.trials, 20);
  EXPECT_EQ(c.snr_db, (std::vector<double>{-20, -10, -5, 0, 5, 10, 20}));
  EXPECT_FALSE(c.beta.has_value());
}

TEST(Config, ParsesValues) {
  const auto c = parse_config(small_config("GBF-MAP, sLORETA", "-5, 5", 3,
                                           "[solver]\nbeta = 0.5\nprewhiten = true\n"),
                              ".");
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::GbfMap, Method::Sloreta}));
  EXPECT_EQ(c.snr_db, (std::vector<double>{-5, 5}));
  EXPECT_EQ(c.trials, 3);
  EXPECT_EQ(c.seed, 7u);
  ASSERT_TRUE(c.beta.has_value());
  EXPECT_EQ(*c.beta, 0.5);
  EXPECT_TRUE(c.prewhiten);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("[bogus]\nx = 1\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[basis]\ncolour = red\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[basis]\ngbf_count = many\n", "."), ParseError);
  EXPECT_THROW(parse_config("[benchmark]\ntrials = 0\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[benchmark]\nsnr_db =\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[mesh]\npath = missing.off\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[leadfield]\nkind = bem\n", "."), ValidationError);
  EXPECT_THROW(parse_config("[mesh\npath = x\n", "."), ParseError);
  try {
    parse_config("[methods]\nlist = GBF-MAP, LCMV\n", ".");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("sLORETA"), std::string::npos);
  }
}

TEST(Config, RelativePathsResolveAgainstConfigDirectory) {
  esi::test::TempDir dir;
  save_mesh(dir / "m.off", make_icosphere(1, 75.0), MeshFormat::OffAscii);
  const auto path = write_config(dir, "[mesh]\npath = m.off\n");
  const auto c = load_config(path);
  EXPECT_EQ(resolve_path(c, c.mesh), dir / "m.off");
}

TEST(CmdEigenmodes, WritesAscendingEigenvaluesDeterministically) {
  esi::test::TempDir dir;
  ASSERT_EQ(cmd_eigenmodes("icosphere:3:1", 16, dir / "a", false, kQuiet), kExitOk);
  ASSERT_EQ(cmd_eigenmodes("icosphere:3:1", 16, dir / "b", false, kQuiet), kExitOk);
  const auto values = io::read_vector(dir / "a" / "eigenvalues.vec");
  ASSERT_EQ(values.size(), 16);
  for (int i = 1; i < 16; ++i) EXPECT_LE(values[i - 1], values[i]);
  EXPECT_EQ(io::read_matrix(dir / "a" / "eigenvectors.csv").cols(), 16);
  for (const char* f : {"eigenvalues.vec", "eigenvectors.csv", "manifest.txt"}) {
    EXPECT_EQ(io::read_text_file(dir / "a" / f), io::read_text_file(dir / "b" / f)) << f;
  }
}

TEST(CmdSolve, GbfMapSolutionHasOneValuePerVertex) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("GBF-MAP, MNE, eLORETA", "5", 1));
  ASSERT_EQ(cmd_simulate(cfg, dir / "trial", {}, kQuiet), kExitOk);
  ASSERT_EQ(cmd_solve(cfg, dir / "trial" / "noisy.vec", dir / "a", kQuiet), kExitOk);
  ASSERT_EQ(cmd_solve(cfg, dir / "trial" / "noisy.vec", dir / "b", kQuiet), kExitOk);
  EXPECT_EQ(io::read_vector(dir / "a" / "GBF-MAP.vec").size(), 162);
  for (const char* m : {"GBF-MAP", "MNE", "eLORETA"}) {
    const std::string f = std::string(m) + ".vec";
    EXPECT_EQ(io::read_text_file(dir / "a" / f), io::read_text_file(dir / "b" / f)) << m;
  }
  const auto manifest = io::read_manifest(dir / "a" / "GBF-MAP.manifest.txt");
  EXPECT_EQ(manifest.at("status"), "ok");
  EXPECT_EQ(manifest.at("basis_size"), "40");
}

TEST(CmdSolve, LengthMismatchIsDataError) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("MNE", "5", 1, "[solver]\nbeta = 1\n"));
  io::write_vector(dir / "y.vec", Eigen::VectorXd::Ones(5));
  EXPECT_THROW(cmd_solve(cfg, dir / "y.vec", dir / "out", kQuiet), ShapeError);
}

TEST(CmdBenchmark, OneCellGivesOneRow) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("GBF-MAP", "5", 1));
  ASSERT_EQ(cmd_benchmark(cfg, dir / "out", kQuiet), kExitOk);
  const auto rows = lines(io::read_text_file(dir / "out" / "results.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], kLongCsvHeader);
  EXPECT_EQ(rows[1].rfind("GBF-MAP,GBF,40,gaussian,5,0,", 0), 0u) << rows[1];
  EXPECT_NE(rows[1].find(",ok"), std::string::npos);
}

TEST(CmdBenchmark, RerunIsByteIdentical) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("GBF-MAP, MNE, sLORETA", "0, 10", 50));
  ASSERT_EQ(cmd_benchmark(cfg, dir / "a", kQuiet), kExitOk);
  ASSERT_EQ(cmd_benchmark(cfg, dir / "b", GlobalOptions{std::nullopt, 3, false}), kExitOk);
  for (const char* f : {"results.csv", "summary.csv"}) {
    EXPECT_EQ(io::read_text_file(dir / "a" / f), io::read_text_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(lines(io::read_text_file(dir / "a" / "results.csv")).size(), 1u + 3 * 2 * 50);
}

TEST(CmdBenchmark, SeedOverrideChangesResults) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("MNE", "0", 3));
  ASSERT_EQ(cmd_benchmark(cfg, dir / "a", kQuiet), kExitOk);
  ASSERT_EQ(cmd_benchmark(cfg, dir / "b", GlobalOptions{99, 1, false}), kExitOk);
  EXPECT_NE(io::read_text_file(dir / "a" / "results.csv"),
            io::read_text_file(dir / "b" / "results.csv"));
}

TEST(CmdBenchmark, SummaryMatchesLongRows) {
  const auto c = parse_config(small_config("GBF-MAP, MSP-MAP, dSPM", "-5, 5", 6), ".");
  const auto result = run_benchmark(c, kQuiet);
  ASSERT_EQ(result.summary.size(), 3u * 2u);
  for (const auto& s : result.summary) {
    double se = 0.0, le = 0.0;
    int n = 0;
    for (const auto& r : result.cells) {
      if (r.method == s.method && r.noise == s.noise && r.snr_db == s.snr_db && r.status == "ok") {
        se += r.metrics.se;
        le += r.metrics.le_mm;
        ++n;
      }
    }
    ASSERT_EQ(n, s.n);
    EXPECT_NEAR(s.se_mean, se / n, 1e-12);
    EXPECT_NEAR(s.le_mean, le / n, 1e-12);
  }
}

TEST(CmdBenchmark, FullGridHas126Conditions) {
  auto c = parse_config("[leadfield]\nsensors = cap:64\n"
                        "[noise]\nkinds = gaussian, realistic\n"
                        "[benchmark]\nsnr_db = -20,-15,-10,-5,0,5,10,15,20\ntrials = 1\n",
                        ".");
  const auto result = run_benchmark(c, kQuiet);
  EXPECT_EQ(result.summary.size(), 126u);
  EXPECT_EQ(result.cells.size(), 126u);
  for (const auto& r : result.cells) EXPECT_EQ(r.status, "ok") << r.method << " " << r.snr_db;
}

TEST(CmdReport, EmptyCsvIsSchemaError) {
  esi::test::TempDir dir;
  std::ofstream(dir / "empty.csv").close();
  EXPECT_THROW(cmd_report(dir / "empty.csv", dir / "out", 5.0, kQuiet), SchemaError);
  std::ofstream(dir / "bad.csv") << "method,se\nMNE,0.5\n";
  EXPECT_THROW(cmd_report(dir / "bad.csv", dir / "out", 5.0, kQuiet), SchemaError);
}

TEST(CmdReport, SingleRowGivesOnePointCurves) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("MNE", "5", 1));
  ASSERT_EQ(cmd_benchmark(cfg, dir / "bench", kQuiet), kExitOk);
  ASSERT_EQ(cmd_report(dir / "bench" / "results.csv", dir / "rep", 5.0, kQuiet), kExitOk);
  std::vector<std::string> data;
  for (const auto& l : lines(io::read_text_file(dir / "rep" / "curve_se_gaussian.dat"))) {
    if (!l.empty() && l[0] != '#') data.push_back(l);
  }
  ASSERT_EQ(data.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "rep" / "bars_snr5_gaussian.dat"));
}

TEST(CmdReport, CurveColumnsAreMethodsPlusOne) {
  esi::test::TempDir dir;
  const auto cfg = write_config(dir, small_config("GBF-MAP, MNE, dSPM, eLORETA", "0, 10", 2));
  ASSERT_EQ(cmd_benchmark(cfg, dir / "bench", kQuiet), kExitOk);
  ASSERT_EQ(cmd_report(dir / "bench" / "results.csv", dir / "rep", 5.0, kQuiet), kExitOk);
  for (const char* metric : {"se", "mcc", "le_mm", "sd_mm"}) {
    const auto file = dir / "rep" / ("curve_" + std::string(metric) + "_gaussian.dat");
    int rows = 0;
    for (const auto& l : lines(io::read_text_file(file))) {
      if (l.empty() || l[0] == '#') continue;
      std::istringstream in(l);
      int cols = 0;
      for (std::string tok; in >> tok;) ++cols;
      EXPECT_EQ(cols, 5) << l;
      ++rows;
    }
    EXPECT_EQ(rows, 2);
  }
  // No rows at 5 dB: the bar table is skipped.
  EXPECT_FALSE(std::filesystem::exists(dir / "rep" / "bars_snr5_gaussian.dat"));
  const auto back = read_long_csv(dir / "bench" / "results.csv");
  EXPECT_EQ(back.size(), 4u * 2u * 2u);
}

TEST(ExitCodes, FromTheBinary) {
  esi::test::TempDir dir;
  EXPECT_EQ(run_esi("eigenmodes icosphere:1 -n 0 -o " + (dir / "e").string()), kExitUsage);
  EXPECT_EQ(run_esi("frobnicate"), kExitUsage);
  EXPECT_EQ(run_esi("eigenmodes " + (dir / "missing.off").string() + " -n 4 -o " +
                    (dir / "e").string()),
            kExitData);
  EXPECT_EQ(run_esi("eigenmodes icosphere:1 -n 4 -o " + (dir / "e").string()), kExitOk);
  std::ofstream(dir / "bad.ini") << "[methods]\nlist = LCMV\n";
  EXPECT_EQ(run_esi("benchmark " + (dir / "bad.ini").string()), kExitData);
  std::ofstream(dir / "empty.csv").close();
  EXPECT_EQ(run_esi("report " + (dir / "empty.csv").string() + " -o " + (dir / "r").string()),
            kExitData);
}
