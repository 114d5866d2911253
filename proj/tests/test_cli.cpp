#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ura/cli.hpp"
#include "ura/errors.hpp"
#include "ura/figures.hpp"
#include "ura/format.hpp"

using namespace ura;
namespace fs = std::filesystem;

namespace {

const char* const kScenario = R"([scenario]
k_a = 3
m = 16
d = 16
snr_db = 0
trials = 2
master_seed = 9

[treecode]
j = 6
profile = 6, 3, 3, 0

[detector]
q_total = 300
q_mod = 64
zeta_relative = 0.5

[sweep]
snr_db = 0, -5
m_values = 16, 8
channel_modes = iid, correlated

[channel]
rho_r = 0.9
rician_k = 1

[convergence]
trace_stride = 10
)";

struct Run {
  int status = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ura_sim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.status = parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path root = fs::temp_directory_path() / "ura_cli_test";
  Workspace() {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream(root / "scenario.ini") << kScenario;
  }
  ~Workspace() { fs::remove_all(root); }
  std::string config() const { return (root / "scenario.ini").string(); }
};

}  // namespace

TEST_CASE("validate runs the self checks") {
  const Run r = invoke({"validate"});
  CHECK(r.status == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("all self checks passed") != std::string::npos);
}

TEST_CASE("run writes trials, summary and manifest") {
  Workspace ws;
  const Run r = invoke({"run", "--config", ws.config(), "--out", (ws.root / "run").string()});
  REQUIRE(r.status == 0);
  for (const char* f : {"trials.csv", "summary.json", "manifest.json"}) CHECK(fs::exists(ws.root / "run" / f));
  const auto manifest = nlohmann::json::parse(slurp(ws.root / "run" / "manifest.json"));
  CHECK(manifest["verb"] == "run");
  CHECK(manifest["seeds"]["master"] == 9);
  CHECK(manifest["outputs"].size() == 3);
  CHECK(manifest.contains("wall_clock_seconds"));
  const auto summary = nlohmann::json::parse(slurp(ws.root / "run" / "summary.json"));
  CHECK(summary["metrics"]["trials"] == 2);
}

TEST_CASE("sweep is byte-identical on rerun and from its manifest") {
  Workspace ws;
  REQUIRE(invoke({"sweep", "-c", ws.config(), "-o", (ws.root / "a").string()}).status == 0);
  REQUIRE(invoke({"sweep", "-c", ws.config(), "-o", (ws.root / "b").string()}).status == 0);
  REQUIRE(invoke({"sweep", "-c", (ws.root / "a" / "manifest.json").string(), "-o", (ws.root / "c").string()}).status ==
          0);
  for (const char* f : {"sweep.csv", "fig2.csv", "summary.json"}) {
    CHECK(slurp(ws.root / "a" / f) == slurp(ws.root / "b" / f));
    CHECK(slurp(ws.root / "a" / f) == slurp(ws.root / "c" / f));
  }

  std::ifstream fig(ws.root / "a" / "fig2.csv");
  const auto rows = read_fig2_csv(fig);
  REQUIRE(rows.size() == 8);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const auto& a = rows[k - 1];
    const auto& b = rows[k];
    const bool ordered = a.m < b.m || (a.m == b.m && a.channel_mode < b.channel_mode) ||
                         (a.m == b.m && a.channel_mode == b.channel_mode && a.snr_db < b.snr_db);
    CHECK(ordered);
  }
  const std::string header = slurp(ws.root / "a" / "sweep.csv").substr(0, 60);
  CHECK(header.find("snr_db,m,channel_mode,p_md,p_fa,p_e") == 0);
}

TEST_CASE("convergence writes one fig1 row per recorded iteration per policy") {
  Workspace ws;
  REQUIRE(invoke({"convergence", "-c", ws.config(), "-o", (ws.root / "conv").string()}).status == 0);
  std::ifstream fig(ws.root / "conv" / "fig1.csv");
  const auto rows = read_fig1_csv(fig);
  CHECK(rows.size() == 2 * 30);
  CHECK(rows.front().policy == "bla");
  CHECK(rows.back().policy == "random");
  CHECK(rows.back().iteration == 300);
}

TEST_CASE("seed and overrides reach the experiment") {
  Workspace ws;
  REQUIRE(invoke({"run", "-c", ws.config(), "-o", (ws.root / "s").string(), "--seed", "77", "--set",
                  "scenario.trials=1"})
              .status == 0);
  const auto manifest = nlohmann::json::parse(slurp(ws.root / "s" / "manifest.json"));
  CHECK(manifest["seeds"]["master"] == 77);
  CHECK(manifest["seeds"].contains("trial_0"));
  CHECK_FALSE(manifest["seeds"].contains("trial_1"));
}

TEST_CASE("output directory falls back to the environment") {
  Workspace ws;
  const auto target = ws.root / "from_env";
  ::setenv("URA_OUTPUT_DIR", target.string().c_str(), 1);
  const Run r = invoke({"run", "-c", ws.config(), "--set", "scenario.trials=1"});
  ::unsetenv("URA_OUTPUT_DIR");
  CHECK(r.status == 0);
  CHECK(fs::exists(target / "manifest.json"));
}

TEST_CASE("errors exit nonzero with a diagnostic") {
  Workspace ws;
  const std::string out = (ws.root / "x").string();
  SUBCASE("unknown override") {
    const Run r = invoke({"run", "-c", ws.config(), "-o", out, "--set", "scenario.nope=1"});
    CHECK(r.status == 2);
    CHECK(r.err.find("scenario.nope") != std::string::npos);
  }
  SUBCASE("malformed config") {
    std::ofstream(ws.root / "bad.ini") << "[scenario]\nk_a = one\n";
    const Run r = invoke({"run", "-c", (ws.root / "bad.ini").string(), "-o", out});
    CHECK(r.status == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
  }
  SUBCASE("infeasible profile") {
    const Run r = invoke({"run", "-c", ws.config(), "-o", out, "--set", "treecode.profile=5,3,3,0"});
    CHECK(r.status == 2);
    CHECK(r.err.find("invalid specification") != std::string::npos);
  }
  SUBCASE("codebook budget") {
    const Run r = invoke({"run", "-c", ws.config(), "-o", out, "--set", "treecode.j=30", "--set",
                          "treecode.profile=30,15,15", "--set", "scenario.d=4096"});
    CHECK(r.status == 1);
    CHECK(r.err.find("budget") != std::string::npos);
  }
  SUBCASE("missing config") {
    CHECK(invoke({"run", "-o", out}).status != 0);
    CHECK(invoke({"run", "-c", (ws.root / "none.ini").string(), "-o", out}).status == 2);
  }
  SUBCASE("no verb") { CHECK(invoke({}).status != 0); }
  SUBCASE("sweep without a grid") {
    std::string text = kScenario;
    text.erase(text.find("snr_db = 0, -5"), 15);
    std::ofstream(ws.root / "nogrid.ini") << text;
    CHECK(invoke({"sweep", "-c", (ws.root / "nogrid.ini").string(), "-o", out}).status == 2);
  }
}

TEST_CASE("figure data") {
  SweepTable table;
  table.rows.push_back({5.0, 64, ChannelMode::iid, 0.1, 0.2, 0.3, 10, 0});
  table.rows.push_back({-1.0 / 3.0, 32, ChannelMode::iid, 0.0, 0.1, 0.1, 10, 0});
  table.rows.push_back({0.0, 32, ChannelMode::correlated, 0.25, 0.0, 0.25, 10, 0});

  const std::string csv = emit_figure_data(table, FigureKind::fig2);
  std::istringstream in(csv);
  const auto rows = read_fig2_csv(in);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].channel_mode == "correlated");
  CHECK(rows[1].snr_db == -1.0 / 3.0);
  CHECK(rows[2].m == 64);
  CHECK(rows[2].p_e == 0.3);

  ConvergenceResult conv;
  PolicyTrace trace;
  for (Index q = 1; q <= 25; ++q) trace.trace.push_back({q, 0, 0.0, 0.0, 0.0, 1.0 / static_cast<double>(q)});
  conv.traces.push_back(trace);
  trace.policy = Policy::random;
  conv.traces.push_back(trace);
  thin_traces(conv, 10);
  std::istringstream fin(emit_figure_data(conv, FigureKind::fig1));
  const auto fig1 = read_fig1_csv(fin);
  REQUIRE(fig1.size() == 6);
  CHECK(fig1[2].iteration == 25);
  CHECK(fig1[2].e_gamma == 1.0 / 25.0);
  CHECK(fig1[3].policy == "random");

  CHECK_THROWS_AS(emit_figure_data(table, FigureKind::fig1), UsageError);
  CHECK_THROWS_AS(emit_figure_data(conv, FigureKind::fig2), UsageError);
  std::istringstream bad("wrong,header\n");
  CHECK_THROWS_AS(read_fig2_csv(bad), ParseError);
}

TEST_CASE("17 significant digits survive a round trip") {
  Rng rng = make_rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng) / 3.0;
    CHECK(std::stod(format_double(x)) == x);
  }
}
