#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/experiments.hpp"
#include "tvslab/io.hpp"

using namespace tvslab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tvslab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small(const std::string& name, int workers) {
  ExperimentConfig c;
  c.experiment = name;
  c.radii = {16, 24};
  c.replicas = 4;
  c.seed = 77;
  c.workers = workers;
  return c;
}

}  // namespace

TEST_CASE("sample files round trip") {
  const fs::path dir = scratch("sample");
  const DomainPtr dom = make_disk_domain(12);
  const FieldSample s = sample_dgff(dom, 5);
  write_sample(s, dir / "f.tvs1");
  const std::string raw = slurp(dir / "f.tvs1");
  CHECK(raw.substr(0, 4) == "TVS1");
  CHECK(raw.size() == 4 + 4 + 8 + 8 * s.values.size());
  const FieldSample back = read_sample(dir / "f.tvs1", dom);
  CHECK(back.values == s.values);
  CHECK(back.seed == s.seed);
  CHECK(back.method == s.method);
  const Json meta = Json::parse(slurp(dir / "f.tvs1.json"));
  CHECK(meta["lambda"].get<double>() == kLambda);

  CHECK_THROWS_AS(read_sample(dir / "f.tvs1", make_disk_domain(13)), DomainError);
  write_text(dir / "bad.tvs1", "XXXX0000");
  CHECK_THROWS_AS(read_sample(dir / "bad.tvs1", dom), DomainError);
  write_text(dir / "short.tvs1", raw.substr(0, 40));
  CHECK_THROWS_AS(read_sample(dir / "short.tvs1", dom), DomainError);
  CHECK_THROWS_AS(read_sample(dir / "missing.tvs1", dom), DomainError);
}

TEST_CASE("bit packing") {
  const std::vector<std::uint8_t> flags = {1, 0, 0, 1, 1, 0, 1, 0, 1, 1};
  const std::string b = pack_bits(flags);
  REQUIRE(b.size() == 2);
  CHECK(static_cast<unsigned char>(b[0]) == 0b01011001);
  CHECK(static_cast<unsigned char>(b[1]) == 0b11);
  CHECK(unpack_bits(b, flags.size()) == flags);
  CHECK(pack_bits(std::vector<std::uint8_t>{}).empty());
  CHECK_THROWS_AS(unpack_bits(b, 17), DomainError);
}

TEST_CASE("set exports") {
  const fs::path dir = scratch("sets");
  const double a = kLambda, b = kTwoLambda;
  const TwoValuedSet t = testing::fixture(8, {{testing::rect(-1, 1, -1, 1), -a}, {{{5, 5}}, b}}, a, b);
  write_tvs(t, dir / "t.bits");
  CHECK(unpack_bits(slurp(dir / "t.bits"), t.in_cluster.size()) == t.in_cluster);
  const Json j = Json::parse(slurp(dir / "t.bits.json"));
  CHECK(j["components"].get<int>() == 2);
  CHECK(j["cluster_size"].get<std::size_t>() == t.in_cluster.size() - 10);
  CHECK(j["labels"][0].get<double>() == -a);

  const LoopGraph lg = build_adjacency(extract_loops(t));
  const Json lj = loop_graph_json(lg);
  CHECK(lj["loops"].size() == 2);
  const std::string svg = svg_string(lg);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);
  std::size_t polys = 0;
  for (std::size_t p = svg.find("<polygon"); p != std::string::npos; p = svg.find("<polygon", p + 1)) ++polys;
  CHECK(polys == 2);
  render_svg(lg, dir / "t.svg");
  CHECK(slurp(dir / "t.svg") == svg);

  const Json tr = to_json(TestReport{0.5, 0.25, 10, "KS"});
  CHECK(tr["p_value"].get<double>() == 0.25);
  CHECK(to_json(Interval{0.1, 0.2}) == Json::array({0.1, 0.2}));
}

TEST_CASE("report bodies do not depend on the worker count") {
  for (const std::string name : {"phases", "br-distance", "below-threshold", "labels-parity"}) {
    ExperimentConfig c1 = small(name, 1);
    if (name == "labels-parity") c1.radii = {24};
    ExperimentConfig c3 = c1;
    c3.workers = 3;
    const ExperimentReport r1 = run_experiment(c1);
    const ExperimentReport r3 = run_experiment(c3);
    CHECK(r1.body().dump() == r3.body().dump());
    CHECK_FALSE(r1.body().dump().find("workers") != std::string::npos);
    CHECK(r1.full()["run"]["workers"].get<int>() == 1);
    CHECK(r1.gates.size() > 0);
    CHECK(r1.pass() == r1.failing().empty());
  }
}

TEST_CASE("seeds change the result") {
  ExperimentConfig c = small("below-threshold", 1);
  const std::string one = run_experiment(c).body()["metrics"].dump();
  c.seed = 78;
  CHECK(run_experiment(c).body()["metrics"].dump() != one);
}

TEST_CASE("reports on disk") {
  const fs::path dir = scratch("report");
  ExperimentConfig c = small("phases", 2);
  c.out = dir;
  c.svg = true;
  const ExperimentReport r = run_experiment(c);
  write_report(r, c);
  const Json j = Json::parse(slurp(dir / "phases" / "report.json"));
  CHECK(j["body"] == r.body());
  CHECK(j["run"].contains("wall_clock_s"));
  CHECK(fs::exists(dir / "phases" / "phases.csv"));
  bool svg = false;
  for (const auto& e : fs::directory_iterator(dir / "phases")) svg = svg || e.path().extension() == ".svg";
  CHECK(svg);
}

TEST_CASE("bad configurations are rejected") {
  CHECK(experiment_names().size() == 11);
  CHECK(known_experiment("levy1d"));
  CHECK_FALSE(known_experiment("nope"));
  ExperimentConfig c = small("nope", 1);
  CHECK_THROWS_AS(run_experiment(c), InvalidParameter);
  c = small("phases", 1);
  c.radii = {32, 16};
  CHECK_THROWS_AS(run_experiment(c), InvalidParameter);
  c = small("phases", 0);
  CHECK_THROWS_AS(run_experiment(c), InvalidParameter);
  c = small("cle4-labels", 1);
  c.a = -1.0;
  CHECK_THROWS_AS(run_experiment(c), InvalidParameter);
  CHECK_FALSE(version_string().empty());
}

#ifdef TVSLAB_CLI
namespace {
int run_cli(const std::string& args) {
  const int rc = std::system((std::string(TVSLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("nope") == 2);
  CHECK(run_cli("phases --radius 16 --bogus") == 2);
  CHECK(run_cli("phases --radius 32,16 --out " + dir.string()) == 2);
  CHECK(run_cli("below-threshold --radius 16,24 --replicas 3 --out " + dir.string()) <= 1);
  CHECK(fs::exists(dir / "below-threshold" / "report.json"));
  // key=value config file, flags win
  write_text(dir / "cfg.ini", "radius=16,24\nreplicas=3\nseed=9\nout=" + dir.string() + "\n");
  CHECK(run_cli("below-threshold --config " + (dir / "cfg.ini").string() + " --seed 10") <= 1);
  const Json j = Json::parse(slurp(dir / "below-threshold" / "report.json"));
  CHECK(j["body"]["config"]["seed"].get<std::uint64_t>() == 10);
  CHECK(j["body"]["config"]["replicas"].get<int>() == 3);
  CHECK(run_cli("--version") == 0);
}
#endif
