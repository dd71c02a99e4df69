#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sosp/harness.hpp"
#include "sosp/relu.hpp"

using namespace sosp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::string tmpdir() {
  const auto dir = fs::temp_directory_path() / "sosp_harness_tests";
  fs::create_directories(dir);
  return dir.string();
}

std::vector<std::vector<double>> read_csv(const std::string& path, int skip_cols) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::size_t pos = 0;
    int col = 0;
    while (pos <= line.size()) {
      const auto next = line.find(',', pos);
      const std::string cell =
          line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      if (col++ >= skip_cols) row.push_back(std::stod(cell));
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("experiment specs round-trip through JSON") {
  ExperimentSpec spec;
  spec.kind = "zpsgd-run";
  spec.params = {{"pair", "quadratic"}, {"dim", 2}, {"iters", 5}, {"batch", 3},
                 {"sigma", 0.1}};
  spec.seed = 99;
  spec.output_path = "x";
  const auto j = spec.to_json();
  const auto back = ExperimentSpec::from_json(j);
  CHECK(back.kind == spec.kind);
  CHECK(back.seed == spec.seed);
  CHECK(back.params == spec.params);
  CHECK(back.output_path == spec.output_path);
}

TEST_CASE("reruns produce byte-identical artifacts") {
  const std::string dir = tmpdir();
  ExperimentSpec spec;
  spec.kind = "zpsgd-run";
  spec.params = {{"pair", "double-well"}, {"dim", 2}, {"iters", 40},
                 {"batch", 64}, {"eps", 0.1}};
  spec.seed = 7;

  spec.output_path = dir + "/detA";
  REQUIRE(run(spec) == 0);
  spec.output_path = dir + "/detB";
  REQUIRE(run(spec) == 0);

  CHECK(slurp(dir + "/detA.csv") == slurp(dir + "/detB.csv"));
  const auto a = read_json_file(dir + "/detA.summary.json");
  const auto b = read_json_file(dir + "/detB.summary.json");
  auto strip = [](nlohmann::json j) {
    j["spec"].erase("output_path");
    return j;
  };
  CHECK(strip(a) == strip(b));
}

TEST_CASE("summary echoes a spec that reproduces the run") {
  const std::string dir = tmpdir();
  ExperimentSpec spec;
  spec.kind = "concentration";
  spec.params = {{"d", 16}, {"trials", 5000}};
  spec.seed = 21;
  spec.output_path = dir + "/conc";
  REQUIRE(run(spec) == 0);

  const auto summary = read_json_file(dir + "/conc.summary.json");
  const auto back = ExperimentSpec::from_summary(summary);
  CHECK(back.kind == spec.kind);
  CHECK(back.params == spec.params);
  CHECK(back.seed == spec.seed);

  // Running the re-ingested spec reproduces the summary byte for byte.
  ExperimentSpec again = back;
  again.output_path = dir + "/conc2";
  REQUIRE(run(again) == 0);
  auto s1 = read_json_file(dir + "/conc.summary.json");
  auto s2 = read_json_file(dir + "/conc2.summary.json");
  s1["spec"].erase("output_path");
  s2["spec"].erase("output_path");
  CHECK(s1 == s2);
}

TEST_CASE("the SEED environment variable overrides the spec seed") {
  const std::string dir = tmpdir();
  ExperimentSpec spec;
  spec.kind = "concentration";
  spec.params = {{"d", 16}, {"trials", 1000}};
  spec.seed = 1;
  spec.output_path = dir + "/envseed";
  setenv("SEED", "4242", 1);
  REQUIRE(run(spec) == 0);
  unsetenv("SEED");
  const auto summary = read_json_file(dir + "/envseed.summary.json");
  CHECK(summary.at("spec").at("seed").get<std::uint64_t>() == 4242);
}

TEST_CASE("unknown parameter keys are rejected with an error artifact") {
  const std::string dir = tmpdir();
  ExperimentSpec spec;
  spec.kind = "concentration";
  spec.params = {{"d", 16}, {"trials", 100}, {"bogus", 1}};
  spec.output_path = dir + "/bad";
  CHECK(run(spec) == 1);
  const auto err = read_json_file(dir + "/bad.error.json");
  CHECK(err.at("error").get<std::string>().find("bogus") != std::string::npos);

  ExperimentSpec unknown;
  unknown.kind = "no-such-kind";
  unknown.output_path = dir + "/bad2";
  CHECK(run(unknown) == 1);
}

TEST_CASE("saddle-escape experiment kind") {
  const std::string dir = tmpdir();
  ExperimentSpec spec;
  spec.kind = "psgd-run";
  spec.params = {{"eps", 0.1}, {"rho", 0.1}, {"seeds", 4}};
  spec.seed = 11;
  spec.output_path = dir + "/psgd";
  REQUIRE(run(spec) == 0);
  const auto summary = read_json_file(dir + "/psgd.summary.json");
  CHECK(summary.at("successes").get<int>() == 4);
}

TEST_CASE("landscape grids") {
  SUBCASE("kinks separate the empirical surface from the smooth one") {
    const std::string dir = tmpdir();
    RngStream rng(31, 0);
    Eigen::VectorXd w_star(2);
    w_star << 1.0, 0.0;
    auto inst = std::make_shared<const ReluInstance>(make_relu_instance(2, 20, w_star, 5));
    FunctionPairOracle pair = make_relu_oracle(inst);
    const std::string path = dir + "/relu_grid.csv";
    emit_landscape_grid(pair, 0.25, 1.75, 61, path);

    // Second differences along the fastest-varying axis; the empirical
    // surface has gradient jumps across sample hyperplanes.
    const auto rows = read_csv(path, 2);  // columns: F, f
    const int n = 61;
    const double h = 1.5 / 60.0;
    double worstF = 0.0, worstf = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 1; j + 1 < n; ++j) {
        const auto& m = rows[i * n + j];
        const auto& lo = rows[i * n + j - 1];
        const auto& hi = rows[i * n + j + 1];
        worstF = std::max(worstF, std::abs(hi[0] - 2 * m[0] + lo[0]) / (h * h));
        worstf = std::max(worstf, std::abs(hi[1] - 2 * m[1] + lo[1]) / (h * h));
      }
    }
    CHECK(worstf > 3.0 * worstF);
  }
  SUBCASE("ring structure of the erased bump at visualization sharpness") {
    const std::string dir = tmpdir();
    Eigen::VectorXd v(2);
    v << 1.0, 0.0;
    HardInstanceParams p;
    p.d = 2;
    p.epsilon = 1.0;
    p.rho = 1.0;
    p.mu = 10.0;
    p.v = v;
    p.variant = HardVariant::PolynomialQuery;
    p.validate();
    FunctionPairOracle pair = make_hard_oracle(p);
    const std::string path = dir + "/hard_grid.csv";
    emit_landscape_grid(pair, -1.5, 1.5, 101, path);
    const auto rows = read_csv(path, 2);
    double minF = 1e9, maxF = -1e9;
    for (const auto& r : rows) {
      minF = std::min(minF, r[0]);
      maxF = std::max(maxF, r[0]);
    }
    CHECK(minF < -0.3);  // the negative well of the bump shows up
    CHECK(maxF > 0.5);   // and so does the periodic bowl
  }
  SUBCASE("constant pair gives a constant grid") {
    const std::string dir = tmpdir();
    TruthView t;
    t.value = [](const Eigen::VectorXd&) { return 1.0; };
    FunctionPairOracle pair =
        make_pair(2, [](const Eigen::VectorXd&) { return 1.0; }, std::move(t), 0.0);
    const std::string path = dir + "/const_grid.csv";
    emit_landscape_grid(pair, -1.0, 1.0, 11, path);
    for (const auto& r : read_csv(path, 2)) {
      CHECK(r[0] == 1.0);
      CHECK(r[1] == 1.0);
    }
  }
  SUBCASE("dimension guard") {
    FunctionPairOracle pair = make_quadratic_pair(3);
    CHECK_THROWS(emit_landscape_grid(pair, -1, 1, 5, "/tmp/sosp_nope.csv"));
  }
}

TEST_CASE("experiment kind registry") {
  const auto& kinds = experiment_kinds();
  CHECK(kinds.size() == 10);
}
