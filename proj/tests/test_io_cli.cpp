#include <doctest.h>

#include "cmms/cli.hpp"
#include "cmms/io.hpp"
#include "cmms/space.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

using namespace cmms;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("cmms_test_" + tag);
  fs::create_directories(p);
  return p;
}

std::string put(const fs::path& dir, const std::string& name, const std::string& content) {
  fs::path p = dir / name;
  write_text(p.string(), content);
  return p.string();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "cmms");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("io_cli") {

TEST_CASE("canonical dump sorts keys and pins number formatting") {
  nlohmann::json j;
  j["b"] = 1;
  j["a"] = 2;
  CHECK(canonical_dump(j) == "{\"a\":2,\"b\":1}\n");

  nlohmann::json nums;
  nums["x"] = 0.1;
  nums["y"] = std::numeric_limits<double>::infinity();
  nums["z"] = -std::numeric_limits<double>::infinity();
  std::string s = canonical_dump(nums);
  CHECK(s == "{\"x\":0.10000000000000001,\"y\":\"inf\",\"z\":\"-inf\"}\n");

  // Idempotent modulo the non-finite strings: re-parsing a finite document
  // and dumping again reproduces the bytes.
  nlohmann::json fin = {{"arr", {1.5, 2, -3.25}}, {"name", "x"}};
  std::string once = canonical_dump(fin);
  CHECK(canonical_dump(nlohmann::json::parse(once)) == once);
}

TEST_CASE("double formatting round-trips and names non-finite values") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(std::stod(format_double(0.1)) == 0.1);
}

TEST_CASE("space json round trip is byte stable") {
  auto dir = scratch_dir("space_rt");
  auto s = build_grid_space(5, 4, Bounds::unit_square());
  auto path = (dir / "space.json").string();
  save_space(s, path);

  auto back = load_space(path);
  CHECK(back.n == s.n);
  CHECK(back.edges.size() == s.edges.size());
  CHECK(canonical_dump(space_to_json(back)) == canonical_dump(space_to_json(s)));

  auto path2 = (dir / "space2.json").string();
  save_space(back, path2);
  CHECK(read_text(path2) == read_text(path));
}

TEST_CASE("zero-weight transform leaves the serialized space byte-identical") {
  auto dir = scratch_dir("identity");
  auto s = build_grid_space(6, 6, Bounds::symmetric_square());
  auto t = conformal_transform(s, ConformalPair::zero(s.n));
  save_space(s, (dir / "a.json").string());
  save_space(t, (dir / "b.json").string());
  CHECK(read_text((dir / "a.json").string()) == read_text((dir / "b.json").string()));
}

TEST_CASE("space schema errors carry context") {
  auto dir = scratch_dir("schema");

  auto expect_throw = [&](const std::string& name, const std::string& body,
                          const std::string& needle) {
    auto p = put(dir, name, body);
    try {
      load_space(p);
      FAIL_CHECK("expected a schema error for " << name);
    } catch (const std::invalid_argument& e) {
      CHECK_MESSAGE(contains(e.what(), needle), e.what());
    }
  };

  expect_throw("missing_nodes.json", R"({"edges": []})", "nodes");
  expect_throw("bad_id_order.json",
               R"({"nodes": [{"id": 1, "measure": 1.0, "dim_loc": 1},
                             {"id": 0, "measure": 1.0, "dim_loc": 1}],
                   "edges": [{"i": 0, "j": 1, "length": 1.0}]})",
               "id");
  expect_throw("bad_measure.json",
               R"({"nodes": [{"id": 0, "measure": "x", "dim_loc": 1},
                             {"id": 1, "measure": 1.0, "dim_loc": 1}],
                   "edges": [{"i": 0, "j": 1, "length": 1.0}]})",
               "measure");
  expect_throw("not_json.json", "junk {", "parse");
}

TEST_CASE("fields load from json arrays, objects, and csv") {
  auto dir = scratch_dir("fields");

  auto a = load_field(put(dir, "a.json", "[1.0, 2.5, -3.0]"), 3);
  CHECK(a[1] == 2.5);
  auto b = load_field(put(dir, "b.json", R"({"values": [4, 5, 6]})"), 3);
  CHECK(b[2] == 6.0);
  auto c = load_field(put(dir, "c.csv", "7.5\n8\n-9.25\n"), 3);
  CHECK(c[0] == 7.5);
  CHECK(c[2] == -9.25);

  CHECK_THROWS_AS(load_field(put(dir, "short.json", "[1, 2]"), 3), std::invalid_argument);
  try {
    load_field(put(dir, "bad.csv", "1.0\nnot_a_number\n2.0\n"), 3);
    FAIL_CHECK("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK_MESSAGE(contains(e.what(), "line 2"), e.what());
  }

  SUBCASE("save and reload") {
    ScalarField f(std::vector<double>{0.5, -1.5, 2.0});
    auto p = (dir / "saved.json").string();
    save_field(f, p);
    auto back = load_field(p, 3);
    for (int i = 0; i < 3; ++i) CHECK(back[i] == f[i]);
  }
}

TEST_CASE("distance csv prints inf by name") {
  auto dir = scratch_dir("csv");
  auto p = (dir / "d.csv").string();
  save_distances_csv(p, {{0, 1, 1.5}, {0, 2, std::numeric_limits<double>::infinity()}});
  CHECK(read_text(p) == "src,dst,value\n0,1,1.5\n0,2,inf\n");
}

TEST_CASE("cli verify runs an identity end to end") {
  auto dir = scratch_dir("cli_verify");
  int rc = cli({"verify", "--identity", "gradient", "--resolution", "16", "--resolution", "32",
                "--out", dir.string()});
  CHECK(rc == 0);

  auto j = nlohmann::json::parse(read_text((dir / "verify_gradient.json").string()));
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("kind").get<std::string>() == "convergent");
  CHECK(j.at("runs").size() == 2);
  CHECK(j.at("error_ratio").get<double>() >= 2.0);
}

TEST_CASE("cli verify covers the exact identity too") {
  auto dir = scratch_dir("cli_angle");
  int rc = cli({"verify", "--identity", "angle", "--resolution", "16", "--samples", "20",
                "--out", dir.string()});
  CHECK(rc == 0);
  auto j = nlohmann::json::parse(read_text((dir / "verify_angle.json").string()));
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("kind").get<std::string>() == "exact");
}

TEST_CASE("cli rejects bad invocations") {
  CHECK(cli({"verify", "--identity", "nonsense", "--resolution", "16"}) == 2);
  CHECK(cli({"verify", "--bogus"}) == 2);
  CHECK(cli({"verify", "--identity", "gradient", "--resolution", "1"}) == 2);
  CHECK(cli({}) == 2);  // a subcommand is required
}

TEST_CASE("cli curvature handles the exact constant case") {
  auto dir = scratch_dir("cli_curv");
  int rc = cli({"curvature", "--preset", "flat", "--w-const", "0.25", "--K", "2",
                "--resolution", "16", "--out", dir.string()});
  CHECK(rc == 0);
  auto j = nlohmann::json::parse(read_text((dir / "curvature.json").string()));
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("k_prime").get<double>() == std::exp(-0.5) * 2.0);
}

TEST_CASE("cli fractal produces a summary and distance tables") {
  auto dir = scratch_dir("cli_fractal");
  int rc = cli({"fractal", "--depth", "1", "--resolution", "32", "--pairs", "3", "--out",
                dir.string()});
  CHECK(rc == 0);
  CHECK(fs::exists(dir / "fractal_summary.json"));
  CHECK(fs::exists(dir / "fractal_distances_32.csv"));
  auto j = nlohmann::json::parse(read_text((dir / "fractal_summary.json").string()));
  CHECK(j.at("pass").get<bool>());

  SUBCASE("same seed reproduces bytes") {
    auto dir2 = scratch_dir("cli_fractal_again");
    CHECK(cli({"fractal", "--depth", "1", "--resolution", "32", "--pairs", "3", "--out",
               dir2.string()}) == 0);
    CHECK(read_text((dir / "fractal_summary.json").string()) ==
          read_text((dir2 / "fractal_summary.json").string()));
  }
}

TEST_CASE("cli oracle checks the analytic identity") {
  auto dir = scratch_dir("cli_oracle");
  int rc = cli({"oracle", "--samples", "25", "--out", dir.string()});
  CHECK(rc == 0);
  auto j = nlohmann::json::parse(read_text((dir / "oracle.json").string()));
  CHECK(j.at("pass").get<bool>());
  CHECK(j.at("max_deviation").get<double>() <= 1e-8);
}

}  // TEST_SUITE
