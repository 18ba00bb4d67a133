#include <catch_amalgamated.hpp>

#include <charconv>
#include <random>
#include <sstream>

#include "helpers.hpp"

using namespace albdg;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace {

const char* kBase = R"(
[domain]
lengths = 28
global_grid = 256

[mesh]
elements = 4
lgl_order = 100

[basis]
initial_counts = 10

[potential]
electrons = 2

[well.a]
center = 6.3
depth = 5
width = 0.4
)";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

std::string without(const std::string& text, const std::string& line) {
  std::string out = text;
  out.erase(out.find(line), line.size());
  return out;
}

}  // namespace

TEST_CASE("a minimal config parses with defaults") {
  const auto c = parse(kBase);
  CHECK(c.problem.domain.dim == 1);
  CHECK(c.problem.element_counts == std::vector<int>{4});
  CHECK(c.refinement.initial == std::vector<int>(4, 10));
  CHECK(c.problem.potential.wells.size() == 1);
  CHECK(c.problem.penalty.gamma == 20.0);
  CHECK(c.refinement.j_max == c.problem.basis.local_count);
  CHECK(c.oracle_multiplier == 2);
}

TEST_CASE("config errors name the section and field") {
  CHECK_THROWS_WITH(parse(without(kBase, "lengths = 28\n")),
                    ContainsSubstring("[domain] lengths: missing required field"));
  CHECK_THROWS_WITH(parse(std::string(kBase) + "[scf]\nmixnig = 0.3\n"), ContainsSubstring("[scf] mixnig: unknown field"));
  CHECK_THROWS_WITH(parse(std::string(kBase) + "[solver]\nx = 1\n"), ContainsSubstring("unknown section [solver]"));
  CHECK_THROWS_WITH(parse(std::string(kBase) + "[penalty]\nmode = huge\n"), ContainsSubstring("[penalty] mode"));
  CHECK_THROWS_WITH(parse(std::string(kBase) + "[scf]\ntol = abc\n"), ContainsSubstring("[scf] tol"));
  CHECK_THROWS_AS(parse(std::string(kBase) + "[potential]\nelectrons = 3\n"), ConfigError);  // duplicate section
  std::string many = kBase;
  many.replace(many.find("electrons = 2"), 13, "electrons = 41");
  CHECK_THROWS_WITH(parse(many), ContainsSubstring("[potential] electrons"));
  std::string wrong = kBase;
  wrong.replace(wrong.find("initial_counts = 10"), 19, "initial_counts = 10, 10");
  CHECK_THROWS_WITH(parse(wrong), ContainsSubstring("[basis] initial_counts"));
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("config hash covers physics and seed but not output or threads") {
  const auto a = parse(kBase);
  const auto b = parse(std::string(kBase) + "[output]\ndirectory = elsewhere\n[run]\nthreads = 4\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == parse(kBase).hash());
  const auto c = parse(std::string(kBase) + "[run]\nseed = 99\n");
  CHECK(a.hash() != c.hash());
  CHECK(a.physics_hash() == c.physics_hash());
}

TEST_CASE("shortest round-trip number formatting") {
  CHECK(io::fmt(0.1) == "0.1");
  CHECK(io::fmt(3) == "3");
  CHECK(io::fmt(std::numeric_limits<double>::quiet_NaN()) == "nan");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const auto bits = rng();
    double v;
    std::memcpy(&v, &bits, 8);
    if (!std::isfinite(v)) continue;
    const auto text = io::fmt(v);
    double back = 0.0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(std::memcmp(&back, &v, 8) == 0);
  }
}

TEST_CASE("files carry sidecars and round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "albdg_io_test";
  std::filesystem::remove_all(dir);
  const io::Meta meta{"0123456789abcdef", "test"};
  io::write_csv(dir / "t.csv", {"a", "b"}, {{"1", "2.5"}, {"3", "nan"}}, meta);
  const auto rows = io::read_csv(dir / "t.csv");
  CHECK(rows.size() == 3);
  CHECK(rows[2][1] == "nan");
  const auto side = io::read_json(dir / "t.csv.meta.json");
  CHECK(side["config_hash"] == "0123456789abcdef");
  CHECK(side["version"] == kVersion);
  CHECK(side["rows"] == 2);

  Vec f(6);
  f << 1.0, -0.0, 1e-300, 3.5, -2.25, std::numbers::pi;
  io::write_grid(dir / "g.bin", f, {3, 2}, {1.0, 2.0}, meta);
  const auto g = io::read_grid(dir / "g.bin");
  CHECK(g.dims == std::vector<int>{3, 2});
  for (int i = 0; i < 6; ++i) CHECK(std::memcmp(&g.values[i], &f[i], 8) == 0);
  std::ifstream raw(dir / "g.bin", std::ios::binary);
  unsigned char first[8];
  raw.read(reinterpret_cast<char*>(first), 8);
  const unsigned char one[8] = {0, 0, 0, 0, 0, 0, 0xf0, 0x3f};
  CHECK(std::memcmp(first, one, 8) == 0);
  CHECK_THROWS_AS(io::write_grid(dir / "bad.bin", f, {4, 2}, {1.0, 2.0}, meta), ConfigError);
  std::filesystem::remove_all(dir);
}
