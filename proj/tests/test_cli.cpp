#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "relax/report.hpp"
#include "relax/singular.hpp"

using namespace relax;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::path("cli_test_out") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kImpulseCfg = PROJECT_SOURCE_DIR "/configs/fhn_impulse.cfg";

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::istringstream is(line);
    std::string cell;
    while (std::getline(is, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("shipped impulse config parses and round-trips") {
  const RunConfig cfg = load_config(kImpulseCfg);
  CHECK(cfg.model.family == "fhn");
  CHECK(cfg.model.a == 0.7);
  CHECK(cfg.model.b == 0.8);
  CHECK(cfg.model.current == 1.0);
  REQUIRE(cfg.model.epsilon.has_value());
  CHECK(*cfg.model.epsilon == 0.01);
  REQUIRE(cfg.input.has_value());
  CHECK(cfg.input->kind == "impulse");
  CHECK(cfg.input->alpha == 1.5);
  CHECK(cfg.numerics.n_samples == 256);

  const RunConfig again = parse_config(cfg.dump());
  CHECK(again.dump() == cfg.dump());
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_WITH_AS(parse_config("[input]\nkind = impulse\nalpha = 1\n"),
                       "invalid or missing field: model", ValidationError);
  // unknown key is rejected by name
  try {
    parse_config("[model]\nfamily = fhn\na = 1\nb = 1\nI = 0\nbogus = 3\n");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "model.bogus");
  }
  // parse errors carry the line number
  try {
    parse_config("[model]\nfamily = fhn\na = not_a_number\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[model]\nfamily = fhn\na = 1\na = 2\n"), ParseError);
  CHECK_THROWS_AS(parse_config("key_outside = 1\n[model]\nfamily = fhn\n"), ParseError);
  // exactly one input kind: pulse fields are rejected under impulse
  CHECK_THROWS_AS(
      parse_config("[model]\nfamily = fhn\na = 1\nb = 1\nI = 0\n"
                   "[input]\nkind = impulse\nalpha = 1\nu_bar = 2\n"),
      ValidationError);
  // epsilon and epsilon_list are mutually exclusive
  CHECK_THROWS_AS(
      parse_config("[model]\nfamily = fhn\na = 1\nb = 1\nI = 0\n"
                   "epsilon = 0.1\nepsilon_list = 0.1 0.2\n"),
      ValidationError);
}

TEST_CASE("pulse duration units resolve at run time") {
  const std::string base =
      "[model]\nfamily = fhn\na = 0.7\nb = 0.8\nI = 1\n"
      "[input]\nkind = pulse\nu_bar = 0.25\n";
  const RunConfig frac = parse_config(base + "duration = 0.1 period\n");
  const auto sig = frac.input_signal(2.0);
  const auto& p = std::get<SquarePulse>(sig);
  CHECK(p.duration_slow == doctest::Approx(0.2));
  CHECK(p.amplitude == 0.25);

  const RunConfig abs1 = parse_config(base + "duration = 0.3\n");
  CHECK(std::get<SquarePulse>(abs1.input_signal(2.0)).duration_slow == 0.3);
  const RunConfig abs2 = parse_config(base + "duration = 0.3 slow\n");
  CHECK(std::get<SquarePulse>(abs2.input_signal(5.0)).duration_slow == 0.3);
}

TEST_CASE("geometry command emits the fold data") {
  RunConfig cfg = load_config(kImpulseCfg);
  const fs::path dir = fresh_dir("geometry");
  run(cfg, "geometry", {dir.string(), 0});
  const auto rows = read_csv(dir / "geometry.csv");
  REQUIRE(rows.size() >= 8);
  CHECK(rows[0] == std::vector<std::string>{"quantity", "value"});
  const auto value = [&](const std::string& key) -> double {
    for (const auto& r : rows)
      if (r.size() == 2 && r[0] == key) return std::stod(r[1]);
    FAIL("missing key ", key);
    return 0.0;
  };
  CHECK(value("lower_fold_x") == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(value("lower_fold_z") == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(value("upper_fold_x") == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(value("upper_fold_z") == doctest::Approx(5.0 / 3.0).epsilon(1e-10));
  CHECK(value("landing_from_lower_fold_x") == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(value("landing_from_upper_fold_x") == doctest::Approx(-2.0).epsilon(1e-10));
  CHECK(value("period_slow") > 0.0);
  CHECK(value("theta_plus") > 0.0);
  // sidecar holds the provenance
  CHECK(fs::exists(dir / "geometry.csv.meta.json"));
}

TEST_CASE("prc commands and plot overlay") {
  RunConfig cfg = load_config(kImpulseCfg);
  cfg.model.epsilon = 0.1;  // keep the numeric pass quick
  cfg.numerics.n_samples = 16;
  const fs::path dir = fresh_dir("plot");
  run(cfg, "prc-singular", {dir.string(), 0});
  run(cfg, "prc-numeric", {dir.string(), 2});
  run(cfg, "plot", {dir.string(), 0});

  const auto singular = read_csv(dir / "prc_singular.csv");
  REQUIRE(singular.size() == 17);
  CHECK(singular[0] == std::vector<std::string>{"theta", "shift", "method", "epsilon"});
  CHECK(singular[1][2] == "singular");
  CHECK(singular[1][3] == "0");
  const auto numeric = read_csv(dir / "prc_numeric.csv");
  REQUIRE(numeric.size() == 17);
  CHECK(numeric[1][2] == "numeric");
  CHECK(std::stod(numeric[1][3]) == 0.1);

  const std::string svg = slurp(dir / "fig_prc.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<circle") != std::string::npos);    // numeric dots
  CHECK(svg.find("<polyline") != std::string::npos);  // singular line

  // unwrapped companion differs from the wrapped data by multiples of 2*pi
  const auto unwrapped = read_csv(dir / "prc_singular_unwrapped.csv");
  REQUIRE(unwrapped.size() == singular.size());
  for (std::size_t i = 1; i < singular.size(); ++i) {
    const double dw = std::stod(unwrapped[i][1]) - std::stod(singular[i][1]);
    const double turns = dw / kTwoPi;
    CHECK(std::abs(turns - std::round(turns)) < 1e-12);
  }
}

TEST_CASE("pulse config resolves the period fraction against the slow period") {
  RunConfig cfg = load_config(PROJECT_SOURCE_DIR "/configs/fhn_pulse.cfg");
  cfg.numerics.n_samples = 8;
  const fs::path dir = fresh_dir("pulse");
  run(cfg, "prc-singular", {dir.string(), 0});
  const std::string meta = slurp(dir / "prc_singular.csv.meta.json");
  // 0.1 of the singular slow period (~1.8198) resolved at run time
  CHECK(meta.find("duration_slow=0.18198") != std::string::npos);
}

TEST_CASE("isochrones command writes the grid") {
  RunConfig cfg = load_config(kImpulseCfg);
  cfg.numerics.grid_n = 12;
  const fs::path dir = fresh_dir("isochrones");
  run(cfg, "isochrones", {dir.string(), 0});
  const auto rows = read_csv(dir / "isochrones.csv");
  REQUIRE(rows.size() == 1 + 12 * 12);
  CHECK(rows[0] == std::vector<std::string>{"x", "z", "theta"});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double th = std::stod(rows[i][2]);
    if (!std::isnan(th)) {
      CHECK(th >= 0.0);
      CHECK(th < kTwoPi);
    }
  }
}

TEST_CASE("missing run-time inputs are reported by field") {
  RunConfig cfg = load_config(kImpulseCfg);
  cfg.model.epsilon.reset();
  const fs::path dir = fresh_dir("errors");
  try {
    run(cfg, "prc-numeric", {dir.string(), 0});
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "model.epsilon");
  }
  CHECK_THROWS_AS(run(cfg, "no-such-command", {dir.string(), 0}), ValidationError);
  CHECK_THROWS_AS(run(cfg, "sweep", {dir.string(), 0}), ValidationError);
  // plot with nothing to draw
  CHECK_THROWS_AS(run(cfg, "plot", {fresh_dir("empty").string(), 0}), ValidationError);
}

TEST_CASE("repeated runs are byte-identical") {
  RunConfig cfg = load_config(kImpulseCfg);
  cfg.model.epsilon = 0.1;
  cfg.numerics.n_samples = 8;
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  for (const auto& dir : {a, b}) {
    run(cfg, "geometry", {dir.string(), 0});
    run(cfg, "prc-singular", {dir.string(), 0});
    run(cfg, "prc-numeric", {dir.string(), 4});
  }
  for (const char* f : {"geometry.csv", "prc_singular.csv", "prc_numeric.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
}
