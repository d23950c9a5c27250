#include <doctest.h>

#include <string>

#include "rodspec/config.hpp"

using namespace rodspec;

namespace {

const char* kModelConfig = R"(# model configuration
[geometry]
F = "(y1^2 + y2^2)/0.09 - 1"
half_width = 0.5
epsilon_ladder = "1/9, 1/17, 1/33"

[coefficients]
a11 = "1"
a12 = "0"
a22 = "1"
c = "1 + x1^2"
lambda0 = 0.5

[mode]
beta = 1

[solver]
h = 0.015625
h_y = 0.0625
tol = 1e-9
seed = 42
j_max = 3

[output]
directory = "out"
svg = false
)";

}  // namespace

TEST_CASE("a full configuration parses into the expected values") {
  cli::Config cfg = cli::parse_config_text(kModelConfig);
  CHECK(cfg.geometry->hole_present);
  CHECK(cfg.geometry->cross_section.half_width == 0.5);
  REQUIRE(cfg.n_cells_ladder.size() == 3);
  CHECK(cfg.n_cells_ladder[0] == 4);
  CHECK(cfg.n_cells_ladder[1] == 8);
  CHECK(cfg.n_cells_ladder[2] == 16);
  CHECK(cfg.beta == 1);
  CHECK(cfg.h == doctest::Approx(1.0 / 64));
  CHECK(cfg.h_y == doctest::Approx(1.0 / 16));
  CHECK(cfg.seed == 42);
  CHECK(cfg.j_max == 3);
  CHECK(cfg.output_dir == "out");
  CHECK_FALSE(cfg.svg);
  CHECK(cfg.coefficients.ellipticity_floor == 0.5);
  CHECK(cfg.coefficients.c->eval(expr::Env::vars(2, 0, 0)) == doctest::Approx(5.0));
  // mvt defaults exist
  CHECK(cfg.mvt_w->eval(expr::Env::vars(0, 0.5, 0)) == doctest::Approx(-1.0));
  CHECK(cfg.mvt_v->eval(expr::Env::vars(0.5, 0, 0)) == doctest::Approx(0.0));
}

TEST_CASE("minimal configuration uses documented defaults") {
  cli::Config cfg = cli::parse_config_text("[coefficients]\nc = \"1 + x1^2\"\n");
  CHECK_FALSE(cfg.geometry->hole_present);
  CHECK(cfg.n_cells_ladder.empty());
  CHECK(cfg.beta == 1);
  CHECK(cfg.j_max == 3);
  CHECK(cfg.coefficients.a11->eval(expr::Env::vars(0, 0, 0)) == 1.0);
  CHECK(cfg.coefficients.a12->eval(expr::Env::vars(0, 0, 0)) == 0.0);
}

TEST_CASE("config errors carry the offending line") {
  auto expect_error_line = [](const std::string& text, const char* needle) {
    try {
      cli::parse_config_text(text);
      FAIL_CHECK("expected a config error for: " << needle);
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_error_line("[geometry]\nunknown_key = 3\n", "line 2");
  expect_error_line("[nosuch]\nx = 1\n", "line 1");
  expect_error_line("[coefficients]\nc = \"1\"\n[solver]\nh = nope\n", "line 4");
  expect_error_line("[coefficients]\nc = \"1\"\n[solver]\nh = 0.5\n", "line 4");
  expect_error_line("[geometry]\nepsilon_ladder = \"1/8\"\n", "line 2");
  expect_error_line("[geometry]\nn_cells = 2\nepsilon_ladder = \"1/9\"\n", "line 3");
  expect_error_line("[solver]\nseed = 1\nseed = 2\n", "line 3");
  expect_error_line("[coefficients]\nc = \"1 +\"\n", "line 2");
  expect_error_line("[coefficients]\nc = \"1\" trailing\n", "line 2");
  expect_error_line("key_outside = 1\n", "line 1");
  expect_error_line("[coefficients]\nc = \"1\"\n[mode]\nbeta = 7\n", "line 4");
}

TEST_CASE("missing required potential is rejected") {
  CHECK_THROWS_AS(cli::parse_config_text("[mode]\nbeta = 1\n"), ConfigError);
}

TEST_CASE("comments and blank lines are ignored") {
  cli::Config cfg = cli::parse_config_text(
      "; leading comment\n\n[coefficients]\n# another\nc = \"2\"  # inline\n");
  CHECK(cfg.coefficients.c->eval(expr::Env::vars(0, 0, 0)) == 2.0);
}

TEST_CASE("raw text is preserved for the manifest echo") {
  cli::Config cfg = cli::parse_config_text(kModelConfig);
  CHECK(cfg.raw_text == kModelConfig);
}
