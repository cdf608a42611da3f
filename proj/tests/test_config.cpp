#include <catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "soblab/config.hpp"
#include "soblab/experiments.hpp"

using namespace soblab;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in, "test.ini");
}

std::string error_of(const std::string& text) {
  try {
    (void)parse_sweep_config(parse(text));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

const std::string kBase = R"([params]
k = 1
p = 2.5
d = 2

[distribution]
radius = 1
sigma = 1
)";

}  // namespace

TEST_CASE("sections, comments and typed values") {
  const Config c = parse("# leading\n[a]\nx = 1.5  # trailing\nname = hello\nlist = 1, 2,3\nflag = true\n[b]\nx = 7\n");
  CHECK(c.get_double("a", "x", 0) == 1.5);
  CHECK(c.get_string("a", "name", "") == "hello");
  CHECK(c.get_list("a", "list") == std::vector<double>{1, 2, 3});
  CHECK(c.get_bool("a", "flag", false));
  CHECK(c.require_int("b", "x") == 7);
  CHECK(c.get_int("b", "missing", 3) == 3);
  CHECK_NOTHROW(c.reject_unknown());
}

TEST_CASE("diagnostics name the line") {
  CHECK_THROWS_WITH(parse("[a]\nx 1\n"), Catch::Matchers::ContainsSubstring("test.ini:2"));
  CHECK_THROWS_WITH(parse("x = 1\n"), Catch::Matchers::ContainsSubstring("outside"));
  const Config c = parse("[a]\nx = one\ny = 1\ny = 2\n");
  CHECK_THROWS_WITH(c.get_double("a", "x", 0), Catch::Matchers::ContainsSubstring("test.ini:2"));
  CHECK_THROWS_WITH(c.get_double("a", "y", 0), Catch::Matchers::ContainsSubstring("more than once"));
  const Config u = parse("[a]\nx = 1\nz = 2\n");
  (void)u.get_double("a", "x", 0);
  CHECK_THROWS_WITH(u.reject_unknown(), Catch::Matchers::ContainsSubstring("[a] z: unknown field"));
}

TEST_CASE("a full sweep config parses") {
  const SweepConfig sc = parse_sweep_config(parse(kBase + R"([distribution]
bump = 0.1, 0.2, 0.5, 1.5
[sweep]
id = w
name = weighted_delta_sum
beta = 0.8
seed = 12345678901234567890
trials = 5
n_grid = 64, 128, 256, 512
)"));
  CHECK(sc.kind == SweepKind::WeightedDeltaSum);
  CHECK(*sc.beta == 0.8);
  CHECK(*sc.seed == 12345678901234567890ULL);
  CHECK(sc.n_grid == std::vector<std::size_t>{64, 128, 256, 512});
  CHECK(sc.spec.truth.size() == 1);
  CHECK(sc.spec.truth[0].radius == 0.5);
}

TEST_CASE("beta on or outside (0, d/2) is rejected by name") {
  const std::string sweep = "[sweep]\nname = weighted_delta_sum\nseed = 1\nn_grid = 64,128,256,512\n";
  CHECK_THROWS_WITH(parse_sweep_config(parse(kBase + sweep + "beta = 1\n")), Catch::Matchers::ContainsSubstring("beta"));
  CHECK(error_of(kBase + sweep + "beta = 0\n").find("[sweep] beta") != std::string::npos);
  CHECK(error_of(kBase + sweep).find("beta") != std::string::npos);
}

TEST_CASE("other invalid sweeps") {
  CHECK(error_of(kBase + "[sweep]\nname = nope\n").find("name") != std::string::npos);
  CHECK(error_of(kBase + "[sweep]\nname = risk_vs_n\nn_grid = 64,128\n").find("n_grid") != std::string::npos);
  CHECK(error_of(kBase + "[sweep]\nname = risk_vs_n\nn_grid = 64,128,256,512\ntrials = 3\n").find("trials") != std::string::npos);
  CHECK(error_of(kBase + "[sweep]\nname = risk_vs_n\nn_grid = 64,128,256,512\ntypo = 3\n").find("typo") != std::string::npos);
  CHECK(error_of("[params]\nk = 1\np = 2\nd = 1\n[sweep]\nname = norm_vs_n\nn_grid = 64,128,256,512\n").find("norm_vs_n") !=
        std::string::npos);
  CHECK(error_of(kBase + "[sweep]\nname = morrey\nvariant = exact\n").find("variant") != std::string::npos);
  CHECK(error_of("[params]\nk = 1\np = 1\nd = 1\n[sweep]\nname = morrey\n").find("[params]") != std::string::npos);
  CHECK(error_of(kBase + "[distribution]\nbump = 1, 2\n[sweep]\nname = morrey\n").find("bump") != std::string::npos);
}
