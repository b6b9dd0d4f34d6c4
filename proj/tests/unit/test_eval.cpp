#include <doctest.h>

#include <sstream>

#include "mrsc/error.hpp"
#include "mrsc/eval/complexity.hpp"
#include "mrsc/eval/config.hpp"
#include "mrsc/eval/results.hpp"

using namespace mrsc;
using namespace mrsc::eval;

namespace {

ConfigFile parse(const std::string& s) {
  std::istringstream in(s);
  return ConfigFile::parse(in);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse(
      "# comment\n"
      "seed = 5\n"
      "[arch]\n"
      "d_model = 32   # trailing comment\n"
      "name = tiny\n"
      "[sweep]\n"
      "snr_db = 0:18:3\n"
      "users = 2, 3,4\n"
      "route = false\n");
  CHECK(c.get_u64("seed", 0) == 5);
  CHECK(c.get_size("arch.d_model", 0) == 32);
  CHECK(c.get_string("arch.name", "") == "tiny");
  CHECK(c.get_list("sweep.snr_db", {}) == std::vector<double>{0, 3, 6, 9, 12, 15, 18});
  CHECK(c.get_list("sweep.users", {}) == std::vector<double>{2, 3, 4});
  CHECK_FALSE(c.get_bool("sweep.route", true));
  CHECK(c.get_double("missing", 1.5) == 1.5);
  CHECK_NOTHROW(c.reject_unknown({"seed", "arch.d_model", "arch.name", "sweep.snr_db",
                                  "sweep.users", "sweep.route"}));
  CHECK_THROWS_AS(c.reject_unknown({"seed"}), ConfigError);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse("x = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse("x = abc\n").get_double("x", 0), ConfigError);
  CHECK_THROWS_AS(parse("x = -3\n").get_size("x", 0), ConfigError);
  CHECK_THROWS_AS(parse("x = maybe\n").get_bool("x", false), ConfigError);
  CHECK_THROWS_AS(parse_number_list("0:10:0"), ConfigError);
  CHECK(parse_number_list("0:1:0.25").size() == 5);
}

TEST_CASE("results CSV") {
  std::vector<SweepRow> rows{{"semantic", "snr_db", 3, {0.5, 0.4, 0.3, 0.2}, 7, 100},
                             {"classical", "snr_db", 0, {1, 1, 1, 1}, 7, 100}};
  std::ostringstream a, b;
  write_results_csv(a, rows);
  write_results_csv(b, rows);
  CHECK(a.str() == b.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kResultsHeader);
  std::getline(in, line);
  CHECK(line == "classical,snr_db,0,1,1,1,1,7,100");
  std::getline(in, line);
  CHECK(line == "semantic,snr_db,3,0.5,0.4,0.3,0.2,7,100");
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("closed-form operation counts") {
  CHECK(dense_ops(36, 16, 128).mults == 73728);
  CHECK(encoder_stack_ops(0, 36, 32, 32, 2, 64) == OpCount{});
  CHECK(decoder_stack_ops(0, 36, 36, 32, 32, 2, 64) == OpCount{});
}

TEST_CASE("instrumented counts equal the formulas") {
  Corpus dummy;
  for (int k = 0; k < 3; ++k) {
    ArchConfig a = ArchConfig::tiny();
    a.vocab_size = 40;
    RecognizerConfig r;
    r.vocab_size = 40;
    if (k == 1) {
      a.n_layers = 1;
      a.d_attn = 16;
      a.n_ce = 8;
      r.n_layers = 1;
    } else if (k == 2) {
      a.users = 3;
      a.n_heads = 4;
      a.d_ff = 48;
      r.classes = 3;
    }
    const auto est = estimate_complexity(a, r);
    CHECK(measure_encoder_decoder_ops(a, k + 1) == est.encoder_decoder);
    CHECK(measure_recognizer_ops(r, k + 1) == est.recognizer);
  }
}
