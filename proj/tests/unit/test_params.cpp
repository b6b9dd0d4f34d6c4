#include <doctest.h>

#include <cstring>
#include <random>
#include <sstream>

#include "mrsc/error.hpp"
#include "mrsc/params.hpp"

using namespace mrsc;

namespace {

ParamStore sample_store() {
  std::mt19937_64 rng(11);
  ParamStore s;
  s.get_or_create("alpha/embedding", {5, 3}, Init::kXavier, rng);
  s.get_or_create("beta/dense/b", {4}, Init::kNormal, rng);
  s.get_or_create("chi_1/dense1/w", {2, 2}, Init::kXavier, rng);
  return s;
}

template <typename T>
T read_le(const std::string& bytes, std::size_t off) {
  T v{};
  std::memcpy(&v, bytes.data() + off, sizeof v);
  return v;
}

}  // namespace

TEST_CASE("checkpoint layout is magic, version, count, then entries") {
  ParamStore s;
  s.insert("a", Tensor::from({2}, {1.5, -2.0}));
  std::ostringstream out;
  save_params(s, out);
  const std::string b = out.str();
  REQUIRE(b.size() == 4 + 2 + 4 + 2 + 1 + 1 + 4 + 16);
  CHECK(b.substr(0, 4) == "MRSC");
  CHECK(read_le<std::uint16_t>(b, 4) == 1);
  CHECK(read_le<std::uint32_t>(b, 6) == 1);
  CHECK(read_le<std::uint16_t>(b, 10) == 1);
  CHECK(b[12] == 'a');
  CHECK(static_cast<unsigned char>(b[13]) == 1);
  CHECK(read_le<std::uint32_t>(b, 14) == 2);
  CHECK(read_le<double>(b, 18) == 1.5);
  CHECK(read_le<double>(b, 26) == -2.0);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto s = sample_store();
  std::stringstream io;
  save_params(s, io);
  const auto first = io.str();
  const auto loaded = load_params(io);
  REQUIRE(loaded.size() == s.size());
  for (const auto& [path, t] : s.entries()) {
    const auto& u = loaded.at(path);
    CHECK(u.dims() == t.dims());
    CHECK(std::memcmp(u.data().data(), t.data().data(), t.size() * sizeof(double)) == 0);
  }
  std::ostringstream again;
  save_params(loaded, again);
  CHECK(again.str() == first);
}

TEST_CASE("bad magic, bad version and truncation are distinct errors") {
  std::ostringstream out;
  save_params(sample_store(), out);
  const std::string good = out.str();

  std::string bad = good;
  bad[0] = 'X';
  std::istringstream in1(bad);
  CHECK_THROWS_AS(load_params(in1), FormatError);

  bad = good;
  bad[4] = 9;
  std::istringstream in2(bad);
  CHECK_THROWS_AS(load_params(in2), FormatError);

  std::istringstream in3(good.substr(0, good.size() - 5));
  CHECK_THROWS_AS(load_params(in3), CorruptionError);

  std::istringstream in4(good.substr(0, 8));
  CHECK_THROWS_AS(load_params(in4), CorruptionError);
}

TEST_CASE("missing checkpoint file is a config error") {
  CHECK_THROWS_AS(load_params(std::filesystem::path("/nonexistent/model.mrsc")), ConfigError);
}

TEST_CASE("prefix matching respects path boundaries") {
  CHECK(path_has_prefix("alpha/enc0/q/w", "alpha"));
  CHECK(path_has_prefix("alpha", "alpha"));
  CHECK_FALSE(path_has_prefix("alphabet/x", "alpha"));
  CHECK(path_has_prefix("chi_1/dense1/w", "chi_1"));
  CHECK_FALSE(path_has_prefix("chi_12/dense1/w", "chi_1"));
}

TEST_CASE("sgd updates only unfrozen parameters and clears gradients") {
  ParamStore s;
  s.insert("a/w", Tensor::from({2}, {1.0, 2.0}, true));
  s.insert("b/w", Tensor::from({2}, {3.0, 4.0}, true));
  backward(sum(add(s.at("a/w"), s.at("b/w"))));
  sgd_step(s, {0.5, 0.0}, {"b"});
  CHECK(s.at("a/w").data()[0] == 0.5);
  CHECK(s.at("a/w").data()[1] == 1.5);
  CHECK(s.at("b/w").data()[0] == 3.0);
  CHECK_FALSE(s.at("a/w").has_grad());
  CHECK_FALSE(s.at("b/w").has_grad());
}

TEST_CASE("global norm clipping rescales the step") {
  ParamStore s;
  s.insert("p", Tensor::from({2}, {0.0, 0.0}, true));
  backward(sum(mul(s.at("p"), Tensor::from({2}, {3.0, 4.0}))));  // grad (3,4), norm 5
  sgd_step(s, {1.0, 1.0}, {});
  CHECK(s.at("p").data()[0] == doctest::Approx(-0.6));
  CHECK(s.at("p").data()[1] == doctest::Approx(-0.8));
}

TEST_CASE("a parameter without a gradient is flagged") {
  ParamStore s;
  s.insert("p", Tensor::from({1}, {1.0}, true));
  CHECK_THROWS_AS(sgd_step(s, {0.1, 0.0}, {}), ContractViolation);
  CHECK_NOTHROW(sgd_step(s, {0.1, 0.0}, {}, true));
}

TEST_CASE("copy and erase by prefix") {
  auto s = sample_store();
  s.copy_prefix("chi_1", "chi_2");
  CHECK(serialize_prefix(s, "chi_1").size() == serialize_prefix(s, "chi_2").size());
  CHECK(s.at("chi_2/dense1/w").data()[0] == s.at("chi_1/dense1/w").data()[0]);
  CHECK(s.erase_prefix("chi_2") == 1);
  CHECK_FALSE(s.contains("chi_2/dense1/w"));
  CHECK(s.contains("chi_1/dense1/w"));
}
