#include <doctest.h>

#include <string>

#include "bmqt/config.hpp"
#include "bmqt/errors.hpp"

using namespace bmqt;

namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const config_error& err) {
    return err.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults document is accepted with k=8, m=2") {
  const RunConfig cfg = parse_config("{}");
  CHECK(cfg.model.k == 8.0);
  CHECK(cfg.model.m == 2.0);
  CHECK(cfg.mode == RunMode::Simulate);
  CHECK(cfg.quadrature.polar == 64);
}

TEST_CASE("defiA rejection: k=4, m=2 gives A = 16/3 <= 9") {
  const std::string msg = message_of(R"({"model": {"k": 4, "m": 2}})");
  CHECK(msg.find("defiA violated") != std::string::npos);
  CHECK(msg.find("<= 9") != std::string::npos);
  CHECK(msg.find("5.33") != std::string::npos);
}

TEST_CASE("defiA rejection: m = 1.2 <= 3/2") {
  const std::string msg = message_of(R"({"model": {"m": 1.2}})");
  CHECK(msg.find("defiA violated") != std::string::npos);
  CHECK(msg.find("3/2") != std::string::npos);
}

TEST_CASE("defiA rejection: m above 6k/5") {
  const std::string msg = message_of(R"({"model": {"k": 8, "m": 10}})");
  CHECK(msg.find("defiA violated") != std::string::npos);
  CHECK(msg.find("6k/5") != std::string::npos);
}

TEST_CASE("h11/h12/h13 rejections name the hypothesis") {
  CHECK(message_of(R"({"model": {"mu0": 0}})").find("h11") != std::string::npos);
  CHECK(message_of(R"({"model": {"A0": 0}})").find("h12") != std::string::npos);
  CHECK(message_of(R"({"model": {"Gamma1": 0}})").find("h13") != std::string::npos);
}

TEST_CASE("singular-flux consistency") {
  CHECK(message_of(R"({"singular_flux": true})").find("h12s") != std::string::npos);
  CHECK(message_of(R"({"model": {"A_minus2": 0.1}})").find("singular_flux") !=
        std::string::npos);
  CHECK_NOTHROW(parse_config(R"({"singular_flux": true, "model": {"A_minus2": 0.1}})"));
}

TEST_CASE("unknown keys are hard errors") {
  CHECK(message_of(R"({"tend": 1.0})").find("unknown configuration key") != std::string::npos);
  CHECK(message_of(R"({"model": {"lambda": 1.0}})").find("model.lambda") != std::string::npos);
  CHECK(message_of(R"({"init": {"umax": 0.1}})").find("init.umax") != std::string::npos);
}

TEST_CASE("parse errors carry position information") {
  const std::string msg = message_of("{\"dt\": }");
  CHECK(msg.find("parse error") != std::string::npos);
}

TEST_CASE("initial-data constraints are validated") {
  CHECK(message_of(R"({"init": {"theta_mean": 0}})").find("m6c") != std::string::npos);
  CHECK(message_of(R"({"init": {"theta_amplitude": 1.5}})").find("m6c") != std::string::npos);
  CHECK(message_of(R"({"init": {"q_max_eigenvalue": 0.4}})").find("m6b") != std::string::npos);
}

TEST_CASE("numeric knobs are validated") {
  CHECK(message_of(R"({"dt": 0})").find("dt") != std::string::npos);
  CHECK(message_of(R"({"grid_size": 9})").find("grid_size") != std::string::npos);
  CHECK(message_of(R"({"quadrature": {"polar": 4}})").find("quadrature") != std::string::npos);
}

TEST_CASE("mode strings round-trip") {
  CHECK(parse_config(R"({"mode": "potential-eval"})").mode == RunMode::PotentialEval);
  CHECK(parse_config(R"({"mode": "analysis"})").mode == RunMode::Analysis);
  CHECK(message_of(R"({"mode": "shazam"})").find("unknown mode") != std::string::npos);
}
