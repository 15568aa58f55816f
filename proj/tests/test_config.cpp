#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mltm/config.hpp"

using namespace mltm;

TEST_CASE("every key has a documented default") {
  RunConfig config;
  for (const auto& entry : RunConfig::registry()) {
    CHECK(entry.doc[0] != '\0');
    CHECK_NOTHROW(config.get(entry.key));
  }
  CHECK(config.get("chains") == "8");
  CHECK(config.get("infer_chains") == "60");
  CHECK(config.get("min_count") == "20");
}

TEST_CASE("unknown keys are rejected") {
  RunConfig config;
  CHECK_THROWS_AS(config.set("not_a_key", "1"), ConfigError);
  CHECK_THROWS_AS(config.get("not_a_key"), ConfigError);
  CHECK_THROWS_AS(config.apply_override("nope=3"), ConfigError);
  CHECK_THROWS_AS(config.apply_override("missing-equals"), ConfigError);
}

TEST_CASE("later writes win") {
  RunConfig config;
  config.set("seed", "1");
  config.apply_override("seed=2");
  CHECK(config.get_u64("seed") == 2);
}

TEST_CASE("typed getters validate their input") {
  RunConfig config;
  config.set("seed", "abc");
  CHECK_THROWS_AS(config.get_u64("seed"), ConfigError);
  config.set("eta", "1.5x");
  CHECK_THROWS_AS(config.get_double("eta"), ConfigError);
  config.set("avg_prec_exclusive", "maybe");
  CHECK_THROWS_AS(config.get_bool("avg_prec_exclusive"), ConfigError);
  config.set("avg_prec_exclusive", "true");
  CHECK(config.get_bool("avg_prec_exclusive"));
}

TEST_CASE("config files support comments and blank lines") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream out(path);
    out << "# a comment\n\n  seed = 77  \nvariant=prior # trailing comment\n";
  }
  RunConfig config;
  config.load_file(path);
  CHECK(config.get_u64("seed") == 77);
  CHECK(config.get("variant") == "prior");
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "bad_key=1\n";
  }
  RunConfig strict;
  CHECK_THROWS_AS(strict.load_file(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("echo lists effective values sorted by key") {
  RunConfig config;
  config.set("variant", "flat");
  auto echo = config.echo({"seed", "variant", "chains"});
  REQUIRE(echo.size() == 3);
  CHECK(echo[0].first == "chains");
  CHECK(echo[1] == std::pair<std::string, std::string>{"seed", "12345"});
  CHECK(echo[2].second == "flat");
}
