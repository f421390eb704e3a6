#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fm/config.hpp"
#include "fm/error.hpp"

using namespace fm;

TEST_CASE("ini parsing") {
  const auto kv = config::parse("# scenario\n[scenario]\nharvesters = 4 \n\n[pricing]\nmode=policymaker # inline\n");
  CHECK(kv.at("scenario.harvesters") == "4");
  CHECK(kv.at("pricing.mode") == "policymaker");
  CHECK(kv.size() == 2);

  CHECK_THROWS_AS(config::parse("[scenario]\nharvesters\n"), ConfigError);
  auto c = config::preset("plentiful");
  CHECK_THROWS_AS(config::apply(config::parse("harvesters = 4\n"), c), ConfigError);
  CHECK_THROWS_AS(config::parse("[scenario]\na = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(config::parse("[scenario\na = 1\n"), ConfigError);
}

TEST_CASE("applying values") {
  auto c = config::preset("scarce");
  CHECK(c.scarcity == 0.45);
  CHECK(config::preset("plentiful").scarcity == 0.8);
  CHECK_THROWS_AS(config::preset("abundant"), ConfigError);

  config::apply(config::parse("[pricing]\nmode = fixed\nfixed_prices = 1, 2, 3, 4\n[objective]\nfairness = gini\n"), c);
  CHECK(c.pricing == sim::PricingMode::fixed);
  CHECK(c.fixed_prices == std::vector<double>{1, 2, 3, 4});
  CHECK(c.fairness.kind == objectives::FairnessKind::gini);

  CHECK_THROWS_AS(config::apply(config::parse("[scenario]\nfish = 3\n"), c), ConfigError);
  CHECK_THROWS_AS(config::apply(config::parse("[scenario]\nharvesters = many\n"), c), ConfigError);
  CHECK_THROWS_AS(config::apply(config::parse("[scenario]\nharvesters = 0\n"), c), ConfigError);
}

TEST_CASE("hash ignores key order and formatting") {
  const auto a = config::parse("[scenario]\nharvesters = 4\nbuyers = 6\n[run]\nseed = 9\n");
  const auto b = config::parse("[run]\nseed=9\n# comment\n[scenario]\nbuyers=6\nharvesters=4\n");
  auto ca = config::preset("plentiful"), cb = config::preset("plentiful");
  config::apply(a, ca);
  config::apply(b, cb);
  CHECK(config::config_hash(ca) == config::config_hash(cb));
  cb.seed = 10;
  CHECK(config::config_hash(ca) != config::config_hash(cb));
}

TEST_CASE("git blob hash") {
  // `printf 'hello\n' | git hash-object --stdin`
  CHECK(config::git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(config::git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("ini round trip") {
  auto c = config::preset("scarce");
  c.pricing = sim::PricingMode::policymaker;
  c.weights.intervention = 2.5;
  c.obfuscation.kind = objectives::ObfuscationKind::bins;
  c.harvester_ppo.learning_rate = 3e-5;
  c.seed = 123456789012345ULL;
  const auto path = std::filesystem::temp_directory_path() / "fm_config_roundtrip.ini";
  std::ofstream(path) << config::to_ini(c);
  auto back = config::preset("plentiful");
  config::apply(config::read_file(path), back);
  CHECK(config::canonical_text(back) == config::canonical_text(c));
  CHECK(back.seed == c.seed);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(config::read_file(path), IoError);
}

TEST_CASE("shipped configs load") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(FM_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    CAPTURE(entry.path().string());
    auto c = config::preset("plentiful");
    CHECK_NOTHROW(config::apply(config::read_file(entry.path()), c));
    ++seen;
  }
  CHECK(seen >= 2);
  auto full = config::preset("plentiful");
  config::apply(config::read_file(std::filesystem::path(FM_CONFIG_DIR) / "plentiful.ini"), full);
  CHECK(config::config_hash(full) == config::config_hash(config::preset("plentiful")));
}
