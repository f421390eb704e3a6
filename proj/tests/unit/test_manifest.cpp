#include <doctest.h>

#include <filesystem>

#include "fm/config.hpp"
#include "fm/error.hpp"
#include "fm/manifest.hpp"

using namespace fm;

TEST_CASE("manifest round trip") {
  auto c = config::preset("scarce");
  c.trials = 3;
  c.seed = 0xfedcba9876543210ULL;
  auto m = manifest::make(c);
  CHECK(m.config_hash == config::config_hash(c));
  CHECK(m.config_text == config::canonical_text(c));
  REQUIRE(m.trials.size() == 3);
  CHECK(m.trials[1].buyers == derive_seed(c.seed, 1, sim::kEnvironmentAgent, StreamTag::buyers));
  CHECK(m.trials[0].buyers != m.trials[1].buyers);
  CHECK(m.started.size() == 20);  // YYYY-MM-DDTHH:MM:SSZ
  m.outputs = {"summary.csv", "trial_0/episodes.csv"};
  m.finished = manifest::utc_now();

  const auto path = std::filesystem::temp_directory_path() / "fm_manifest_test.json";
  manifest::write(path, m);
  const auto back = manifest::read(path);
  CHECK(back.master_seed == m.master_seed);
  CHECK(back.config_hash == m.config_hash);
  CHECK(back.config_text == m.config_text);
  CHECK(back.trials[2].obfuscation == m.trials[2].obfuscation);
  CHECK(back.outputs == m.outputs);
  CHECK(back.finished == m.finished);
  CHECK(back.schema_version == 1);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(manifest::read(path), IoError);
}
