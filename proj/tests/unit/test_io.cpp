#include <doctest.h>

#include <memory>
#include <string>

#include "core/error.hpp"
#include "core/io.hpp"

using namespace rovi;

namespace {
const std::string data_dir = ROVI_TEST_DATA_DIR;
}

TEST_CASE("read_level_table") {
  const auto levels = read_level_table(data_dir + "/levels_small.csv");
  REQUIRE(levels.size() == 6);
  CHECK(levels[0].vib == "g");
  CHECK(levels[2].energy_cm1 == 7.1);
  CHECK(levels[1].parity == Parity::Ortho);

  // the parsed table builds a valid basis
  const LevelBasis basis(levels);
  CHECK(basis.j_max("e") == 2);

  SUBCASE("gaps are rejected at basis construction") {
    const auto gappy = read_level_table(data_dir + "/levels_gap.csv");
    CHECK_THROWS_WITH_AS(LevelBasis{gappy}, doctest::Contains("gap"), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_level_table(data_dir + "/nope.csv"), Error);
    try {
      read_level_table(data_dir + "/nope.csv");
    } catch (const Error& e) {
      CHECK(e.code() == Error::Code::Io);
    }
  }
}

TEST_CASE("read_line_list") {
  auto basis = std::make_shared<LevelBasis>(read_level_table(data_dir + "/levels_small.csv"));
  const auto list = read_line_list(data_dir + "/lines_small.csv", basis);
  REQUIRE(list.lines.size() == 2);
  CHECK(list.lines[0].branch == Branch::R);
  CHECK(list.lines[0].m_abs == 1);
  CHECK(list.lines[1].branch == Branch::P);
  CHECK(list.lines[1].m_abs == 2);
  CHECK(list.lines[0].nu0_cm1 == 102.5);
}

TEST_CASE("read_observations") {
  const auto obs = read_observations(data_dir + "/obs_small.csv");
  REQUIRE(obs.size() == 4);
  CHECK(obs[0].sigma == 0.004);
  // empty sigma field applies the 5% rule
  CHECK(obs[1].sigma == doctest::Approx(0.05 * 0.108).epsilon(1e-15));
  CHECK(obs[3].m_abs == 3);

  SUBCASE("tag column") {
    const auto tagged = read_observations(data_dir + "/obs_tagged.csv");
    REQUIRE(tagged.size() == 3);
    CHECK(tagged[0].source == "G1");
    CHECK(tagged[1].source == "G2");
    CHECK(tagged[2].sigma == doctest::Approx(0.05 * 0.108).epsilon(1e-15));
  }
}

TEST_CASE("read_channel_config") {
  const auto channels = read_channel_config(data_dir + "/channels_good.cfg");
  REQUIRE(channels.size() == 2);
  CHECK(channels.channels()[0].name == "R1");
  CHECK(channels.channels()[0].weight == 0.1);
  CHECK(channels.channels()[1].params.k0 == 0.03);

  SUBCASE("unknown key carries its line number") {
    try {
      read_channel_config(data_dir + "/channels_badkey.cfg");
      FAIL("expected config error");
    } catch (const Error& e) {
      CHECK(e.code() == Error::Code::Config);
      CHECK(std::string(e.what()).find(":7:") != std::string::npos);
      CHECK(std::string(e.what()).find("wieght") != std::string::npos);
    }
  }
  SUBCASE("unknown law") {
    CHECK_THROWS_WITH_AS(read_channel_config(data_dir + "/channels_badlaw.cfg"),
                         doctest::Contains("law"), Error);
  }
  SUBCASE("weights that sum wrong are rejected with the source vib named") {
    CHECK_THROWS_WITH_AS(read_channel_config(data_dir + "/channels_badweight.cfg"),
                         doctest::Contains("G2"), Error);
  }
}
