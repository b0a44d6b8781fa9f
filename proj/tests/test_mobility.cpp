#include <doctest.h>

#include <cmath>
#include <set>

#include "oransim/mobility.hpp"

using namespace oransim;

namespace {
const Rect kArea{0.0, 0.0, 3000.0, 2000.0};
}

TEST_CASE("straight step advances exactly speed*dt") {
  UeState ue;
  ue.position = {100.0, 100.0};
  ue.speed_mps = 10.0;
  ue.heading_rad = 0.0;
  RngStream rng(1);
  const UeState out = move_ue(ue, 1.0, kArea, rng);
  CHECK(out.position.x == doctest::Approx(110.0));
  CHECK(out.position.y == doctest::Approx(100.0));
}

TEST_CASE("boundary crossings reflect back inside") {
  UeState ue;
  ue.position = {2995.0, 1000.0};
  ue.speed_mps = 20.0;
  ue.heading_rad = 0.0;  // heading straight at the x1 wall
  RngStream rng(2);
  const UeState out = move_ue(ue, 1.0, kArea, rng);
  CHECK(out.position.x == doctest::Approx(2985.0));  // 2995+20=3015 -> 2*3000-3015
  CHECK(kArea.contains(out.position));
}

TEST_CASE("long roll never leaves the area and keeps speeds in range") {
  UeState ue;
  ue.position = {1500.0, 1000.0};
  ue.speed_mps = 15.0;
  ue.heading_rad = 0.3;
  RngStream rng(3);
  for (int t = 0; t < 20000; ++t) {
    ue = move_ue(ue, 1.0, kArea, rng);
    REQUIRE(kArea.contains(ue.position));
    REQUIRE(ue.speed_mps >= 10.0);
    REQUIRE(ue.speed_mps <= 20.0);
  }
}

TEST_CASE("heading offsets take exactly the seven published values") {
  RngStream rng(4);
  std::set<double> seen;
  for (int i = 0; i < 100000; ++i) seen.insert(draw_heading_offset(rng));
  CHECK(seen.size() == 7);
  for (double v : seen) {
    const bool known = std::any_of(kHeadingOffsets.begin(), kHeadingOffsets.end(),
                                   [&](double o) { return o == v; });
    CHECK(known);
  }
  CHECK(*seen.begin() == doctest::Approx(-M_PI / 3));
  CHECK(*seen.rbegin() == doctest::Approx(M_PI / 3));
}

TEST_CASE("traffic mode stays put when the switch roll fails") {
  // seed 5's first uniform is >= 0.01, so no switch can occur
  RngStream probe(5);
  REQUIRE(probe.uniform() >= kModeSwitchProb);
  RngStream rng(5);
  CHECK(step_traffic_mode(TrafficMode::kMid, rng) == TrafficMode::kMid);
}

TEST_CASE("switches always land in a different mode") {
  RngStream rng(6);
  uint8_t mode = TrafficMode::kIdle;
  int switches = 0;
  for (int t = 0; t < 200000; ++t) {
    const uint8_t next = step_traffic_mode(mode, rng);
    if (next != mode) ++switches;
    mode = next;
    REQUIRE(mode < kNumTrafficModes);
  }
  CHECK(switches > 0);
}

TEST_CASE("empirical switch rate tracks the 0.01 design point") {
  RngStream rng(7);
  uint8_t mode = TrafficMode::kLow;
  int switches = 0;
  const int n = 1000000;
  for (int t = 0; t < n; ++t) {
    const uint8_t next = step_traffic_mode(mode, rng);
    if (next != mode) ++switches;
    mode = next;
  }
  const double rate = static_cast<double>(switches) / n;
  CHECK(rate == doctest::Approx(0.01).epsilon(0.1));
  CHECK(std::abs(rate - 0.01) < 0.001);
}

TEST_CASE("demand follows the mode multipliers") {
  SliceSpec embb{0, "eMBB", 3.0, 0.15, 12000.0, 3e6};
  CHECK(demand_bits(TrafficMode::kIdle, embb, 1.0) == 0.0);
  CHECK(demand_bits(TrafficMode::kMid, embb, 1.0) == doctest::Approx(3e6));
  const double high = demand_bits(TrafficMode::kHigh, embb, 1.0);
  const double low = demand_bits(TrafficMode::kLow, embb, 1.0);
  CHECK(high == doctest::Approx(3.0 * low));
}
