#include <doctest.h>

#include <cmath>

#include "oransim/env.hpp"
#include "oransim/sac.hpp"
#include "test_util.hpp"

using namespace oransim;

namespace {

std::vector<std::vector<int>> equal_split(const EnvCore& env) {
  const int nd = static_cast<int>(env.dus().size());
  const int ns = static_cast<int>(env.slices().size());
  const int K = env.channel().num_rbs;
  return std::vector<std::vector<int>>(nd, std::vector<int>(ns, K / ns));
}

}  // namespace

TEST_CASE("path loss follows d^-eta with a 1 m clamp") {
  DuNode du{0, {0.0, 0.0}, 1.0};
  CHECK(path_loss_gain({1.0, 0.0}, du, 3.0) == doctest::Approx(1.0));
  CHECK(path_loss_gain({10.0, 0.0}, du, 3.0) == doctest::Approx(1e-3));
  // clamp: anything closer than 1 m behaves like 1 m
  CHECK(path_loss_gain({0.01, 0.0}, du, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("channel gain is path loss times a unit-mean exponential, reproducibly") {
  DuNode du{0, {0.0, 0.0}, 1.0};
  RngStream a(42), b(42);
  const double g1 = channel_gain({10.0, 0.0}, du, 3.0, a);
  const double fade = b.exponential();
  CHECK(g1 == doctest::Approx(1e-3 * fade));
  RngStream c(42);
  CHECK(channel_gain({10.0, 0.0}, du, 3.0, c) == g1);
}

TEST_CASE("interference sums neighbor transmissions on the RB") {
  std::vector<DuNode> dus{{0, {0, 0}, 1.0}, {1, {100, 0}, 1.0}, {2, {200, 0}, 1.0}};
  FixedGains gains(1, 3, 4);
  gains.at(0, 1, 2) = 1e-3;
  gains.at(0, 2, 2) = 2e-3;

  SUBCASE("only the serving DU transmits") {
    std::vector<uint64_t> tx(4, 0);
    tx[2] = 0b001;
    CHECK(interference(0, 0, 2, dus, tx, gains) == 0.0);
  }
  SUBCASE("one neighbor") {
    std::vector<uint64_t> tx(4, 0);
    tx[2] = 0b011;
    CHECK(interference(0, 0, 2, dus, tx, gains) == doctest::Approx(1e-3));
  }
  SUBCASE("two neighbors add") {
    std::vector<uint64_t> tx(4, 0);
    tx[2] = 0b111;
    CHECK(interference(0, 0, 2, dus, tx, gains) == doctest::Approx(3e-3));
  }
}

TEST_CASE("user rate: empty allocation, unit SNR, and zero power") {
  std::vector<DuNode> dus{{0, {0, 0}, 1.0}};
  ChannelParams ch;
  ch.rb_bandwidth_hz = 200e3;
  ch.num_rbs = 4;
  ch.noise_var_w = 1.0;
  FixedGains gains(1, 1, 4, 1.0);  // p*g/sigma^2 = 1 on every RB
  std::vector<uint64_t> tx(4, 0b1);

  CHECK(user_rate(0, std::vector<int>{}, 0, dus, tx, gains, ch) == 0.0);

  const std::vector<int> one_rb{1};
  CHECK(user_rate(0, one_rb, 0, dus, tx, gains, ch) == doctest::Approx(200000.0));

  std::vector<DuNode> cold{{0, {0, 0}, 0.0}};
  const std::vector<int> all{0, 1, 2, 3};
  CHECK(user_rate(0, all, 0, cold, tx, gains, ch) == 0.0);
}

TEST_CASE("adding an RB never decreases the rate") {
  std::vector<DuNode> dus{{0, {0, 0}, 0.5}};
  ChannelParams ch;
  ch.num_rbs = 8;
  RngStream rng(9);
  FixedGains gains(1, 1, 8);
  for (int rb = 0; rb < 8; ++rb) gains.at(0, 0, rb) = rng.exponential() * 1e-6;
  std::vector<uint64_t> tx(8, 0b1);
  std::vector<int> rbs;
  double prev = 0.0;
  for (int rb = 0; rb < 8; ++rb) {
    rbs.push_back(rb);
    const double r = user_rate(0, rbs, 0, dus, tx, gains, ch);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("delay formula and its edge values") {
  SliceSpec s{0, "eMBB", 3.0, 0.15, 12000.0, 3e6};
  CHECK(user_delay(0.0, s, 1e6) == 0.0);
  CHECK(user_delay(1.0, s, 1.2e6) == doctest::Approx(0.01));
  CHECK(std::isinf(user_delay(1.0, s, 0.0)));
  // identity D*c = Lambda*Z whenever c > 0
  const double c = 3.7e5, lam = 2.5;
  CHECK(user_delay(lam, s, c) * c == doctest::Approx(lam * s.packet_len_bits));
}

TEST_CASE("slice QoS is the demand-capped mean in Mbps") {
  SliceSpec s{0, "eMBB", 0.75, 0.0375, 12000.0, 3e6};
  SUBCASE("singleton") {
    const std::vector<double> rates{3e6}, demands{1e9};
    CHECK(slice_qos_mbps(rates, demands, s) == doctest::Approx(3.0));
  }
  SUBCASE("mean of {1,2,3} Mbps") {
    const std::vector<double> rates{1e6, 2e6, 3e6}, demands{1e9, 1e9, 1e9};
    CHECK(slice_qos_mbps(rates, demands, s) == doctest::Approx(2.0));
  }
  SUBCASE("empty slice reports the target itself") {
    CHECK(slice_qos_mbps({}, {}, s) == doctest::Approx(0.75));
  }
  SUBCASE("demand caps the usable rate") {
    const std::vector<double> rates{10e6}, demands{2e6};
    CHECK(slice_qos_mbps(rates, demands, s) == doctest::Approx(2.0));
  }
}

TEST_CASE("env step enforces the RB budget and realizes a valid schedule") {
  SimConfig cfg = testutil::tiny_config();
  EnvCore env(cfg, 1);

  SUBCASE("valid slice split is accepted and invariants hold") {
    const QosReport rep = env.step(equal_split(env), sac::schedule_users);
    CHECK(rep.qos_mbps.size() == static_cast<size_t>(cfg.num_dus));
    for (const auto& du_q : rep.qos_mbps)
      for (double q : du_q) CHECK(q >= 0.0);
    for (double r : rep.user_rate_bps) CHECK(r >= 0.0);
    // the realized allocation passes the full invariant check
    env.validate_allocation(env.last_allocation());
  }
  SUBCASE("sum over slices above K is rejected") {
    auto counts = equal_split(env);
    counts[0] = {5, 5, 3};  // 13 > K=12
    CHECK_THROWS_AS(env.step(counts, sac::schedule_users), ConstraintViolation);
  }
  SUBCASE("negative counts are rejected") {
    auto counts = equal_split(env);
    counts[0] = {-1, 5, 3};
    CHECK_THROWS_AS(env.step(counts, sac::schedule_users), ConstraintViolation);
  }
}

TEST_CASE("validate_allocation flags user-level violations") {
  SimConfig cfg = testutil::tiny_config();
  EnvCore env(cfg, 1);
  env.step(equal_split(env), sac::schedule_users);

  Allocation a = env.last_allocation();
  SUBCASE("the realized schedule is clean") { env.validate_allocation(a); }
  SUBCASE("RB outside the slice partition") {
    // find a scheduled user and push one of its RBs beyond the last slice end
    for (size_t u = 0; u < a.user_rbs.size(); ++u) {
      if (!a.user_rbs[u].empty()) {
        a.user_rbs[u][0] = cfg.channel.num_rbs - 1;  // beyond 3*4=12? index 11 is slice 2
        const auto& ue = env.state().ues[u];
        if (ue.slice == 2) a.user_rbs[u][0] = 0;  // then break it the other way
        CHECK_THROWS_AS(env.validate_allocation(a), ConstraintViolation);
        break;
      }
    }
  }
  SUBCASE("double-booked RB") {
    int first = -1;
    for (size_t u = 0; u < a.user_rbs.size(); ++u) {
      if (a.user_rbs[u].empty()) continue;
      if (first < 0) {
        first = static_cast<int>(u);
        continue;
      }
      const auto& ue1 = env.state().ues[first];
      const auto& ue2 = env.state().ues[u];
      if (ue1.slice == ue2.slice &&
          env.state().serving_du[first] == env.state().serving_du[u]) {
        a.user_rbs[u] = a.user_rbs[first];
        CHECK_THROWS_AS(env.validate_allocation(a), ConstraintViolation);
        return;
      }
    }
  }
}

TEST_CASE("seeded env runs are bitwise identical") {
  SimConfig cfg = testutil::tiny_config();
  EnvCore env1(cfg, 33), env2(cfg, 33);
  for (int t = 0; t < 10; ++t) {
    const QosReport r1 = env1.step(equal_split(env1), sac::schedule_users);
    const QosReport r2 = env2.step(equal_split(env2), sac::schedule_users);
    REQUIRE(r1.user_rate_bps == r2.user_rate_bps);
    REQUIRE(r1.qos_mbps == r2.qos_mbps);
    REQUIRE(r1.violation == r2.violation);
  }
}

TEST_CASE("per-DU aggregates equal the sum over associated users") {
  SimConfig cfg = testutil::tiny_config();
  EnvCore env(cfg, 5);
  for (int t = 0; t < 30; ++t) {
    env.advance_world();
    const auto& st = env.state();
    std::vector<std::vector<int>> n(cfg.num_dus, std::vector<int>(cfg.num_slices(), 0));
    std::vector<std::vector<double>> load(cfg.num_dus,
                                          std::vector<double>(cfg.num_slices(), 0.0));
    for (const auto& ue : st.ues) {
      n[st.serving_du[ue.id]][ue.slice] += 1;
      load[st.serving_du[ue.id]][ue.slice] += st.demand.user_demand_bits[ue.id];
    }
    REQUIRE(n == st.demand.du_slice_n);
    REQUIRE(load == st.demand.du_slice_load);
    for (const auto& ue : st.ues) REQUIRE(cfg.area.contains(ue.position));
  }
}

TEST_CASE("slice memberships never change over an episode") {
  SimConfig cfg = testutil::tiny_config();
  EnvCore env(cfg, 8);
  std::vector<int> slices0;
  for (const auto& ue : env.state().ues) slices0.push_back(ue.slice);
  for (int t = 0; t < 20; ++t) env.advance_world();
  std::vector<int> slices1;
  for (const auto& ue : env.state().ues) slices1.push_back(ue.slice);
  CHECK(slices0 == slices1);
}
