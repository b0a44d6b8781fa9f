#include "oransim/env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace oransim {

double path_loss_gain(const Vec2& ue_pos, const DuNode& du, double path_loss_exp) {
  const double d = std::max(distance(ue_pos, du.position), 1.0);
  return std::pow(d, -path_loss_exp);
}

double channel_gain(const Vec2& ue_pos, const DuNode& du, double path_loss_exp,
                    RngStream& rng) {
  return path_loss_gain(ue_pos, du, path_loss_exp) * rng.exponential();
}

FixedGains::FixedGains(int num_ues, int num_dus, int num_rbs, double value)
    : num_dus_(num_dus),
      num_rbs_(num_rbs),
      g_(static_cast<size_t>(num_ues) * num_dus * num_rbs, value) {}

double& FixedGains::at(int ue, int du, int rb) {
  return g_[(static_cast<size_t>(ue) * num_dus_ + du) * num_rbs_ + rb];
}

double FixedGains::gain(int ue, int du, int rb) const {
  return g_[(static_cast<size_t>(ue) * num_dus_ + du) * num_rbs_ + rb];
}

KeyedFading::KeyedFading(std::span<const Vec2> ue_pos, std::span<const DuNode> dus,
                         double path_loss_exp, KeyedRng rng, int step)
    : ue_pos_(ue_pos), dus_(dus), eta_(path_loss_exp), rng_(rng), step_(step) {}

double KeyedFading::gain(int ue, int du, int rb) const {
  const double fade = rng_.exponential(static_cast<uint64_t>(step_), static_cast<uint64_t>(ue),
                                       static_cast<uint64_t>(du), static_cast<uint64_t>(rb));
  return path_loss_gain(ue_pos_[ue], dus_[du], eta_) * fade;
}

std::vector<uint64_t> build_transmit_map(const Allocation& alloc,
                                         std::span<const int> serving_du,
                                         int num_rbs) {
  std::vector<uint64_t> tx(static_cast<size_t>(num_rbs), 0);
  for (size_t ue = 0; ue < alloc.user_rbs.size(); ++ue) {
    const int du = serving_du[ue];
    for (int rb : alloc.user_rbs[ue]) tx[rb] |= (1ULL << du);
  }
  return tx;
}

double interference(int ue, int serving_du, int rb, std::span<const DuNode> dus,
                    std::span<const uint64_t> tx_map, const GainSource& gains) {
  uint64_t mask = tx_map[rb] & ~(1ULL << serving_du);
  double sum = 0.0;
  while (mask) {
    const int du = std::countr_zero(mask);
    mask &= mask - 1;
    sum += dus[du].tx_power_per_rb_w * gains.gain(ue, du, rb);
  }
  return sum;
}

double user_rate(int ue, std::span<const int> rbs, int serving_du,
                 std::span<const DuNode> dus, std::span<const uint64_t> tx_map,
                 const GainSource& gains, const ChannelParams& ch) {
  const double p = dus[serving_du].tx_power_per_rb_w;
  double sum = 0.0;
  for (int rb : rbs) {
    const double s = p * gains.gain(ue, serving_du, rb);
    const double i = interference(ue, serving_du, rb, dus, tx_map, gains);
    sum += std::log2(1.0 + s / (i + ch.noise_var_w));
  }
  return ch.rb_bandwidth_hz * sum;
}

double user_delay(double demand_bits, const SliceSpec& slice, double rate_bps) {
  if (demand_bits <= 0.0) return 0.0;
  if (rate_bps <= 0.0) return kInfiniteDelay;
  return demand_bits * slice.packet_len_bits / rate_bps;
}

double slice_qos_mbps(std::span<const double> member_rates_bps,
                      std::span<const double> member_demands_bps,
                      const SliceSpec& slice) {
  if (member_rates_bps.empty()) return slice.qos_target_mbps;
  double sum = 0.0;
  for (size_t i = 0; i < member_rates_bps.size(); ++i)
    sum += std::min(member_rates_bps[i], member_demands_bps[i]);
  return sum / static_cast<double>(member_rates_bps.size()) / 1e6;
}

EnvCore::EnvCore(const SimConfig& cfg, uint64_t seed)
    : slices_(cfg.slices),
      dus_(cfg.du_nodes()),
      channel_(cfg.channel),
      area_(cfg.area),
      slot_s_(cfg.slot_s),
      freeze_mobility_(cfg.freeze_mobility),
      freeze_traffic_(cfg.freeze_traffic),
      freeze_channel_(cfg.freeze_channel),
      rng_(seed),
      fading_rng_(derive_seed(seed, 0x666164696e67ULL)) {
  state_.ues.reserve(cfg.num_users());
  int id = 0;
  for (size_t l = 0; l < slices_.size(); ++l) {
    for (int n = 0; n < cfg.slice_populations[l]; ++n) {
      UeState ue;
      ue.id = id++;
      ue.slice = static_cast<int>(l);
      state_.ues.push_back(ue);
    }
  }
  reset();
}

void EnvCore::reset() {
  state_.step = 0;
  for (auto& ue : state_.ues) {
    ue.position = {rng_.uniform(area_.x0, area_.x1), rng_.uniform(area_.y0, area_.y1)};
    ue.speed_mps = draw_speed(rng_);
    ue.heading_rad = rng_.uniform(0.0, 2.0 * M_PI);
    ue.mode = static_cast<uint8_t>(rng_.uniform_int(kNumTrafficModes));
  }
  state_.demand.user_demand_bits.assign(state_.ues.size(), 0.0);
  for (const auto& ue : state_.ues)
    state_.demand.user_demand_bits[ue.id] = demand_bits(ue.mode, slices_[ue.slice], slot_s_);
  state_.serving_du.assign(state_.ues.size(), 0);
  associate_and_aggregate();
  // neutral starting report: every slice at its target
  const int nd = static_cast<int>(dus_.size());
  const int ns = static_cast<int>(slices_.size());
  state_.last_qos.qos_mbps.assign(nd, std::vector<double>(ns, 0.0));
  state_.last_qos.violation.assign(nd, std::vector<double>(ns, 0.0));
  state_.last_qos.violated.assign(nd, std::vector<uint8_t>(ns, 0));
  for (int d = 0; d < nd; ++d)
    for (int l = 0; l < ns; ++l) state_.last_qos.qos_mbps[d][l] = slices_[l].qos_target_mbps;
  state_.last_qos.user_rate_bps.assign(state_.ues.size(), 0.0);
  state_.last_qos.user_delay_s.assign(state_.ues.size(), 0.0);
}

void EnvCore::associate_and_aggregate() {
  const int nd = static_cast<int>(dus_.size());
  const int ns = static_cast<int>(slices_.size());
  state_.demand.du_slice_n.assign(nd, std::vector<int>(ns, 0));
  state_.demand.du_slice_load.assign(nd, std::vector<double>(ns, 0.0));
  for (const auto& ue : state_.ues) {
    int best = 0;
    double best_d = distance(ue.position, dus_[0].position);
    for (int d = 1; d < nd; ++d) {
      const double dist = distance(ue.position, dus_[d].position);
      if (dist < best_d) {
        best_d = dist;
        best = d;
      }
    }
    state_.serving_du[ue.id] = best;
    state_.demand.du_slice_n[best][ue.slice] += 1;
    state_.demand.du_slice_load[best][ue.slice] += state_.demand.user_demand_bits[ue.id];
  }
}

std::vector<int> EnvCore::active_members(int du, int slice) const {
  std::vector<int> out;
  for (const auto& ue : state_.ues) {
    if (state_.serving_du[ue.id] == du && ue.slice == slice &&
        state_.demand.user_demand_bits[ue.id] > 0.0)
      out.push_back(ue.id);
  }
  return out;
}

void EnvCore::validate_allocation(const Allocation& alloc) const {
  const int nd = static_cast<int>(dus_.size());
  const int ns = static_cast<int>(slices_.size());
  const int K = channel_.num_rbs;
  if (static_cast<int>(alloc.slice_rbs.size()) != nd)
    throw ConstraintViolation("allocation: slice_rbs DU count mismatch");
  if (alloc.user_rbs.size() != state_.ues.size())
    throw ConstraintViolation("allocation: user_rbs size mismatch");
  // per-DU slice partitions: [start_l, start_l + count_l)
  std::vector<std::vector<int>> starts(nd, std::vector<int>(ns + 1, 0));
  for (int d = 0; d < nd; ++d) {
    if (static_cast<int>(alloc.slice_rbs[d].size()) != ns)
      throw ConstraintViolation("allocation: slice count mismatch");
    int total = 0;
    for (int l = 0; l < ns; ++l) {
      if (alloc.slice_rbs[d][l] < 0) throw ConstraintViolation("allocation: negative RB count");
      starts[d][l] = total;
      total += alloc.slice_rbs[d][l];
    }
    starts[d][ns] = total;
    if (total > K) throw ConstraintViolation("allocation: slice RBs exceed K at DU " +
                                             std::to_string(d));
  }
  std::vector<std::vector<uint8_t>> taken(nd, std::vector<uint8_t>(K, 0));
  for (const auto& ue : state_.ues) {
    const int du = state_.serving_du[ue.id];
    const int lo = starts[du][ue.slice], hi = starts[du][ue.slice + 1];
    for (int rb : alloc.user_rbs[ue.id]) {
      if (rb < lo || rb >= hi)
        throw ConstraintViolation("allocation: RB outside slice partition for user " +
                                  std::to_string(ue.id));
      if (taken[du][rb])
        throw ConstraintViolation("allocation: RB double-booked at DU " + std::to_string(du));
      taken[du][rb] = 1;
    }
  }
}

void EnvCore::advance_kinematics() {
  if (!freeze_mobility_) {
    for (auto& ue : state_.ues) ue = move_ue(ue, slot_s_, area_, rng_);
  }
  if (!freeze_traffic_) {
    for (auto& ue : state_.ues) ue.mode = step_traffic_mode(ue.mode, rng_);
  }
  for (const auto& ue : state_.ues)
    state_.demand.user_demand_bits[ue.id] = demand_bits(ue.mode, slices_[ue.slice], slot_s_);
}

void EnvCore::advance_world() {
  advance_kinematics();
  associate_and_aggregate();
  ++state_.step;
}

QosReport EnvCore::step(const std::vector<std::vector<int>>& slice_rbs,
                        const UserScheduler& scheduler) {
  const int nd = static_cast<int>(dus_.size());
  const int ns = static_cast<int>(slices_.size());
  const int K = channel_.num_rbs;
  if (static_cast<int>(slice_rbs.size()) != nd)
    throw ConstraintViolation("allocation: slice_rbs DU count mismatch");
  for (int d = 0; d < nd; ++d) {
    if (static_cast<int>(slice_rbs[d].size()) != ns)
      throw ConstraintViolation("allocation: slice count mismatch");
    int total = 0;
    for (int l = 0; l < ns; ++l) {
      if (slice_rbs[d][l] < 0) throw ConstraintViolation("allocation: negative RB count");
      total += slice_rbs[d][l];
    }
    if (total > K)
      throw ConstraintViolation("allocation: slice RBs exceed K at DU " + std::to_string(d));
  }

  // the committed slice split now meets whoever is actually in the cell
  advance_kinematics();
  associate_and_aggregate();

  last_alloc_.slice_rbs = slice_rbs;
  last_alloc_.user_rbs.assign(state_.ues.size(), {});
  for (int d = 0; d < nd; ++d) {
    std::vector<std::vector<int>> members(ns);
    for (int l = 0; l < ns; ++l) members[l] = active_members(d, l);
    scheduler(slice_rbs[d], members, &last_alloc_.user_rbs);
  }

  std::vector<Vec2> pos(state_.ues.size());
  for (const auto& ue : state_.ues) pos[ue.id] = ue.position;
  const int fading_step = freeze_channel_ ? 0 : state_.step;
  KeyedFading gains(pos, dus_, channel_.path_loss_exp, fading_rng_, fading_step);
  const auto tx_map = build_transmit_map(last_alloc_, state_.serving_du, channel_.num_rbs);

  QosReport report;
  report.user_rate_bps.assign(state_.ues.size(), 0.0);
  report.user_delay_s.assign(state_.ues.size(), 0.0);
  for (const auto& ue : state_.ues) {
    const double c = user_rate(ue.id, last_alloc_.user_rbs[ue.id], state_.serving_du[ue.id],
                               dus_, tx_map, gains, channel_);
    report.user_rate_bps[ue.id] = c;
    report.user_delay_s[ue.id] =
        user_delay(state_.demand.user_demand_bits[ue.id], slices_[ue.slice], c);
  }

  report.qos_mbps.assign(nd, std::vector<double>(ns, 0.0));
  report.violation.assign(nd, std::vector<double>(ns, 0.0));
  report.violated.assign(nd, std::vector<uint8_t>(ns, 0));
  for (int d = 0; d < nd; ++d) {
    for (int l = 0; l < ns; ++l) {
      std::vector<double> rates, demands;
      for (const auto& ue : state_.ues) {
        if (state_.serving_du[ue.id] != d || ue.slice != l) continue;
        const double dem = state_.demand.user_demand_bits[ue.id];
        if (dem <= 0.0) continue;
        rates.push_back(report.user_rate_bps[ue.id]);
        demands.push_back(dem / slot_s_);
      }
      const double q = slice_qos_mbps(rates, demands, slices_[l]);
      report.qos_mbps[d][l] = q;
      report.violation[d][l] = std::abs(q - slices_[l].qos_target_mbps);
      report.violated[d][l] = report.violation[d][l] > slices_[l].qos_margin_mbps ? 1 : 0;
    }
  }

  state_.last_qos = report;
  ++state_.step;
  return report;
}

}  // namespace oransim
