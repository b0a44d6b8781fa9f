#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oransim/common.hpp"

namespace oransim {

// One service class (eMBB / MTC / URLLC).
struct SliceSpec {
  int id = 0;
  std::string name;
  double qos_target_mbps = 0.0;   // lambda_l, per-user throughput target
  double qos_margin_mbps = 0.0;   // epsilon_l
  double packet_len_bits = 0.0;   // Z_l
  double mean_demand_bps = 0.0;   // slice traffic average
};

struct DuNode {
  int id = 0;
  Vec2 position;
  double tx_power_per_rb_w = 0.0;  // p_u
};

struct ChannelParams {
  double rb_bandwidth_hz = 200e3;  // B
  int num_rbs = 100;               // K
  double path_loss_exp = 3.0;      // eta
  double noise_var_w = 1e-9;       // sigma^2
  uint64_t rng_seed = 0;
};

// Slice-level RB counts per DU plus the per-user RB assignment derived from
// them. Slice partitions are contiguous: at a DU, slice l owns RB indices
// [prefix(l), prefix(l) + slice_rbs[du][l]).
struct Allocation {
  std::vector<std::vector<int>> slice_rbs;  // [du][slice]
  std::vector<std::vector<int>> user_rbs;   // [ue] -> RB indices at serving DU
};

struct TrafficMode {
  enum Kind : uint8_t { kIdle = 0, kLow = 1, kMid = 2, kHigh = 3 };
};
constexpr int kNumTrafficModes = 4;

struct UeState {
  int id = 0;
  int slice = 0;
  Vec2 position;
  double speed_mps = 0.0;    // in [10, 20]
  double heading_rad = 0.0;  // current travel direction
  uint8_t mode = TrafficMode::kIdle;
};

// Per-step QoS accounting. Slice QoS is tracked per DU because each
// distributed actor is rewarded on its own DU.
struct QosReport {
  std::vector<std::vector<double>> qos_mbps;      // [du][slice] Q_l
  std::vector<std::vector<double>> violation;     // [du][slice] |Q_l - lambda_l|
  std::vector<std::vector<uint8_t>> violated;     // [du][slice] |Q_l - lambda_l| > eps_l
  std::vector<double> user_rate_bps;              // [ue] c_{n,l}
  std::vector<double> user_delay_s;               // [ue] D_{n,l}; may be +inf
};

// Per-user demands and their per-DU per-slice aggregates.
struct DemandVector {
  std::vector<double> user_demand_bits;        // [ue] Lambda_{n,l}, bits this slot
  std::vector<std::vector<int>> du_slice_n;    // [du][slice] N_l, associated users
  std::vector<std::vector<double>> du_slice_load;  // [du][slice] Lambda_l, bits
};

}  // namespace oransim
