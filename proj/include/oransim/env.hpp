#pragma once

#include <functional>
#include <span>
#include <vector>

#include "oransim/config.hpp"
#include "oransim/mobility.hpp"
#include "oransim/rng.hpp"
#include "oransim/types.hpp"

namespace oransim {

// d^-eta with the UE-DU distance clamped to 1 m.
double path_loss_gain(const Vec2& ue_pos, const DuNode& du, double path_loss_exp);

// Path-loss times Rayleigh fading power, one draw from the stream.
double channel_gain(const Vec2& ue_pos, const DuNode& du, double path_loss_exp,
                    RngStream& rng);

// Link gain lookup used by the rate/interference computations. Implementations
// must be pure per (ue, du, rb) within one slot.
class GainSource {
 public:
  virtual ~GainSource() = default;
  virtual double gain(int ue, int du, int rb) const = 0;
};

// Dense gain table, mainly for tests and hand-built scenarios.
class FixedGains : public GainSource {
 public:
  FixedGains(int num_ues, int num_dus, int num_rbs, double value = 0.0);
  double& at(int ue, int du, int rb);
  double gain(int ue, int du, int rb) const override;

 private:
  int num_dus_, num_rbs_;
  std::vector<double> g_;
};

// d^-eta * |h|^2 with |h|^2 a unit-mean exponential keyed by
// (seed, step, ue, du, rb): order-independent and storage-free, so fading is
// identical no matter which code path touches a link first.
class KeyedFading : public GainSource {
 public:
  KeyedFading(std::span<const Vec2> ue_pos, std::span<const DuNode> dus,
              double path_loss_exp, KeyedRng rng, int step);
  double gain(int ue, int du, int rb) const override;

 private:
  std::span<const Vec2> ue_pos_;
  std::span<const DuNode> dus_;
  double eta_;
  KeyedRng rng_;
  int step_;
};

// Bitmask per RB index of DUs transmitting on it (some served user holds it).
std::vector<uint64_t> build_transmit_map(const Allocation& alloc,
                                         std::span<const int> serving_du,
                                         int num_rbs);

// Sum of p_u * gain over other DUs transmitting on this RB.
double interference(int ue, int serving_du, int rb, std::span<const DuNode> dus,
                    std::span<const uint64_t> tx_map, const GainSource& gains);

// Shannon-sum rate over the user's RBs, log base 2.
double user_rate(int ue, std::span<const int> rbs, int serving_du,
                 std::span<const DuNode> dus, std::span<const uint64_t> tx_map,
                 const GainSource& gains, const ChannelParams& ch);

// Lambda * Z_l / c; +inf when starved (c = 0, Lambda > 0), 0 when idle.
double user_delay(double demand_bits, const SliceSpec& slice, double rate_bps);

// Demand-capped mean throughput of the member users, in Mbps. An empty member
// set reports the target itself (no violation).
double slice_qos_mbps(std::span<const double> member_rates_bps,
                      std::span<const double> member_demands_bps,
                      const SliceSpec& slice);

struct EnvState {
  int step = 0;
  std::vector<UeState> ues;
  std::vector<int> serving_du;   // nearest-DU association, refreshed each slot
  DemandVector demand;
  QosReport last_qos;
};

// Fills user_rbs for one DU given its slice RB counts and the active members
// of each slice; RB indices are offsets into the DU's K RBs.
using UserScheduler =
    std::function<void(std::span<const int> slice_counts,
                       const std::vector<std::vector<int>>& members_per_slice,
                       std::vector<std::vector<int>>* user_rbs)>;

// One full-network instance: owns UE kinematics, traffic modes, association,
// fading and QoS accounting. Single-threaded; run one instance per actor for
// parallel rollouts.
class EnvCore {
 public:
  EnvCore(const SimConfig& cfg, uint64_t seed);

  void reset();

  // One slot under the given slice partitions: the world advances first
  // (movement, modes, handover), then the scheduler distributes each DU's
  // partition over the users actually present, and QoS is scored for them.
  // The slice split is committed before the slot, so it leans on whatever
  // load estimate produced it; the per-user schedule is in-slot.
  // Throws ConstraintViolation when a DU's counts exceed K or are negative.
  QosReport step(const std::vector<std::vector<int>>& slice_rbs,
                 const UserScheduler& scheduler);

  // Advances mobility, traffic and association only; no radio accounting.
  // Used to roll load traces for predictor training. Consumes the same
  // random draws per slot as step().
  void advance_world();

  const EnvState& state() const { return state_; }
  const std::vector<DuNode>& dus() const { return dus_; }
  const std::vector<SliceSpec>& slices() const { return slices_; }
  const ChannelParams& channel() const { return channel_; }
  int num_users() const { return static_cast<int>(state_.ues.size()); }

  // the realized allocation of the latest step, user_rbs included
  const Allocation& last_allocation() const { return last_alloc_; }

  // ids of users with nonzero demand in (du, slice), ascending
  std::vector<int> active_members(int du, int slice) const;

  // Full Allocation invariant check against the current association: RB
  // budget, single ownership, per-slice partition containment.
  void validate_allocation(const Allocation& alloc) const;

 private:
  void advance_kinematics();
  void associate_and_aggregate();

  std::vector<SliceSpec> slices_;
  std::vector<DuNode> dus_;
  ChannelParams channel_;
  Rect area_;
  double slot_s_;
  bool freeze_mobility_, freeze_traffic_, freeze_channel_;
  RngStream rng_;
  KeyedRng fading_rng_;
  EnvState state_;
  Allocation last_alloc_;
};

}  // namespace oransim
