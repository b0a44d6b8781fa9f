#include "oransim/mobility.hpp"

#include <cmath>

namespace oransim {

double draw_heading_offset(RngStream& rng) {
  return kHeadingOffsets[rng.uniform_int(kHeadingOffsets.size())];
}

double draw_speed(RngStream& rng) { return rng.uniform(10.0, 20.0); }

namespace {

// Reflects p into [lo, hi], mirroring the associated direction cosine.
void reflect_axis(double& p, double& dir_cos, double lo, double hi) {
  // at most a few bounces per step given speed <= 20 m/s
  while (p < lo || p > hi) {
    if (p < lo) {
      p = 2.0 * lo - p;
      dir_cos = -dir_cos;
    } else {
      p = 2.0 * hi - p;
      dir_cos = -dir_cos;
    }
  }
}

}  // namespace

UeState move_ue(UeState ue, double dt_s, const Rect& bounds, RngStream& rng) {
  double cx = std::cos(ue.heading_rad);
  double cy = std::sin(ue.heading_rad);
  ue.position.x += ue.speed_mps * dt_s * cx;
  ue.position.y += ue.speed_mps * dt_s * cy;
  reflect_axis(ue.position.x, cx, bounds.x0, bounds.x1);
  reflect_axis(ue.position.y, cy, bounds.y0, bounds.y1);
  ue.heading_rad = std::atan2(cy, cx);
  // re-draw kinematics for the next slot
  ue.speed_mps = draw_speed(rng);
  ue.heading_rad += draw_heading_offset(rng);
  return ue;
}

uint8_t step_traffic_mode(uint8_t mode, RngStream& rng) {
  if (rng.uniform() >= kModeSwitchProb) return mode;
  // uniformly choose one of the three other modes
  uint8_t pick = static_cast<uint8_t>(rng.uniform_int(kNumTrafficModes - 1));
  return pick >= mode ? static_cast<uint8_t>(pick + 1) : pick;
}

double demand_bits(uint8_t mode, const SliceSpec& slice, double slot_s) {
  return kModeMultiplier[mode] * slice.mean_demand_bps * slot_s;
}

}  // namespace oransim
