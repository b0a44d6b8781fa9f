#pragma once

#include <array>
#include <span>

#include "oransim/rng.hpp"
#include "oransim/types.hpp"

namespace oransim {

// The seven direction offsets applied to the current heading at each step.
inline constexpr std::array<double, 7> kHeadingOffsets = {
    -1.0471975511965976,   // -pi/3
    -0.5235987755982988,   // -pi/6
    -0.2617993877991494,   // -pi/12
    0.0,
    0.2617993877991494,    // +pi/12
    0.5235987755982988,    // +pi/6
    1.0471975511965976,    // +pi/3
};

double draw_heading_offset(RngStream& rng);
double draw_speed(RngStream& rng);  // uniform [10, 20] m/s

// Advances one slot: moves with the current speed/heading, reflects off the
// cell bounds, then re-draws speed and applies a heading offset for the next
// slot.
UeState move_ue(UeState ue, double dt_s, const Rect& bounds, RngStream& rng);

// Markov-modulated mode chain: with probability 0.01 jump to a uniformly
// chosen different mode, otherwise stay.
uint8_t step_traffic_mode(uint8_t mode, RngStream& rng);
inline constexpr double kModeSwitchProb = 0.01;

// Demand multipliers per mode {idle, low, mid, high}.
inline constexpr std::array<double, kNumTrafficModes> kModeMultiplier = {0.0, 0.5, 1.0, 1.5};

// Lambda_{n,l} in bits for one slot.
double demand_bits(uint8_t mode, const SliceSpec& slice, double slot_s);

}  // namespace oransim
