#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oransim/types.hpp"

namespace oransim {

// Full scenario description. Defaults reproduce the reference scenario:
// 3 slices, 7 DUs (one central, six on a 1000 m ring), 20 MHz as K=100 RBs
// of 200 kHz, 60 users split {20, 30, 10} over a 3000 m x 2000 m cell.
struct SimConfig {
  // topology
  Rect area{0.0, 0.0, 3000.0, 2000.0};
  int num_dus = 7;                  // N_m, one actor per DU
  double du_ring_radius_m = 1000.0;
  double tx_power_per_rb_w = 0.2;   // p_u

  // slices and users
  std::vector<SliceSpec> slices;
  std::vector<int> slice_populations{20, 30, 10};  // N_l

  ChannelParams channel;

  // mobility / traffic; one slot = one RL step
  double slot_s = 10.0;

  struct Predictor {
    int look_back = 18;
    int hidden = 50;
    int layers = 2;
    double lr = 1e-3;
    int max_epochs = 25;
    int patience = 10;
    int batch_size = 128;
    int trace_steps = 3000;      // pre-training trace length
    double val_fraction = 0.2;
  } predictor;

  struct Sac {
    double gamma = 0.99;
    double beta = 0.2;           // entropy temperature
    double tau = 0.005;          // target smoothing
    double lr = 1e-4;
    int batch_size = 256;
    int replay_capacity = 100000;
    std::vector<int> actor_hidden{128, 256, 256};
    std::vector<int> critic_hidden{128, 256, 256};
    int critic_rounds = 2;       // gradient rounds per iteration
    int policy_rounds = 1;       // per actor per iteration
  } sac;

  // orchestrator
  int iterations = 500;          // N_t
  int evals_per_actor = 1;       // N_e
  int episode_len = 200;
  int eval_episodes = 4;
  bool prediction = true;
  uint64_t seed = 1;
  std::string out_dir = "out";
  bool parallel_actors = true;
  double convergence_delta = 1e-5;
  int convergence_window = 50;

  // freeze switches for stationary-scenario studies
  bool freeze_mobility = false;
  bool freeze_traffic = false;
  bool freeze_channel = false;

  int num_slices() const { return static_cast<int>(slices.size()); }
  int num_users() const;
  std::vector<DuNode> du_nodes() const;

  // throws ConfigError when invariants are broken
  void validate() const;

  static SimConfig defaults();
};

SimConfig load_config(const std::string& path);
void save_config(const SimConfig& cfg, const std::string& path);

}  // namespace oransim
