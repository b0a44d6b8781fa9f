#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oransim/config.hpp"
#include "oransim/env.hpp"
#include "oransim/metrics.hpp"
#include "oransim/nn.hpp"
#include "oransim/predictor.hpp"
#include "oransim/sac.hpp"

namespace oransim {

// Mobility/traffic-only roll; the load aggregates feed predictor training.
std::vector<DemandVector> roll_trace(const SimConfig& cfg, uint64_t seed, int steps);

struct TrainResult {
  RunMetrics metrics;
  std::shared_ptr<sac::SacLearner> learner;
  std::optional<nn::LstmStack> predictor;  // engaged in prediction mode
  std::vector<rapp::EpochLoss> predictor_curve;
};

// The full distributed training loop: per iteration each actor rolls N_e
// episodes in its own environment instance against frozen policy snapshots
// (all DUs driven by their own actors, DU i's transitions recorded), then the
// shared critic and per-actor policies take their gradient rounds. Stops at
// N_t iterations or on policy convergence. Writes checkpoints and metrics
// into cfg.out_dir.
TrainResult run_training(const SimConfig& cfg);

// Deterministic (mean-action) episodes; never touches parameters or buffers.
// Collects returns, per-user throughput samples and per-slice violations.
RunMetrics evaluate_policy(const sac::SacLearner& learner,
                           const nn::LstmStack* predictor, const SimConfig& cfg,
                           int episodes, uint64_t seed);

struct CompareOutcome {
  double mean_final_return_prediction = 0.0;
  double mean_final_return_baseline = 0.0;
  double improvement_percent = 0.0;
  std::vector<double> violation_std_prediction;  // per slice, pooled over seeds
  std::vector<double> violation_std_baseline;
  int seeds = 0;
};

// Trains both modes over cfg.seed..cfg.seed+num_seeds-1 and reports the
// prediction-vs-baseline gap. Per-run outputs land in out_dir subdirectories.
CompareOutcome run_compare(const SimConfig& base_cfg, int num_seeds,
                           int final_window = 100);

// Checkpoint bundle helpers (actors + critic [+ predictor]).
void save_learner_checkpoint(const std::string& path, const sac::SacLearner& learner,
                             const nn::LstmStack* predictor);
void load_learner_checkpoint(const std::string& path, sac::SacLearner& learner,
                             nn::LstmStack* predictor);

}  // namespace oransim
