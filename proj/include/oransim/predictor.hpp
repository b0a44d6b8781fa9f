#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oransim/config.hpp"
#include "oransim/nn.hpp"
#include "oransim/rng.hpp"
#include "oransim/types.hpp"

namespace oransim::rapp {

// Next-step per-DU per-slice load forecast, denormalized units.
struct PredictionRecord {
  std::vector<std::vector<double>> n_users;    // [du][slice]
  std::vector<std::vector<double>> load_bits;  // [du][slice]
  double total_users() const;
};

// Feature normalization for aggregate traces. Row layout, for each DU then
// each slice: [N/(total users), load/(2 * slice mean * N_l * slot)].
struct TraceNorm {
  int num_dus = 0;
  int num_slices = 0;
  double n_max = 1.0;
  std::vector<double> load_max_bits;

  static TraceNorm from_config(const SimConfig& cfg);
  int feature_dim() const { return 2 * num_dus * num_slices; }
  std::vector<double> normalize(const DemandVector& d) const;
  PredictionRecord denormalize(std::span<const double> row) const;
};

// A look-back window of normalized feature rows, oldest first.
struct TrafficWindow {
  std::vector<std::vector<double>> rows;
  int look_back() const { return static_cast<int>(rows.size()); }
};

// Chronologically ordered supervised pairs over one trace: window i spans
// rows [i, i+look_back) with rows[i+look_back] as target. The first 80%
// (configurable) of pairs train, the rest validate.
struct Dataset {
  std::vector<std::vector<double>> rows;  // normalized feature rows
  int look_back = 18;
  double val_fraction = 0.2;

  int num_pairs() const { return static_cast<int>(rows.size()) - look_back; }
  int train_pairs() const {
    return static_cast<int>(num_pairs() * (1.0 - val_fraction));
  }
};

// Throws ConfigError when the trace is too short to form one pair.
Dataset build_dataset(std::vector<std::vector<double>> trace_rows, int look_back,
                      double val_fraction = 0.2);

struct EpochLoss {
  double train_mse = 0.0;
  double val_mse = 0.0;
};

// Minimizes MSE of the window's final output against the next-step row via
// BPTT; early-stops after `patience` epochs without validation improvement
// and restores the best-validation parameters. Throws NumericalError on NaN
// loss.
std::vector<EpochLoss> train_predictor(nn::LstmStack& stack, const Dataset& data,
                                       int max_epochs, nn::AdamState& opt,
                                       RngStream& rng, int batch_size = 128,
                                       int patience = 10);

// Validation MSE of an arbitrary per-window forecaster; used to score the
// persistence baseline on the same split.
double validation_mse_persistence(const Dataset& data);
double validation_mse_model(const nn::LstmStack& stack, const Dataset& data);

// One forward pass over the window; outputs denormalized and clamped >= 0.
PredictionRecord predict_load(const nn::LstmStack& stack, const TrafficWindow& window,
                              const TraceNorm& norm);

// Persistence forecast: the last observed row, unchanged.
PredictionRecord naive_baseline(const TrafficWindow& window, const TraceNorm& norm);

// Aggregate-trace CSV: header step,du_id,slice_id,n_users,load_bits.
void write_load_trace_csv(const std::string& path,
                          const std::vector<DemandVector>& trace);
std::vector<DemandVector> read_load_trace_csv(const std::string& path, int num_dus,
                                              int num_slices);

}  // namespace oransim::rapp
