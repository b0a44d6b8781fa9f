#pragma once

#include <string>
#include <vector>

namespace oransim {

// Everything a training or evaluation run exports. CSV schemas are stable:
//   returns.csv             episode,return,mode,gamma
//   throughput_samples.csv  user,slice,mbps
//   qos_violation_std.csv   slice,std,mode
//   training_log.csv        iteration,actor,policy_loss,critic_loss,mean_reward
struct RunMetrics {
  struct EpisodeReturn {
    int episode = 0;
    int iteration = 0;
    int actor = 0;
    double ret = 0.0;
  };
  struct UpdateLog {
    int iteration = 0;
    int actor = 0;
    double policy_loss = 0.0;
    double critic_loss = 0.0;
    double mean_reward = 0.0;
  };
  struct ThroughputSample {
    int user = 0;
    int slice = 0;
    double mbps = 0.0;
  };

  std::string mode = "baseline";  // "prediction" or "baseline"
  double gamma = 0.99;
  std::vector<EpisodeReturn> returns;
  std::vector<UpdateLog> updates;
  std::vector<ThroughputSample> throughput;
  std::vector<std::vector<double>> violation_samples;  // [slice] -> |Q-lambda| pool
  bool converged = false;
  int iterations_run = 0;
  long transitions_collected = 0;
  double predictor_seconds = 0.0;
  double train_seconds = 0.0;

  // mean return over the last k recorded episodes
  double final_mean_return(int k) const;
  std::vector<double> violation_std() const;  // per slice
};

// Writes the four CSVs into dir (created if missing). Formatting is fixed so
// identical metrics serialize byte-identically.
void export_metrics(const RunMetrics& m, const std::string& dir);

}  // namespace oransim
