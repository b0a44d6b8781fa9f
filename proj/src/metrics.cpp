#include "oransim/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oransim/common.hpp"

namespace oransim {

double RunMetrics::final_mean_return(int k) const {
  if (returns.empty()) return 0.0;
  const size_t n = std::min<size_t>(k, returns.size());
  double sum = 0.0;
  for (size_t i = returns.size() - n; i < returns.size(); ++i) sum += returns[i].ret;
  return sum / static_cast<double>(n);
}

std::vector<double> RunMetrics::violation_std() const {
  std::vector<double> out;
  for (const auto& samples : violation_samples) {
    if (samples.empty()) {
      out.push_back(0.0);
      continue;
    }
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples.size());
    out.push_back(std::sqrt(var));
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

void export_metrics(const RunMetrics& m, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir + "/returns.csv");
    out << "episode,return,mode,gamma\n";
    for (const auto& r : m.returns)
      out << r.episode << "," << fmt(r.ret) << "," << m.mode << "," << fmt(m.gamma) << "\n";
  }
  {
    auto out = open_out(dir + "/throughput_samples.csv");
    out << "user,slice,mbps\n";
    for (const auto& t : m.throughput)
      out << t.user << "," << t.slice << "," << fmt(t.mbps) << "\n";
  }
  {
    auto out = open_out(dir + "/qos_violation_std.csv");
    out << "slice,std,mode\n";
    const auto stds = m.violation_std();
    for (size_t l = 0; l < stds.size(); ++l)
      out << l << "," << fmt(stds[l]) << "," << m.mode << "\n";
  }
  {
    auto out = open_out(dir + "/training_log.csv");
    out << "iteration,actor,policy_loss,critic_loss,mean_reward\n";
    for (const auto& u : m.updates)
      out << u.iteration << "," << u.actor << "," << fmt(u.policy_loss) << ","
          << fmt(u.critic_loss) << "," << fmt(u.mean_reward) << "\n";
  }
}

}  // namespace oransim
