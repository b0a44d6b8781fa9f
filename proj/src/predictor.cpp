#include "oransim/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oransim::rapp {

double PredictionRecord::total_users() const {
  double sum = 0.0;
  for (const auto& du : n_users)
    for (double n : du) sum += n;
  return sum;
}

TraceNorm TraceNorm::from_config(const SimConfig& cfg) {
  TraceNorm t;
  t.num_dus = cfg.num_dus;
  t.num_slices = cfg.num_slices();
  t.n_max = static_cast<double>(cfg.num_users());
  for (size_t l = 0; l < cfg.slices.size(); ++l)
    t.load_max_bits.push_back(2.0 * cfg.slices[l].mean_demand_bps * cfg.slot_s *
                              cfg.slice_populations[l]);
  return t;
}

std::vector<double> TraceNorm::normalize(const DemandVector& d) const {
  std::vector<double> row;
  row.reserve(feature_dim());
  for (int du = 0; du < num_dus; ++du) {
    for (int l = 0; l < num_slices; ++l) {
      row.push_back(d.du_slice_n[du][l] / n_max);
      row.push_back(d.du_slice_load[du][l] / load_max_bits[l]);
    }
  }
  return row;
}

PredictionRecord TraceNorm::denormalize(std::span<const double> row) const {
  PredictionRecord rec;
  rec.n_users.assign(num_dus, std::vector<double>(num_slices, 0.0));
  rec.load_bits.assign(num_dus, std::vector<double>(num_slices, 0.0));
  int k = 0;
  for (int du = 0; du < num_dus; ++du) {
    for (int l = 0; l < num_slices; ++l) {
      rec.n_users[du][l] = std::max(0.0, row[k++] * n_max);
      rec.load_bits[du][l] = std::max(0.0, row[k++] * load_max_bits[l]);
    }
  }
  return rec;
}

Dataset build_dataset(std::vector<std::vector<double>> trace_rows, int look_back,
                      double val_fraction) {
  if (static_cast<int>(trace_rows.size()) <= look_back)
    throw ConfigError("trace too short: need more than look_back steps");
  Dataset d;
  d.rows = std::move(trace_rows);
  d.look_back = look_back;
  d.val_fraction = val_fraction;
  return d;
}

namespace {

// Forward over a batch of windows. Training supervises every step against its
// next row (teacher forcing); the returned squared error and the validation
// metric cover the final step only, the actual one-step-ahead forecast.
double window_batch_forward(const nn::LstmStack& stack, const Dataset& data,
                            std::span<const int> pair_idx, nn::LstmStack::Cache* cache,
                            std::vector<nn::Mat>* dys, nn::Vec* grad) {
  const int B = static_cast<int>(pair_idx.size());
  const int T = data.look_back;
  const int F = static_cast<int>(data.rows[0].size());
  std::vector<nn::Mat> xs(T, nn::Mat(B, F));
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < T; ++t)
      std::copy(data.rows[pair_idx[b] + t].begin(), data.rows[pair_idx[b] + t].end(),
                xs[t].row(b));
  auto init = stack.zero_state(B);
  auto outs = stack.forward(xs, init, cache);
  double se_last = 0.0;
  if (dys && grad) {
    dys->assign(T, nn::Mat());
    for (int t = 0; t < T; ++t) {
      nn::Mat dy(B, F);
      for (int b = 0; b < B; ++b) {
        const auto& target = data.rows[pair_idx[b] + t + 1];
        for (int f = 0; f < F; ++f) {
          const double e = outs[t].at(b, f) - target[f];
          if (t == T - 1) se_last += e * e;
          dy.at(b, f) = 2.0 * e / (static_cast<double>(B) * T * F);
        }
      }
      (*dys)[t] = std::move(dy);
    }
    stack.backward(*cache, *dys, grad);
  } else {
    const nn::Mat& last = outs.back();
    for (int b = 0; b < B; ++b) {
      const auto& target = data.rows[pair_idx[b] + T];
      for (int f = 0; f < F; ++f) {
        const double e = last.at(b, f) - target[f];
        se_last += e * e;
      }
    }
  }
  return se_last;
}

double eval_mse(const nn::LstmStack& stack, const Dataset& data, int lo, int hi) {
  if (hi <= lo) return 0.0;
  const int F = static_cast<int>(data.rows[0].size());
  double se = 0.0;
  constexpr int kChunk = 256;
  for (int start = lo; start < hi; start += kChunk) {
    const int n = std::min(kChunk, hi - start);
    std::vector<int> idx(n);
    for (int b = 0; b < n; ++b) idx[b] = start + b;
    se += window_batch_forward(stack, data, idx, nullptr, nullptr, nullptr);
  }
  return se / (static_cast<double>(hi - lo) * F);
}

}  // namespace

std::vector<EpochLoss> train_predictor(nn::LstmStack& stack, const Dataset& data,
                                       int max_epochs, nn::AdamState& opt,
                                       RngStream& rng, int batch_size, int patience) {
  std::vector<EpochLoss> curve;
  if (max_epochs <= 0) return curve;
  const int train_n = data.train_pairs();
  const int total_n = data.num_pairs();
  if (train_n <= 0) throw ConfigError("train_predictor: empty training split");
  const int F = static_cast<int>(data.rows[0].size());

  std::vector<int> order(train_n);
  for (int i = 0; i < train_n; ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  nn::Vec best_params = stack.params();
  int since_best = 0;

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    // Fisher-Yates with the run's stream
    for (int i = train_n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    double train_se = 0.0;
    for (int start = 0; start < train_n; start += batch_size) {
      const int n = std::min(batch_size, train_n - start);
      std::span<const int> idx(order.data() + start, static_cast<size_t>(n));
      nn::LstmStack::Cache cache;
      std::vector<nn::Mat> dys;
      nn::Vec grad;
      train_se += window_batch_forward(stack, data, idx, &cache, &dys, &grad);
      nn::adam_step(stack.params(), grad, opt);
    }
    EpochLoss el;
    el.train_mse = train_se / (static_cast<double>(train_n) * F);
    el.val_mse = eval_mse(stack, data, train_n, total_n);
    if (!std::isfinite(el.train_mse) || !std::isfinite(el.val_mse))
      throw NumericalError("train_predictor: loss diverged");
    curve.push_back(el);
    if (el.val_mse < best_val) {
      best_val = el.val_mse;
      best_params = stack.params();
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  stack.params() = best_params;
  return curve;
}

double validation_mse_persistence(const Dataset& data) {
  const int lo = data.train_pairs(), hi = data.num_pairs();
  const int T = data.look_back;
  const int F = static_cast<int>(data.rows[0].size());
  if (hi <= lo) return 0.0;
  double se = 0.0;
  for (int i = lo; i < hi; ++i) {
    const auto& last = data.rows[i + T - 1];
    const auto& target = data.rows[i + T];
    for (int f = 0; f < F; ++f) {
      const double e = last[f] - target[f];
      se += e * e;
    }
  }
  return se / (static_cast<double>(hi - lo) * F);
}

double validation_mse_model(const nn::LstmStack& stack, const Dataset& data) {
  return eval_mse(stack, data, data.train_pairs(), data.num_pairs());
}

PredictionRecord predict_load(const nn::LstmStack& stack, const TrafficWindow& window,
                              const TraceNorm& norm) {
  if (window.rows.empty()) throw ShapeError("predict_load: empty window");
  const int T = window.look_back();
  const int F = static_cast<int>(window.rows[0].size());
  if (F != stack.input_size()) throw ShapeError("predict_load: feature width mismatch");
  std::vector<nn::Mat> xs(T, nn::Mat(1, F));
  for (int t = 0; t < T; ++t)
    std::copy(window.rows[t].begin(), window.rows[t].end(), xs[t].row(0));
  auto outs = stack.forward(xs, stack.zero_state(1));
  return norm.denormalize(outs.back().a);
}

PredictionRecord naive_baseline(const TrafficWindow& window, const TraceNorm& norm) {
  if (window.rows.empty()) throw ShapeError("naive_baseline: empty window");
  return norm.denormalize(window.rows.back());
}

void write_load_trace_csv(const std::string& path,
                          const std::vector<DemandVector>& trace) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write trace: " + path);
  out << "step,du_id,slice_id,n_users,load_bits\n";
  char buf[160];
  for (size_t step = 0; step < trace.size(); ++step) {
    const auto& d = trace[step];
    for (size_t du = 0; du < d.du_slice_n.size(); ++du) {
      for (size_t l = 0; l < d.du_slice_n[du].size(); ++l) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%d,%.9g\n", step, du, l,
                      d.du_slice_n[du][l], d.du_slice_load[du][l]);
        out << buf;
      }
    }
  }
}

std::vector<DemandVector> read_load_trace_csv(const std::string& path, int num_dus,
                                              int num_slices) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read trace: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<DemandVector> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    long step, du, slice;
    int n;
    double load;
    std::getline(ss, field, ',');
    step = std::stol(field);
    std::getline(ss, field, ',');
    du = std::stol(field);
    std::getline(ss, field, ',');
    slice = std::stol(field);
    std::getline(ss, field, ',');
    n = std::stoi(field);
    std::getline(ss, field, ',');
    load = std::stod(field);
    if (step >= static_cast<long>(trace.size())) {
      DemandVector d;
      d.du_slice_n.assign(num_dus, std::vector<int>(num_slices, 0));
      d.du_slice_load.assign(num_dus, std::vector<double>(num_slices, 0.0));
      trace.resize(step + 1, d);
    }
    if (du >= num_dus || slice >= num_slices)
      throw ConfigError("trace row out of range in " + path);
    trace[step].du_slice_n[du][slice] = n;
    trace[step].du_slice_load[du][slice] = load;
  }
  return trace;
}

}  // namespace oransim::rapp
