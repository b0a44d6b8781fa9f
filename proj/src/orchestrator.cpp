#include "oransim/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>

#include "oransim/checkpoint.hpp"

namespace oransim {

namespace {

// stream-derivation tags
constexpr uint64_t kTagTrace = 1;
constexpr uint64_t kTagPredictor = 2;
constexpr uint64_t kTagNets = 3;
constexpr uint64_t kTagEnv = 4;
constexpr uint64_t kTagAction = 5;
constexpr uint64_t kTagUpdate = 6;
constexpr uint64_t kTagEval = 7;

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

struct EpisodeSetup {
  int episode_len = 200;
  double gamma = 0.99;
  bool prediction = false;
  int look_back = 18;
};

struct EpisodeResult {
  std::vector<sac::Transition> transitions;
  double disc_return = 0.0;
  double mean_reward = 0.0;
  // eval-only pools
  std::vector<std::vector<double>> violations;  // [slice]
  std::vector<double> served_mbps_sum;          // [ue]
  std::vector<int> served_steps;                // [ue]
};

std::vector<std::vector<double>> build_states(
    const EnvCore& env, const nn::LstmStack* predictor, bool use_prediction,
    const std::deque<std::vector<double>>& window, const rapp::TraceNorm& tnorm,
    const sac::StateNorm& snorm, const std::vector<std::vector<int>>& prev_counts) {
  const int nd = static_cast<int>(env.dus().size());
  const int ns = static_cast<int>(env.slices().size());
  const EnvState& st = env.state();

  rapp::PredictionRecord pred;
  if (use_prediction) {
    rapp::TrafficWindow w;
    w.rows.assign(window.begin(), window.end());
    pred = rapp::predict_load(*predictor, w, tnorm);
  }

  std::vector<std::vector<double>> states(nd);
  std::vector<double> n_row(ns), load_row(ns);
  for (int d = 0; d < nd; ++d) {
    for (int l = 0; l < ns; ++l) {
      if (use_prediction) {
        n_row[l] = pred.n_users[d][l];
        load_row[l] = pred.load_bits[d][l];
      } else {
        n_row[l] = static_cast<double>(st.demand.du_slice_n[d][l]);
        load_row[l] = st.demand.du_slice_load[d][l];
      }
    }
    states[d] = sac::encode_state(st.last_qos.qos_mbps[d], n_row, load_row,
                                  prev_counts[d], snorm);
  }
  return states;
}

// One episode against frozen parameters. record_actor >= 0 records that DU's
// transitions with stochastic actions at every DU; record_actor < 0 runs
// deterministic mean actions and collects evaluation samples instead.
EpisodeResult run_episode(EnvCore& env, const sac::SacLearner& learner,
                          const nn::LstmStack* predictor, const rapp::TraceNorm& tnorm,
                          const sac::StateNorm& snorm, const EpisodeSetup& es,
                          int record_actor, RngStream& rng) {
  const int nd = static_cast<int>(env.dus().size());
  const int ns = static_cast<int>(env.slices().size());
  const int K = env.channel().num_rbs;
  const int num_ues = env.num_users();
  const bool eval_mode = record_actor < 0;

  env.reset();

  EpisodeResult out;
  if (eval_mode) {
    out.violations.assign(ns, {});
    out.served_mbps_sum.assign(num_ues, 0.0);
    out.served_steps.assign(num_ues, 0);
  }

  std::vector<std::vector<int>> prev_counts(nd);
  const std::vector<double> neutral_raw(ns, 0.0);
  for (int d = 0; d < nd; ++d) prev_counts[d] = sac::realize_allocation(neutral_raw, K);

  std::deque<std::vector<double>> window;
  if (es.prediction) {
    auto row = tnorm.normalize(env.state().demand);
    for (int i = 0; i < es.look_back; ++i) window.push_back(row);
  }

  auto states = build_states(env, predictor, es.prediction, window, tnorm, snorm,
                             prev_counts);

  double gamma_pow = 1.0;
  for (int t = 0; t < es.episode_len; ++t) {
    // one action per DU from its own policy
    std::vector<std::vector<double>> raws(nd);
    for (int d = 0; d < nd; ++d) {
      raws[d] = eval_mode ? sac::mean_action(learner.actor(d), states[d])
                          : sac::sample_action(learner.actor(d), states[d], rng).raw;
    }

    std::vector<std::vector<int>> slice_rbs(nd);
    for (int d = 0; d < nd; ++d) slice_rbs[d] = sac::realize_allocation(raws[d], K);

    const QosReport report = env.step(slice_rbs, sac::schedule_users);

    std::vector<double> rewards(nd);
    for (int d = 0; d < nd; ++d) rewards[d] = sac::reward(report.qos_mbps[d], env.slices());

    if (es.prediction) {
      window.push_back(tnorm.normalize(env.state().demand));
      window.pop_front();
    }
    for (int d = 0; d < nd; ++d) prev_counts[d] = slice_rbs[d];
    auto next_states = build_states(env, predictor, es.prediction, window, tnorm, snorm,
                                    prev_counts);

    if (!eval_mode) {
      const int i = record_actor;
      sac::Transition tr;
      tr.s = states[i];
      tr.a = raws[i];
      tr.r = rewards[i];
      tr.s2 = next_states[i];
      tr.done = (t == es.episode_len - 1);
      tr.actor = i;
      out.transitions.push_back(std::move(tr));
      out.disc_return += gamma_pow * rewards[i];
      out.mean_reward += rewards[i];
    } else {
      double mean_r = 0.0;
      for (int d = 0; d < nd; ++d) mean_r += rewards[d];
      mean_r /= nd;
      out.disc_return += gamma_pow * mean_r;
      out.mean_reward += mean_r;
      for (int d = 0; d < nd; ++d)
        for (int l = 0; l < ns; ++l) out.violations[l].push_back(report.violation[d][l]);
      const auto& demand = env.state().demand.user_demand_bits;
      for (int u = 0; u < num_ues; ++u) {
        if (demand[u] <= 0.0) continue;
        out.served_mbps_sum[u] +=
            std::min(report.user_rate_bps[u], demand[u]) / 1e6;
        out.served_steps[u] += 1;
      }
    }

    gamma_pow *= es.gamma;
    states = std::move(next_states);
  }
  out.mean_reward /= es.episode_len;
  return out;
}

}  // namespace

std::vector<DemandVector> roll_trace(const SimConfig& cfg, uint64_t seed, int steps) {
  EnvCore env(cfg, seed);
  std::vector<DemandVector> out;
  out.reserve(steps);
  out.push_back(env.state().demand);
  while (static_cast<int>(out.size()) < steps) {
    env.advance_world();
    out.push_back(env.state().demand);
  }
  return out;
}

void save_learner_checkpoint(const std::string& path, const sac::SacLearner& learner,
                             const nn::LstmStack* predictor) {
  std::vector<nn::NamedTensor> ts;
  for (int i = 0; i < learner.num_actors(); ++i) {
    const auto& p = learner.actor(i).params();
    ts.push_back({"actor" + std::to_string(i) + ".theta",
                  {static_cast<int>(p.size())}, p});
  }
  ts.push_back({"critic.theta", {static_cast<int>(learner.critic().params().size())},
                learner.critic().params()});
  ts.push_back({"critic_target.theta",
                {static_cast<int>(learner.critic_target().params().size())},
                learner.critic_target().params()});
  if (predictor) {
    ts.push_back({"predictor.theta", {static_cast<int>(predictor->params().size())},
                  predictor->params()});
  }
  nn::save_checkpoint(path, ts);
}

void load_learner_checkpoint(const std::string& path, sac::SacLearner& learner,
                             nn::LstmStack* predictor) {
  const auto ts = nn::load_checkpoint(path);
  auto assign = [](const nn::NamedTensor& t, nn::Vec& dst, const std::string& what) {
    if (t.data.size() != dst.size())
      throw ConfigError("checkpoint tensor " + what + " size mismatch");
    dst = t.data;
  };
  for (int i = 0; i < learner.num_actors(); ++i) {
    const std::string name = "actor" + std::to_string(i) + ".theta";
    assign(nn::find_tensor(ts, name), learner.actor(i).params(), name);
  }
  assign(nn::find_tensor(ts, "critic.theta"), learner.critic().params(), "critic.theta");
  // target falls back to the online critic for older bundles
  learner.critic_target().params() = learner.critic().params();
  for (const auto& t : ts) {
    if (t.name == "critic_target.theta")
      assign(t, learner.critic_target().params(), t.name);
    if (predictor && t.name == "predictor.theta")
      assign(t, predictor->params(), t.name);
  }
}

TrainResult run_training(const SimConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  const double t_begin = now_seconds();

  const int nd = cfg.num_dus;
  const int ns = cfg.num_slices();
  const auto tnorm = rapp::TraceNorm::from_config(cfg);
  const auto snorm = sac::StateNorm::from_config(cfg);

  TrainResult out;
  out.learner = std::make_shared<sac::SacLearner>(4 * ns, ns, nd, cfg.sac,
                                                  derive_seed(cfg.seed, kTagNets));
  RunMetrics& m = out.metrics;
  m.mode = cfg.prediction ? "prediction" : "baseline";
  m.gamma = cfg.sac.gamma;
  m.violation_samples.assign(ns, {});

  if (cfg.prediction) {
    const double t0 = now_seconds();
    const auto trace = roll_trace(cfg, derive_seed(cfg.seed, kTagTrace),
                                  cfg.predictor.trace_steps);
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.size());
    for (const auto& d : trace) rows.push_back(tnorm.normalize(d));
    const auto data = rapp::build_dataset(std::move(rows), cfg.predictor.look_back,
                                          cfg.predictor.val_fraction);
    nn::LstmStack stack(tnorm.feature_dim(), cfg.predictor.hidden, cfg.predictor.layers,
                        tnorm.feature_dim(), derive_seed(cfg.seed, kTagPredictor));
    nn::AdamState opt;
    opt.lr = cfg.predictor.lr;
    RngStream prng(derive_seed(cfg.seed, kTagPredictor, 1));
    out.predictor_curve = rapp::train_predictor(stack, data, cfg.predictor.max_epochs,
                                                opt, prng, cfg.predictor.batch_size,
                                                cfg.predictor.patience);
    out.predictor = std::move(stack);
    m.predictor_seconds = now_seconds() - t0;
  }

  std::vector<std::unique_ptr<EnvCore>> envs;
  envs.reserve(nd);
  for (int i = 0; i < nd; ++i)
    envs.push_back(std::make_unique<EnvCore>(cfg, derive_seed(cfg.seed, kTagEnv, i)));

  sac::ReplayBuffer buffer(cfg.sac.replay_capacity);
  EpisodeSetup es{cfg.episode_len, cfg.sac.gamma, cfg.prediction, cfg.predictor.look_back};
  const nn::LstmStack* predictor = out.predictor ? &*out.predictor : nullptr;

  std::deque<double> delta_window;
  int episode_counter = 0;
  bool converged = false;
  int iter = 0;

  try {
    for (; iter < cfg.iterations && !converged; ++iter) {
      // --- rollouts against frozen parameters, one env per actor ---
      std::vector<std::vector<EpisodeResult>> results(nd);
      auto roll_one = [&](int i) {
        std::vector<EpisodeResult> res;
        for (int e = 0; e < cfg.evals_per_actor; ++e) {
          RngStream arng(derive_seed(cfg.seed, kTagAction,
                                     static_cast<uint64_t>(iter) * 1000003ULL + e,
                                     static_cast<uint64_t>(i)));
          res.push_back(run_episode(*envs[i], *out.learner, predictor, tnorm, snorm, es,
                                    i, arng));
        }
        return res;
      };
      if (cfg.parallel_actors && nd > 1) {
        std::vector<std::future<std::vector<EpisodeResult>>> futs;
        futs.reserve(nd);
        for (int i = 0; i < nd; ++i)
          futs.push_back(std::async(std::launch::async, roll_one, i));
        for (int i = 0; i < nd; ++i) results[i] = futs[i].get();
      } else {
        for (int i = 0; i < nd; ++i) results[i] = roll_one(i);
      }

      // merge in actor order so the buffer contents are order-deterministic
      std::vector<double> actor_mean_reward(nd, 0.0);
      for (int i = 0; i < nd; ++i) {
        for (auto& ep : results[i]) {
          for (auto& tr : ep.transitions) {
            buffer.push(std::move(tr));
            ++m.transitions_collected;
          }
          m.returns.push_back({episode_counter++, iter, i, ep.disc_return});
          actor_mean_reward[i] += ep.mean_reward;
        }
        actor_mean_reward[i] /= cfg.evals_per_actor;
      }

      // --- critic rounds (shared) ---
      RngStream crng(derive_seed(cfg.seed, kTagUpdate, static_cast<uint64_t>(iter), 0));
      double critic_loss_mean = 0.0;
      for (int k = 0; k < cfg.sac.critic_rounds; ++k)
        critic_loss_mean += out.learner->critic_update(buffer, crng);
      critic_loss_mean /= std::max(cfg.sac.critic_rounds, 1);

      // --- per-actor policy rounds ---
      std::vector<nn::Vec> theta_before(nd);
      for (int i = 0; i < nd; ++i) theta_before[i] = out.learner->actor(i).params();
      std::vector<double> policy_losses(nd, 0.0);
      auto update_one = [&](int i) {
        RngStream prng(derive_seed(cfg.seed, kTagUpdate, static_cast<uint64_t>(iter),
                                   1 + static_cast<uint64_t>(i)));
        double loss = 0.0;
        for (int r = 0; r < cfg.sac.policy_rounds; ++r)
          loss = out.learner->policy_update(i, buffer, prng);
        return loss;
      };
      if (cfg.parallel_actors && nd > 1) {
        std::vector<std::future<double>> futs;
        futs.reserve(nd);
        for (int i = 0; i < nd; ++i)
          futs.push_back(std::async(std::launch::async, update_one, i));
        for (int i = 0; i < nd; ++i) policy_losses[i] = futs[i].get();
      } else {
        for (int i = 0; i < nd; ++i) policy_losses[i] = update_one(i);
      }

      // --- convergence: sliding-window mean |dtheta_p| ---
      double delta_sum = 0.0;
      size_t delta_n = 0;
      for (int i = 0; i < nd; ++i) {
        const auto& after = out.learner->actor(i).params();
        for (size_t j = 0; j < after.size(); ++j)
          delta_sum += std::abs(after[j] - theta_before[i][j]);
        delta_n += after.size();
      }
      delta_window.push_back(delta_sum / static_cast<double>(delta_n));
      if (static_cast<int>(delta_window.size()) > cfg.convergence_window)
        delta_window.pop_front();
      if (static_cast<int>(delta_window.size()) == cfg.convergence_window) {
        double wsum = 0.0;
        for (double d : delta_window) wsum += d;
        if (wsum / cfg.convergence_window < cfg.convergence_delta) converged = true;
      }

      for (int i = 0; i < nd; ++i)
        m.updates.push_back({iter, i, policy_losses[i], critic_loss_mean,
                             actor_mean_reward[i]});
    }
  } catch (const NumericalError&) {
    save_learner_checkpoint(cfg.out_dir + "/abort_checkpoint.json", *out.learner,
                            predictor);
    throw;
  }

  m.converged = converged;
  m.iterations_run = iter;
  m.train_seconds = now_seconds() - t_begin;

  save_learner_checkpoint(cfg.out_dir + "/checkpoint.json", *out.learner, predictor);
  export_metrics(m, cfg.out_dir);
  return out;
}

RunMetrics evaluate_policy(const sac::SacLearner& learner, const nn::LstmStack* predictor,
                           const SimConfig& cfg, int episodes, uint64_t seed) {
  RunMetrics m;
  m.mode = (predictor && cfg.prediction) ? "prediction" : "baseline";
  m.gamma = cfg.sac.gamma;
  m.violation_samples.assign(cfg.num_slices(), {});
  if (episodes <= 0) return m;

  const auto tnorm = rapp::TraceNorm::from_config(cfg);
  const auto snorm = sac::StateNorm::from_config(cfg);
  EnvCore env(cfg, derive_seed(seed, kTagEval));
  EpisodeSetup es{cfg.episode_len, cfg.sac.gamma, predictor != nullptr && cfg.prediction,
                  cfg.predictor.look_back};

  std::vector<int> ue_slice(env.num_users());
  for (const auto& ue : env.state().ues) ue_slice[ue.id] = ue.slice;

  for (int ep = 0; ep < episodes; ++ep) {
    RngStream rng(derive_seed(seed, kTagEval, 1 + static_cast<uint64_t>(ep)));
    const auto res = run_episode(env, learner, predictor, tnorm, snorm, es, -1, rng);
    m.returns.push_back({ep, ep, -1, res.disc_return});
    for (size_t l = 0; l < res.violations.size(); ++l)
      m.violation_samples[l].insert(m.violation_samples[l].end(),
                                    res.violations[l].begin(), res.violations[l].end());
    for (int u = 0; u < env.num_users(); ++u) {
      if (res.served_steps[u] == 0) continue;
      m.throughput.push_back({u, ue_slice[u], res.served_mbps_sum[u] / res.served_steps[u]});
    }
  }
  return m;
}

CompareOutcome run_compare(const SimConfig& base_cfg, int num_seeds, int final_window) {
  CompareOutcome out;
  out.seeds = num_seeds;
  out.violation_std_prediction.assign(base_cfg.num_slices(), 0.0);
  out.violation_std_baseline.assign(base_cfg.num_slices(), 0.0);

  std::vector<std::vector<double>> pool_pred(base_cfg.num_slices());
  std::vector<std::vector<double>> pool_base(base_cfg.num_slices());
  double sum_pred = 0.0, sum_base = 0.0;

  for (int s = 0; s < num_seeds; ++s) {
    for (const bool prediction : {true, false}) {
      SimConfig cfg = base_cfg;
      cfg.prediction = prediction;
      cfg.seed = base_cfg.seed + static_cast<uint64_t>(s);
      cfg.out_dir = base_cfg.out_dir + "/" + (prediction ? "prediction" : "baseline") +
                    "_seed" + std::to_string(cfg.seed);
      TrainResult res = run_training(cfg);
      const double final_ret = res.metrics.final_mean_return(final_window);
      (prediction ? sum_pred : sum_base) += final_ret;

      RunMetrics ev = evaluate_policy(*res.learner,
                                      res.predictor ? &*res.predictor : nullptr, cfg,
                                      cfg.eval_episodes, derive_seed(cfg.seed, 0xE7A1));
      res.metrics.violation_samples = ev.violation_samples;
      res.metrics.throughput = ev.throughput;
      export_metrics(res.metrics, cfg.out_dir);
      auto& pool = prediction ? pool_pred : pool_base;
      for (size_t l = 0; l < ev.violation_samples.size(); ++l)
        pool[l].insert(pool[l].end(), ev.violation_samples[l].begin(),
                       ev.violation_samples[l].end());
    }
  }

  out.mean_final_return_prediction = sum_pred / num_seeds;
  out.mean_final_return_baseline = sum_base / num_seeds;
  out.improvement_percent =
      100.0 * (out.mean_final_return_prediction - out.mean_final_return_baseline) /
      std::abs(out.mean_final_return_baseline);

  auto pooled_std = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size()));
  };
  for (int l = 0; l < base_cfg.num_slices(); ++l) {
    out.violation_std_prediction[l] = pooled_std(pool_pred[l]);
    out.violation_std_baseline[l] = pooled_std(pool_base[l]);
  }

  std::filesystem::create_directories(base_cfg.out_dir);
  std::ofstream summary(base_cfg.out_dir + "/compare_summary.csv");
  summary << "metric,prediction,baseline\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "mean_final_return,%.9g,%.9g\n",
                out.mean_final_return_prediction, out.mean_final_return_baseline);
  summary << buf;
  for (int l = 0; l < base_cfg.num_slices(); ++l) {
    std::snprintf(buf, sizeof(buf), "violation_std_slice%d,%.9g,%.9g\n", l,
                  out.violation_std_prediction[l], out.violation_std_baseline[l]);
    summary << buf;
  }
  std::snprintf(buf, sizeof(buf), "improvement_percent,%.9g,\n", out.improvement_percent);
  summary << buf;
  return out;
}

}  // namespace oransim
