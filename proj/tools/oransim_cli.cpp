#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "oransim/checkpoint.hpp"
#include "oransim/orchestrator.hpp"

namespace {

using namespace oransim;

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<double> gamma;
  std::optional<int> iterations;
  std::optional<std::string> out_dir;
  bool no_prediction = false;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--config", o->config_path, "JSON scenario config (defaults if omitted)");
  cmd->add_option("--seed", o->seed, "master seed");
  cmd->add_option("--gamma", o->gamma, "discount factor");
  cmd->add_option("--iterations", o->iterations, "training iterations N_t");
  cmd->add_option("--out", o->out_dir, "output directory");
  cmd->add_flag("--no-prediction", o->no_prediction, "disable the rApp traffic predictor");
}

SimConfig make_config(const CommonOpts& o) {
  SimConfig cfg = o.config_path.empty() ? SimConfig::defaults() : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.gamma) cfg.sac.gamma = *o.gamma;
  if (o.iterations) cfg.iterations = *o.iterations;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.no_prediction) cfg.prediction = false;
  cfg.validate();
  return cfg;
}

int cmd_train(const CommonOpts& o) {
  SimConfig cfg = make_config(o);
  std::printf("training: mode=%s gamma=%g N_t=%d N_m=%d episode_len=%d seed=%llu\n",
              cfg.prediction ? "prediction" : "baseline", cfg.sac.gamma, cfg.iterations,
              cfg.num_dus, cfg.episode_len,
              static_cast<unsigned long long>(cfg.seed));
  TrainResult res = run_training(cfg);
  std::printf("done: %d iterations%s, final-100 return %.4f, wall %.1fs -> %s\n",
              res.metrics.iterations_run, res.metrics.converged ? " (converged)" : "",
              res.metrics.final_mean_return(100), res.metrics.train_seconds,
              cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& checkpoint, int episodes) {
  SimConfig cfg = make_config(o);
  sac::SacLearner learner(4 * cfg.num_slices(), cfg.num_slices(), cfg.num_dus, cfg.sac,
                          derive_seed(cfg.seed, 3));
  std::optional<nn::LstmStack> predictor;
  if (cfg.prediction) {
    const auto tnorm = rapp::TraceNorm::from_config(cfg);
    predictor.emplace(tnorm.feature_dim(), cfg.predictor.hidden, cfg.predictor.layers,
                      tnorm.feature_dim(), 0);
  }
  load_learner_checkpoint(checkpoint, learner, predictor ? &*predictor : nullptr);
  RunMetrics m = evaluate_policy(learner, predictor ? &*predictor : nullptr, cfg,
                                 episodes, cfg.seed);
  export_metrics(m, cfg.out_dir);
  double mean_ret = 0.0;
  for (const auto& r : m.returns) mean_ret += r.ret;
  if (!m.returns.empty()) mean_ret /= static_cast<double>(m.returns.size());
  std::printf("eval: %d episodes, mean return %.4f -> %s\n", episodes, mean_ret,
              cfg.out_dir.c_str());
  const auto stds = m.violation_std();
  for (size_t l = 0; l < stds.size(); ++l)
    std::printf("  slice %zu (%s): violation std %.6f Mbps\n", l,
                cfg.slices[l].name.c_str(), stds[l]);
  return 0;
}

int cmd_trace(const CommonOpts& o, int steps) {
  SimConfig cfg = make_config(o);
  std::filesystem::create_directories(cfg.out_dir);
  EnvCore env(cfg, cfg.seed);
  std::vector<DemandVector> agg;
  agg.reserve(steps);
  std::ofstream ue_out(cfg.out_dir + "/ue_trace.csv");
  if (!ue_out) throw ConfigError("cannot write ue_trace.csv");
  ue_out << "step,ue,slice,x,y,mode,demand_bits\n";
  char buf[200];
  for (int t = 0; t < steps; ++t) {
    for (const auto& ue : env.state().ues) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.9g,%.9g,%d,%.9g\n", t, ue.id, ue.slice,
                    ue.position.x, ue.position.y, static_cast<int>(ue.mode),
                    env.state().demand.user_demand_bits[ue.id]);
      ue_out << buf;
    }
    agg.push_back(env.state().demand);
    env.advance_world();
  }
  rapp::write_load_trace_csv(cfg.out_dir + "/load_trace.csv", agg);
  std::printf("trace: %d steps -> %s/ue_trace.csv, %s/load_trace.csv\n", steps,
              cfg.out_dir.c_str(), cfg.out_dir.c_str());
  return 0;
}

int cmd_predict(const CommonOpts& o, const std::string& trace_path, int steps) {
  SimConfig cfg = make_config(o);
  std::filesystem::create_directories(cfg.out_dir);
  const auto tnorm = rapp::TraceNorm::from_config(cfg);

  std::vector<DemandVector> trace;
  if (!trace_path.empty()) {
    trace = rapp::read_load_trace_csv(trace_path, cfg.num_dus, cfg.num_slices());
  } else {
    trace = roll_trace(cfg, derive_seed(cfg.seed, 1), steps);
  }
  std::vector<std::vector<double>> rows;
  rows.reserve(trace.size());
  for (const auto& d : trace) rows.push_back(tnorm.normalize(d));
  const auto data = rapp::build_dataset(std::move(rows), cfg.predictor.look_back,
                                        cfg.predictor.val_fraction);

  nn::LstmStack stack(tnorm.feature_dim(), cfg.predictor.hidden, cfg.predictor.layers,
                      tnorm.feature_dim(), derive_seed(cfg.seed, 2));
  nn::AdamState opt;
  opt.lr = cfg.predictor.lr;
  RngStream rng(derive_seed(cfg.seed, 2, 1));
  const auto curve = rapp::train_predictor(stack, data, cfg.predictor.max_epochs, opt, rng,
                                           cfg.predictor.batch_size, cfg.predictor.patience);

  std::ofstream loss_out(cfg.out_dir + "/predictor_loss.csv");
  loss_out << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (size_t e = 0; e < curve.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g\n", e, curve[e].train_mse,
                  curve[e].val_mse);
    loss_out << buf;
  }

  const double model_mse = rapp::validation_mse_model(stack, data);
  const double persist_mse = rapp::validation_mse_persistence(data);
  std::printf("predictor: %zu epochs, val MSE %.6g vs persistence %.6g (%s)\n",
              curve.size(), model_mse, persist_mse,
              model_mse <= persist_mse ? "better or equal" : "worse");

  std::vector<nn::NamedTensor> ts{{"predictor.theta",
                                   {static_cast<int>(stack.params().size())},
                                   stack.params()}};
  nn::save_checkpoint(cfg.out_dir + "/predictor_checkpoint.json", ts);
  return 0;
}

int cmd_compare(const CommonOpts& o, int seeds, int final_window) {
  SimConfig cfg = make_config(o);
  CompareOutcome c = run_compare(cfg, seeds, final_window);
  std::printf("compare over %d seeds (final-%d-episode mean return):\n", c.seeds,
              final_window);
  std::printf("  prediction: %.4f\n  baseline:   %.4f\n  improvement: %+.2f%%\n",
              c.mean_final_return_prediction, c.mean_final_return_baseline,
              c.improvement_percent);
  for (size_t l = 0; l < c.violation_std_prediction.size(); ++l)
    std::printf("  slice %zu violation std: prediction %.6f vs baseline %.6f\n", l,
                c.violation_std_prediction[l], c.violation_std_baseline[l]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ORAN slicing simulator: LSTM rApp + distributed SAC xApp"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, trace_o, predict_o, compare_o;

  CLI::App* train = app.add_subcommand("train", "train the slicing xApp");
  add_common(train, &train_o);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(eval, &eval_o);
  std::string eval_ckpt;
  int eval_episodes = 4;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");

  CLI::App* trace = app.add_subcommand("trace", "generate mobility/traffic CSV traces");
  add_common(trace, &trace_o);
  int trace_steps = 1000;
  trace->add_option("--steps", trace_steps, "trace length in slots");

  CLI::App* predict = app.add_subcommand("predict", "train/test the rApp predictor only");
  add_common(predict, &predict_o);
  std::string predict_trace;
  int predict_steps = 5000;
  predict->add_option("--trace", predict_trace, "aggregate trace CSV (generated if omitted)");
  predict->add_option("--steps", predict_steps, "generated trace length");

  CLI::App* compare = app.add_subcommand("compare", "prediction-on vs prediction-off");
  add_common(compare, &compare_o);
  int compare_seeds = 5;
  int final_window = 100;
  compare->add_option("--seeds", compare_seeds, "number of seeds");
  compare->add_option("--final-window", final_window, "episodes in the final-return mean");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_o);
    if (eval->parsed()) return cmd_eval(eval_o, eval_ckpt, eval_episodes);
    if (trace->parsed()) return cmd_trace(trace_o, trace_steps);
    if (predict->parsed()) return cmd_predict(predict_o, predict_trace, predict_steps);
    if (compare->parsed()) return cmd_compare(compare_o, compare_seeds, final_window);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
