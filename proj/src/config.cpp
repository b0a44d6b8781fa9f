#include "oransim/config.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace oransim {

using json = nlohmann::json;

SimConfig SimConfig::defaults() {
  SimConfig cfg;
  cfg.slices = {
      {0, "eMBB", 3.0, 0.15, 12000.0, 3e6},
      {1, "MTC", 0.15, 0.0075, 1000.0, 0.15e6},
      {2, "URLLC", 0.75, 0.0375, 2000.0, 0.75e6},
  };
  return cfg;
}

int SimConfig::num_users() const {
  int n = 0;
  for (int p : slice_populations) n += p;
  return n;
}

std::vector<DuNode> SimConfig::du_nodes() const {
  std::vector<DuNode> dus;
  const Vec2 center{(area.x0 + area.x1) / 2.0, (area.y0 + area.y1) / 2.0};
  dus.push_back({0, center, tx_power_per_rb_w});
  const int ring = num_dus - 1;
  for (int i = 0; i < ring; ++i) {
    const double ang = 2.0 * M_PI * i / ring;
    Vec2 p{center.x + du_ring_radius_m * std::cos(ang),
           center.y + du_ring_radius_m * std::sin(ang)};
    dus.push_back({i + 1, p, tx_power_per_rb_w});
  }
  return dus;
}

void SimConfig::validate() const {
  if (slices.empty()) throw ConfigError("no slices configured");
  if (slice_populations.size() != slices.size())
    throw ConfigError("slice_populations size must match slices");
  for (const auto& s : slices) {
    if (s.qos_target_mbps <= 0) throw ConfigError("slice " + s.name + ": qos_target must be > 0");
    if (s.qos_margin_mbps <= 0) throw ConfigError("slice " + s.name + ": qos_margin must be > 0");
    if (s.packet_len_bits <= 0) throw ConfigError("slice " + s.name + ": packet_len must be > 0");
  }
  if (channel.num_rbs <= 0) throw ConfigError("num_rbs must be > 0");
  if (channel.path_loss_exp < 2.0) throw ConfigError("path_loss_exp must be >= 2");
  if (channel.noise_var_w <= 0) throw ConfigError("noise_var must be > 0");
  if (tx_power_per_rb_w < 0) throw ConfigError("tx_power_per_rb must be >= 0");
  if (num_dus < 1) throw ConfigError("need at least one DU");
  if (area.width() <= 0 || area.height() <= 0) throw ConfigError("degenerate area");
  for (const auto& du : du_nodes()) {
    if (!area.contains(du.position)) throw ConfigError("DU position outside cell bounds");
  }
  if (episode_len <= 0 || iterations <= 0 || evals_per_actor <= 0)
    throw ConfigError("iterations, evals_per_actor and episode_len must be > 0");
  if (sac.gamma <= 0 || sac.gamma > 1) throw ConfigError("gamma must be in (0, 1]");
  if (sac.beta <= 0) throw ConfigError("beta must be > 0");
  if (sac.tau <= 0 || sac.tau > 1) throw ConfigError("tau must be in (0, 1]");
  if (sac.batch_size <= 0 || sac.replay_capacity <= 0)
    throw ConfigError("batch_size and replay_capacity must be > 0");
  if (predictor.look_back <= 0) throw ConfigError("look_back must be > 0");
  if (predictor.val_fraction <= 0 || predictor.val_fraction >= 1)
    throw ConfigError("val_fraction must be in (0, 1)");
}

namespace {

void load_slice(const json& j, SliceSpec& s) {
  s.id = j.value("id", s.id);
  s.name = j.value("name", s.name);
  s.qos_target_mbps = j.value("qos_target_mbps", s.qos_target_mbps);
  s.qos_margin_mbps = j.value("qos_margin_mbps", s.qos_margin_mbps);
  s.packet_len_bits = j.value("packet_len_bits", s.packet_len_bits);
  s.mean_demand_bps = j.value("mean_demand_bps", s.mean_demand_bps);
}

json dump_slice(const SliceSpec& s) {
  return json{{"id", s.id},
              {"name", s.name},
              {"qos_target_mbps", s.qos_target_mbps},
              {"qos_margin_mbps", s.qos_margin_mbps},
              {"packet_len_bits", s.packet_len_bits},
              {"mean_demand_bps", s.mean_demand_bps}};
}

}  // namespace

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  SimConfig cfg = SimConfig::defaults();
  if (j.contains("area")) {
    const auto& a = j["area"];
    cfg.area = {a.value("x0", cfg.area.x0), a.value("y0", cfg.area.y0),
                a.value("x1", cfg.area.x1), a.value("y1", cfg.area.y1)};
  }
  cfg.num_dus = j.value("num_dus", cfg.num_dus);
  cfg.du_ring_radius_m = j.value("du_ring_radius_m", cfg.du_ring_radius_m);
  cfg.tx_power_per_rb_w = j.value("tx_power_per_rb_w", cfg.tx_power_per_rb_w);
  if (j.contains("slices")) {
    cfg.slices.clear();
    int id = 0;
    for (const auto& js : j["slices"]) {
      SliceSpec s{id, "slice" + std::to_string(id), 1.0, 0.05, 1000.0, 1e6};
      load_slice(js, s);
      s.id = id++;
      cfg.slices.push_back(s);
    }
  }
  if (j.contains("slice_populations"))
    cfg.slice_populations = j["slice_populations"].get<std::vector<int>>();
  if (j.contains("channel")) {
    const auto& c = j["channel"];
    cfg.channel.rb_bandwidth_hz = c.value("rb_bandwidth_hz", cfg.channel.rb_bandwidth_hz);
    cfg.channel.num_rbs = c.value("num_rbs", cfg.channel.num_rbs);
    cfg.channel.path_loss_exp = c.value("path_loss_exp", cfg.channel.path_loss_exp);
    cfg.channel.noise_var_w = c.value("noise_var_w", cfg.channel.noise_var_w);
  }
  cfg.slot_s = j.value("slot_s", cfg.slot_s);
  if (j.contains("predictor")) {
    const auto& p = j["predictor"];
    cfg.predictor.look_back = p.value("look_back", cfg.predictor.look_back);
    cfg.predictor.hidden = p.value("hidden", cfg.predictor.hidden);
    cfg.predictor.layers = p.value("layers", cfg.predictor.layers);
    cfg.predictor.lr = p.value("lr", cfg.predictor.lr);
    cfg.predictor.max_epochs = p.value("max_epochs", cfg.predictor.max_epochs);
    cfg.predictor.patience = p.value("patience", cfg.predictor.patience);
    cfg.predictor.batch_size = p.value("batch_size", cfg.predictor.batch_size);
    cfg.predictor.trace_steps = p.value("trace_steps", cfg.predictor.trace_steps);
    cfg.predictor.val_fraction = p.value("val_fraction", cfg.predictor.val_fraction);
  }
  if (j.contains("sac")) {
    const auto& s = j["sac"];
    cfg.sac.gamma = s.value("gamma", cfg.sac.gamma);
    cfg.sac.beta = s.value("beta", cfg.sac.beta);
    cfg.sac.tau = s.value("tau", cfg.sac.tau);
    cfg.sac.lr = s.value("lr", cfg.sac.lr);
    cfg.sac.batch_size = s.value("batch_size", cfg.sac.batch_size);
    cfg.sac.replay_capacity = s.value("replay_capacity", cfg.sac.replay_capacity);
    if (s.contains("actor_hidden")) cfg.sac.actor_hidden = s["actor_hidden"].get<std::vector<int>>();
    if (s.contains("critic_hidden")) cfg.sac.critic_hidden = s["critic_hidden"].get<std::vector<int>>();
    cfg.sac.critic_rounds = s.value("critic_rounds", cfg.sac.critic_rounds);
    cfg.sac.policy_rounds = s.value("policy_rounds", cfg.sac.policy_rounds);
  }
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.evals_per_actor = j.value("evals_per_actor", cfg.evals_per_actor);
  cfg.episode_len = j.value("episode_len", cfg.episode_len);
  cfg.eval_episodes = j.value("eval_episodes", cfg.eval_episodes);
  cfg.prediction = j.value("prediction", cfg.prediction);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.parallel_actors = j.value("parallel_actors", cfg.parallel_actors);
  cfg.convergence_delta = j.value("convergence_delta", cfg.convergence_delta);
  cfg.convergence_window = j.value("convergence_window", cfg.convergence_window);
  cfg.freeze_mobility = j.value("freeze_mobility", cfg.freeze_mobility);
  cfg.freeze_traffic = j.value("freeze_traffic", cfg.freeze_traffic);
  cfg.freeze_channel = j.value("freeze_channel", cfg.freeze_channel);
  cfg.validate();
  return cfg;
}

void save_config(const SimConfig& cfg, const std::string& path) {
  json j;
  j["area"] = {{"x0", cfg.area.x0}, {"y0", cfg.area.y0}, {"x1", cfg.area.x1}, {"y1", cfg.area.y1}};
  j["num_dus"] = cfg.num_dus;
  j["du_ring_radius_m"] = cfg.du_ring_radius_m;
  j["tx_power_per_rb_w"] = cfg.tx_power_per_rb_w;
  json slices = json::array();
  for (const auto& s : cfg.slices) slices.push_back(dump_slice(s));
  j["slices"] = std::move(slices);
  j["slice_populations"] = cfg.slice_populations;
  j["channel"] = {{"rb_bandwidth_hz", cfg.channel.rb_bandwidth_hz},
                  {"num_rbs", cfg.channel.num_rbs},
                  {"path_loss_exp", cfg.channel.path_loss_exp},
                  {"noise_var_w", cfg.channel.noise_var_w}};
  j["slot_s"] = cfg.slot_s;
  j["predictor"] = {{"look_back", cfg.predictor.look_back},
                    {"hidden", cfg.predictor.hidden},
                    {"layers", cfg.predictor.layers},
                    {"lr", cfg.predictor.lr},
                    {"max_epochs", cfg.predictor.max_epochs},
                    {"patience", cfg.predictor.patience},
                    {"batch_size", cfg.predictor.batch_size},
                    {"trace_steps", cfg.predictor.trace_steps},
                    {"val_fraction", cfg.predictor.val_fraction}};
  j["sac"] = {{"gamma", cfg.sac.gamma},
              {"beta", cfg.sac.beta},
              {"tau", cfg.sac.tau},
              {"lr", cfg.sac.lr},
              {"batch_size", cfg.sac.batch_size},
              {"replay_capacity", cfg.sac.replay_capacity},
              {"actor_hidden", cfg.sac.actor_hidden},
              {"critic_hidden", cfg.sac.critic_hidden},
              {"critic_rounds", cfg.sac.critic_rounds},
              {"policy_rounds", cfg.sac.policy_rounds}};
  j["iterations"] = cfg.iterations;
  j["evals_per_actor"] = cfg.evals_per_actor;
  j["episode_len"] = cfg.episode_len;
  j["eval_episodes"] = cfg.eval_episodes;
  j["prediction"] = cfg.prediction;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["parallel_actors"] = cfg.parallel_actors;
  j["convergence_delta"] = cfg.convergence_delta;
  j["convergence_window"] = cfg.convergence_window;
  j["freeze_mobility"] = cfg.freeze_mobility;
  j["freeze_traffic"] = cfg.freeze_traffic;
  j["freeze_channel"] = cfg.freeze_channel;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace oransim
