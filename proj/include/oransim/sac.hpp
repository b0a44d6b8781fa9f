#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "oransim/config.hpp"
#include "oransim/nn.hpp"
#include "oransim/rng.hpp"
#include "oransim/types.hpp"

namespace oransim::sac {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
// share floor in the action-to-RB bridge
inline constexpr double kShareFloor = 1e-3;
// deviation floor capping the reward singularity at zero violation
inline constexpr double kDeviationFloor = 1e-3;

// Normalization context shared by every per-DU state encoding.
struct StateNorm {
  std::vector<double> qos_target_mbps;  // lambda_l
  std::vector<double> load_max_bits;    // 2 * mean_demand_l * N_l * slot
  double total_users = 1.0;             // N
  double num_rbs = 1.0;                 // K

  static StateNorm from_config(const SimConfig& cfg);
};

// Concatenates (Q_l/lambda_l, N_l/N, Lambda_l/Lambda_max, prev RB shares)
// into the 4*|L|-dimensional actor observation.
std::vector<double> encode_state(std::span<const double> qos_mbps,
                                 std::span<const double> n_per_slice,
                                 std::span<const double> load_per_slice_bits,
                                 std::span<const int> prev_counts,
                                 const StateNorm& norm);

struct ActionSample {
  std::vector<double> raw;  // tanh-squashed, in (-1, 1)
  double log_prob = 0.0;
};

// Draws from the squashed Gaussian the actor parameterizes; log_prob includes
// the tanh change-of-variables correction.
ActionSample sample_action(const nn::DenseNet& actor, std::span<const double> state,
                           RngStream& rng);
// Deterministic head: tanh of the mean.
std::vector<double> mean_action(const nn::DenseNet& actor, std::span<const double> state);

// Continuous-to-discrete bridge: positive shares w_l = (raw_l+1+delta)/sum,
// floor(w_l*K) plus largest-fractional-part remainders. Always sums to K.
std::vector<int> realize_allocation(std::span<const double> raw, int K);

// Round-robin of each slice's RB partition over its active members; RB
// indices are offsets into the DU's K RBs. Appends into user_rbs.
void schedule_users(std::span<const int> slice_counts,
                    const std::vector<std::vector<int>>& members_per_slice,
                    std::vector<std::vector<int>>* user_rbs);

// Sum over slices of 1/arctan(max(|Q_l-lambda_l|/lambda_l, floor)).
double reward(std::span<const double> qos_mbps, const std::vector<SliceSpec>& slices);

struct Transition {
  std::vector<double> s;
  std::vector<double> a;  // raw action
  double r = 0.0;
  std::vector<double> s2;
  bool done = false;
  int actor = 0;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);
  void push(Transition t);
  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return data_[i]; }
  size_t count_actor(int actor) const;

  // batch independent uniform draws (with replacement)
  std::vector<size_t> sample(int batch, RngStream& rng) const;
  // uniform over the subset belonging to one actor; empty result if none
  std::vector<size_t> sample_actor(int actor, int batch, RngStream& rng) const;

 private:
  size_t capacity_;
  size_t head_ = 0;
  std::vector<Transition> data_;
  std::vector<size_t> actor_counts_;
};

// Distributed SAC: one private actor per DU, one shared critic with a Polyak
// target. Updates are plain semi-gradient SAC with a reparameterized policy
// objective.
class SacLearner {
 public:
  SacLearner(int state_dim, int action_dim, int num_actors, const SimConfig::Sac& hp,
             uint64_t seed);

  int num_actors() const { return static_cast<int>(actors_.size()); }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const nn::DenseNet& actor(int i) const { return actors_[i]; }
  nn::DenseNet& actor(int i) { return actors_[i]; }
  const nn::DenseNet& critic() const { return critic_; }
  nn::DenseNet& critic() { return critic_; }
  const nn::DenseNet& critic_target() const { return critic_target_; }
  nn::DenseNet& critic_target() { return critic_target_; }
  const SimConfig::Sac& hyper() const { return hp_; }

  // One gradient round on the shared critic from a uniform batch; returns the
  // loss. Polyak-updates the target.
  double critic_update(const ReplayBuffer& buf, RngStream& rng);
  // One gradient round on actor i from its own transitions; returns the loss
  // (or 0 with no-op when the buffer holds nothing for i).
  double policy_update(int i, const ReplayBuffer& buf, RngStream& rng);

  // --- decomposed pieces (also used by the gradient-check tests) ---
  // Bootstrap targets y = r + gamma*(1-done)*(Q_target(s',a') - beta*log pi(a'|s'))
  std::vector<double> compute_targets(const ReplayBuffer& buf,
                                      std::span<const size_t> idx, RngStream& rng) const;
  // Semi-gradient MSE toward fixed targets; grad w.r.t. critic params.
  double critic_loss(const ReplayBuffer& buf, std::span<const size_t> idx,
                     std::span<const double> y, nn::Vec* grad) const;
  // Reparameterized objective mean(beta*log pi - Q(s, a~)) for frozen noise.
  double policy_loss(int i, const nn::Mat& states, const nn::Mat& eps, nn::Vec* grad) const;

  void polyak_update(double tau);

 private:
  int state_dim_, action_dim_;
  SimConfig::Sac hp_;
  nn::DenseNet critic_, critic_target_;
  std::vector<nn::DenseNet> actors_;
  nn::AdamState critic_opt_;
  std::vector<nn::AdamState> actor_opts_;
};

}  // namespace oransim::sac
