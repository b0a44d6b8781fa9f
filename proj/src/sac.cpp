#include "oransim/sac.hpp"

#include <algorithm>
#include <cmath>

namespace oransim::sac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)
constexpr double kLn2 = 0.69314718055994530942;

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - tanh(u)^2), stable for large |u|
inline double log1m_tanh2(double u) { return 2.0 * (kLn2 - u - softplus(-2.0 * u)); }

}  // namespace

StateNorm StateNorm::from_config(const SimConfig& cfg) {
  StateNorm n;
  for (size_t l = 0; l < cfg.slices.size(); ++l) {
    n.qos_target_mbps.push_back(cfg.slices[l].qos_target_mbps);
    n.load_max_bits.push_back(2.0 * cfg.slices[l].mean_demand_bps * cfg.slot_s *
                              cfg.slice_populations[l]);
  }
  n.total_users = static_cast<double>(cfg.num_users());
  n.num_rbs = static_cast<double>(cfg.channel.num_rbs);
  return n;
}

std::vector<double> encode_state(std::span<const double> qos_mbps,
                                 std::span<const double> n_per_slice,
                                 std::span<const double> load_per_slice_bits,
                                 std::span<const int> prev_counts,
                                 const StateNorm& norm) {
  const size_t L = norm.qos_target_mbps.size();
  std::vector<double> s;
  s.reserve(4 * L);
  for (size_t l = 0; l < L; ++l) s.push_back(qos_mbps[l] / norm.qos_target_mbps[l]);
  for (size_t l = 0; l < L; ++l) s.push_back(n_per_slice[l] / norm.total_users);
  for (size_t l = 0; l < L; ++l) s.push_back(load_per_slice_bits[l] / norm.load_max_bits[l]);
  for (size_t l = 0; l < L; ++l) s.push_back(prev_counts[l] / norm.num_rbs);
  check_finite(s, "encode_state");
  return s;
}

ActionSample sample_action(const nn::DenseNet& actor, std::span<const double> state,
                           RngStream& rng) {
  const int A = actor.output_size() / 2;
  nn::Vec out = actor.forward_one(state);
  check_finite(out, "sample_action: actor output");
  ActionSample res;
  res.raw.resize(A);
  for (int j = 0; j < A; ++j) {
    const double mu = out[j];
    const double ls = std::clamp(out[A + j], kLogStdMin, kLogStdMax);
    const double sigma = std::exp(ls);
    const double eps = rng.normal();
    const double u = mu + sigma * eps;
    res.raw[j] = std::tanh(u);
    res.log_prob += -kHalfLog2Pi - ls - 0.5 * eps * eps - log1m_tanh2(u);
  }
  check_finite(res.log_prob, "sample_action: log_prob");
  return res;
}

std::vector<double> mean_action(const nn::DenseNet& actor, std::span<const double> state) {
  const int A = actor.output_size() / 2;
  nn::Vec out = actor.forward_one(state);
  check_finite(out, "mean_action: actor output");
  std::vector<double> a(A);
  for (int j = 0; j < A; ++j) a[j] = std::tanh(out[j]);
  return a;
}

std::vector<int> realize_allocation(std::span<const double> raw, int K) {
  const int L = static_cast<int>(raw.size());
  std::vector<double> w(L);
  double tot = 0.0;
  for (int l = 0; l < L; ++l) {
    w[l] = raw[l] + 1.0 + kShareFloor;
    tot += w[l];
  }
  std::vector<int> counts(L, 0);
  std::vector<std::pair<double, int>> fracs(L);
  int used = 0;
  for (int l = 0; l < L; ++l) {
    const double exact = w[l] / tot * K;
    counts[l] = static_cast<int>(std::floor(exact));
    fracs[l] = {exact - counts[l], l};
    used += counts[l];
  }
  std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int j = 0; used < K; ++j, ++used) counts[fracs[j % L].second] += 1;
  return counts;
}

void schedule_users(std::span<const int> slice_counts,
                    const std::vector<std::vector<int>>& members_per_slice,
                    std::vector<std::vector<int>>* user_rbs) {
  int offset = 0;
  for (size_t l = 0; l < members_per_slice.size(); ++l) {
    const auto& members = members_per_slice[l];
    const int count = slice_counts[l];
    if (!members.empty()) {
      const int n = static_cast<int>(members.size());
      for (int j = 0; j < count; ++j)
        (*user_rbs)[members[j % n]].push_back(offset + j);
    }
    offset += count;
  }
}

double reward(std::span<const double> qos_mbps, const std::vector<SliceSpec>& slices) {
  double r = 0.0;
  for (size_t l = 0; l < slices.size(); ++l) {
    const double dev = std::abs(qos_mbps[l] - slices[l].qos_target_mbps) /
                       slices[l].qos_target_mbps;
    r += 1.0 / std::atan(std::max(dev, kDeviationFloor));
  }
  check_finite(r, "reward");
  return r;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  data_.reserve(std::min<size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (static_cast<size_t>(t.actor) >= actor_counts_.size())
    actor_counts_.resize(t.actor + 1, 0);
  actor_counts_[t.actor] += 1;
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    actor_counts_[data_[head_].actor] -= 1;
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

size_t ReplayBuffer::count_actor(int actor) const {
  if (static_cast<size_t>(actor) >= actor_counts_.size()) return 0;
  return actor_counts_[actor];
}

std::vector<size_t> ReplayBuffer::sample(int batch, RngStream& rng) const {
  std::vector<size_t> idx(batch);
  for (int b = 0; b < batch; ++b) idx[b] = rng.uniform_int(data_.size());
  return idx;
}

std::vector<size_t> ReplayBuffer::sample_actor(int actor, int batch, RngStream& rng) const {
  if (count_actor(actor) == 0) return {};
  std::vector<size_t> idx;
  idx.reserve(batch);
  const size_t max_tries = static_cast<size_t>(batch) * 100;
  size_t tries = 0;
  while (idx.size() < static_cast<size_t>(batch) && tries < max_tries) {
    const size_t i = rng.uniform_int(data_.size());
    ++tries;
    if (data_[i].actor == actor) idx.push_back(i);
  }
  if (idx.size() < static_cast<size_t>(batch)) {
    // sparse actor: enumerate its entries and draw from them directly
    std::vector<size_t> pool;
    for (size_t i = 0; i < data_.size(); ++i)
      if (data_[i].actor == actor) pool.push_back(i);
    while (idx.size() < static_cast<size_t>(batch))
      idx.push_back(pool[rng.uniform_int(pool.size())]);
  }
  return idx;
}

SacLearner::SacLearner(int state_dim, int action_dim, int num_actors,
                       const SimConfig::Sac& hp, uint64_t seed)
    : state_dim_(state_dim), action_dim_(action_dim), hp_(hp) {
  std::vector<int> cw{state_dim + action_dim};
  for (int h : hp.critic_hidden) cw.push_back(h);
  cw.push_back(1);
  std::vector<nn::Act> ca(cw.size() - 2, nn::Act::kTanh);
  ca.push_back(nn::Act::kLinear);
  critic_ = nn::DenseNet(cw, ca, derive_seed(seed, 0xC41711C));
  critic_target_ = critic_;

  std::vector<int> aw{state_dim};
  for (int h : hp.actor_hidden) aw.push_back(h);
  aw.push_back(2 * action_dim);
  std::vector<nn::Act> aa(aw.size() - 2, nn::Act::kTanh);
  aa.push_back(nn::Act::kLinear);
  for (int i = 0; i < num_actors; ++i)
    actors_.emplace_back(aw, aa, derive_seed(seed, 0xAC708, static_cast<uint64_t>(i)));

  critic_opt_.lr = hp.lr;
  actor_opts_.assign(num_actors, nn::AdamState{});
  for (auto& o : actor_opts_) o.lr = hp.lr;
}

std::vector<double> SacLearner::compute_targets(const ReplayBuffer& buf,
                                                std::span<const size_t> idx,
                                                RngStream& rng) const {
  const int B = static_cast<int>(idx.size());
  const int A = action_dim_;
  // noise drawn in batch order so targets are independent of actor grouping
  nn::Mat eps(B, A);
  for (double& e : eps.a) e = rng.normal();

  nn::Mat crit_in(B, state_dim_ + A);
  std::vector<double> logp(B, 0.0);
  // group rows by actor to batch the policy forwards
  std::vector<std::vector<int>> rows_by_actor(actors_.size());
  for (int b = 0; b < B; ++b) rows_by_actor[buf.at(idx[b]).actor].push_back(b);
  for (size_t i = 0; i < actors_.size(); ++i) {
    const auto& rows = rows_by_actor[i];
    if (rows.empty()) continue;
    nn::Mat S(static_cast<int>(rows.size()), state_dim_);
    for (size_t r = 0; r < rows.size(); ++r) {
      const auto& t = buf.at(idx[rows[r]]);
      std::copy(t.s2.begin(), t.s2.end(), S.row(static_cast<int>(r)));
    }
    nn::Mat out = actors_[i].forward(S);
    for (size_t r = 0; r < rows.size(); ++r) {
      const int b = rows[r];
      const auto& t = buf.at(idx[b]);
      double* ci = crit_in.row(b);
      std::copy(t.s2.begin(), t.s2.end(), ci);
      for (int j = 0; j < A; ++j) {
        const double mu = out.at(static_cast<int>(r), j);
        const double ls = std::clamp(out.at(static_cast<int>(r), A + j), kLogStdMin, kLogStdMax);
        const double sigma = std::exp(ls);
        const double u = mu + sigma * eps.at(b, j);
        ci[state_dim_ + j] = std::tanh(u);
        logp[b] += -kHalfLog2Pi - ls - 0.5 * eps.at(b, j) * eps.at(b, j) - log1m_tanh2(u);
      }
    }
  }
  nn::Mat qt = critic_target_.forward(crit_in);
  std::vector<double> y(B);
  for (int b = 0; b < B; ++b) {
    const auto& t = buf.at(idx[b]);
    const double cont = t.done ? 0.0 : 1.0;
    y[b] = t.r + hp_.gamma * cont * (qt.at(b, 0) - hp_.beta * logp[b]);
  }
  check_finite(y, "compute_targets");
  return y;
}

double SacLearner::critic_loss(const ReplayBuffer& buf, std::span<const size_t> idx,
                               std::span<const double> y, nn::Vec* grad) const {
  const int B = static_cast<int>(idx.size());
  nn::Mat in(B, state_dim_ + action_dim_);
  for (int b = 0; b < B; ++b) {
    const auto& t = buf.at(idx[b]);
    double* r = in.row(b);
    std::copy(t.s.begin(), t.s.end(), r);
    std::copy(t.a.begin(), t.a.end(), r + state_dim_);
  }
  nn::DenseNet::Cache cache;
  nn::Mat q = critic_.forward(in, &cache);
  double loss = 0.0;
  nn::Mat dY(B, 1);
  for (int b = 0; b < B; ++b) {
    const double e = q.at(b, 0) - y[b];
    loss += e * e;
    dY.at(b, 0) = 2.0 * e / B;
  }
  loss /= B;
  if (grad) critic_.backward(cache, dY, grad);
  check_finite(loss, "critic_loss");
  return loss;
}

double SacLearner::policy_loss(int i, const nn::Mat& states, const nn::Mat& eps,
                               nn::Vec* grad) const {
  const int B = states.rows;
  const int A = action_dim_;
  const nn::DenseNet& actor = actors_[i];

  nn::DenseNet::Cache acache;
  nn::Mat out = actor.forward(states, &acache);
  check_finite(out.a, "policy_loss: actor output");

  nn::Mat mu(B, A), ls(B, A), sigma(B, A), u(B, A), act(B, A);
  std::vector<uint8_t> clamped(static_cast<size_t>(B) * A, 0);
  std::vector<double> logp(B, 0.0);
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < A; ++j) {
      mu.at(b, j) = out.at(b, j);
      double l = out.at(b, A + j);
      if (l < kLogStdMin || l > kLogStdMax) {
        clamped[static_cast<size_t>(b) * A + j] = 1;
        l = std::clamp(l, kLogStdMin, kLogStdMax);
      }
      ls.at(b, j) = l;
      sigma.at(b, j) = std::exp(l);
      u.at(b, j) = mu.at(b, j) + sigma.at(b, j) * eps.at(b, j);
      act.at(b, j) = std::tanh(u.at(b, j));
      logp[b] += -kHalfLog2Pi - l - 0.5 * eps.at(b, j) * eps.at(b, j) - log1m_tanh2(u.at(b, j));
    }
  }

  nn::Mat crit_in(B, state_dim_ + A);
  for (int b = 0; b < B; ++b) {
    double* r = crit_in.row(b);
    std::copy(states.row(b), states.row(b) + state_dim_, r);
    std::copy(act.row(b), act.row(b) + A, r + state_dim_);
  }
  nn::DenseNet::Cache ccache;
  nn::Mat q = critic_.forward(crit_in, &ccache);

  double loss = 0.0;
  for (int b = 0; b < B; ++b) loss += hp_.beta * logp[b] - q.at(b, 0);
  loss /= B;

  if (grad) {
    // dL/da through the frozen critic
    nn::Mat dQ(B, 1);
    for (int b = 0; b < B; ++b) dQ.at(b, 0) = -1.0 / B;
    nn::Mat dcrit_in;
    critic_.backward(ccache, dQ, nullptr, &dcrit_in);

    nn::Mat dOut(B, 2 * A);
    const double betaB = hp_.beta / B;
    for (int b = 0; b < B; ++b) {
      for (int j = 0; j < A; ++j) {
        const double a = act.at(b, j);
        const double dsq = 1.0 - a * a;  // da/du
        const double g_a = dcrit_in.at(b, state_dim_ + j);
        const double se = sigma.at(b, j) * eps.at(b, j);  // du/dls
        dOut.at(b, j) = betaB * (2.0 * a) + g_a * dsq;
        dOut.at(b, A + j) = clamped[static_cast<size_t>(b) * A + j]
                                ? 0.0
                                : betaB * (-1.0 + 2.0 * a * se) + g_a * dsq * se;
      }
    }
    actor.backward(acache, dOut, grad);
  }
  check_finite(loss, "policy_loss");
  return loss;
}

void SacLearner::polyak_update(double tau) {
  nn::Vec& tgt = critic_target_.params();
  const nn::Vec& src = critic_.params();
  // incremental form: exact fixpoint when target == critic
  for (size_t i = 0; i < tgt.size(); ++i) tgt[i] += tau * (src[i] - tgt[i]);
}

double SacLearner::critic_update(const ReplayBuffer& buf, RngStream& rng) {
  const auto idx = buf.sample(hp_.batch_size, rng);
  const auto y = compute_targets(buf, idx, rng);
  nn::Vec grad;
  const double loss = critic_loss(buf, idx, y, &grad);
  nn::adam_step(critic_.params(), grad, critic_opt_);
  check_finite(critic_.params(), "critic params");
  polyak_update(hp_.tau);
  return loss;
}

double SacLearner::policy_update(int i, const ReplayBuffer& buf, RngStream& rng) {
  const auto idx = buf.sample_actor(i, hp_.batch_size, rng);
  if (idx.empty()) return 0.0;
  const int B = static_cast<int>(idx.size());
  nn::Mat S(B, state_dim_);
  for (int b = 0; b < B; ++b) {
    const auto& t = buf.at(idx[b]);
    std::copy(t.s.begin(), t.s.end(), S.row(b));
  }
  nn::Mat eps(B, action_dim_);
  for (double& e : eps.a) e = rng.normal();
  nn::Vec grad;
  const double loss = policy_loss(i, S, eps, &grad);
  nn::adam_step(actors_[i].params(), grad, actor_opts_[i]);
  check_finite(actors_[i].params(), "actor params");
  return loss;
}

}  // namespace oransim::sac
