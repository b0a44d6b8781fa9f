#include "oransim/nn.hpp"

#include <algorithm>
#include <cmath>

namespace oransim::nn {

void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<size_t>(i) * k;
    double* ci = C + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = B + static_cast<size_t>(j) * k;
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += ai[t] * bj[t];
      ci[j] = accumulate ? ci[j] + s : s;
    }
  }
}

void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C,
             bool accumulate) {
  for (int i = 0; i < m; ++i) {
    const double* ai = A + static_cast<size_t>(i) * k;
    double* ci = C + static_cast<size_t>(i) * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (int t = 0; t < k; ++t) {
      const double a = ai[t];
      if (a == 0.0) continue;
      const double* bt = B + static_cast<size_t>(t) * n;
      for (int j = 0; j < n; ++j) ci[j] += a * bt[j];
    }
  }
}

void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C,
             bool accumulate) {
  if (!accumulate) std::fill(C, C + static_cast<size_t>(m) * n, 0.0);
  for (int t = 0; t < k; ++t) {
    const double* at = A + static_cast<size_t>(t) * m;
    const double* bt = B + static_cast<size_t>(t) * n;
    for (int i = 0; i < m; ++i) {
      const double a = at[i];
      if (a == 0.0) continue;
      double* ci = C + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += a * bt[j];
    }
  }
}

namespace {

void init_uniform(double* p, size_t n, int fan_in, RngStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan_in, 1)));
  for (size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

DenseNet::DenseNet(std::vector<int> widths, std::vector<Act> acts, uint64_t init_seed)
    : widths_(std::move(widths)), acts_(std::move(acts)) {
  if (widths_.size() < 2 || acts_.size() != widths_.size() - 1)
    throw ShapeError("DenseNet: widths/activations mismatch");
  size_t total = 0;
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    w_off_.push_back(total);
    total += static_cast<size_t>(widths_[l + 1]) * widths_[l];
    b_off_.push_back(total);
    total += widths_[l + 1];
  }
  theta_.assign(total, 0.0);
  RngStream rng(init_seed);
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    init_uniform(theta_.data() + w_off_[l],
                 static_cast<size_t>(widths_[l + 1]) * widths_[l], widths_[l], rng);
    init_uniform(theta_.data() + b_off_[l], widths_[l + 1], widths_[l], rng);
  }
}

Mat DenseNet::forward(const Mat& X, Cache* cache) const {
  if (X.cols != widths_.front()) throw ShapeError("DenseNet::forward: input width mismatch");
  const int batch = X.rows;
  if (cache) {
    cache->x = X;
    cache->act.assign(num_layers(), Mat());
  }
  Mat cur = X;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    Mat next(batch, out);
    gemm_nt(batch, out, in, cur.a.data(), theta_.data() + w_off_[l], next.a.data(), false);
    const double* b = theta_.data() + b_off_[l];
    for (int i = 0; i < batch; ++i) {
      double* r = next.row(i);
      for (int j = 0; j < out; ++j) r[j] += b[j];
    }
    if (acts_[l] == Act::kTanh)
      for (double& v : next.a) v = std::tanh(v);
    if (cache) cache->act[l] = next;
    cur = std::move(next);
  }
  return cur;
}

Vec DenseNet::forward_one(std::span<const double> x) const {
  Mat X(1, static_cast<int>(x.size()));
  std::copy(x.begin(), x.end(), X.a.begin());
  Mat y = forward(X);
  return y.a;
}

void DenseNet::backward(const Cache& cache, const Mat& dY, Vec* grad, Mat* dX) const {
  const int batch = cache.x.rows;
  if (dY.rows != batch || dY.cols != widths_.back())
    throw ShapeError("DenseNet::backward: dY shape mismatch");
  if (grad) grad->assign(theta_.size(), 0.0);
  Mat delta = dY;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = widths_[l], out = widths_[l + 1];
    const Mat& y = cache.act[l];
    if (acts_[l] == Act::kTanh) {
      for (size_t i = 0; i < delta.a.size(); ++i) delta.a[i] *= 1.0 - y.a[i] * y.a[i];
    }
    if (grad) {
      const Mat& xin = (l == 0) ? cache.x : cache.act[l - 1];
      // dW = delta^T * xin, db = colsum(delta)
      gemm_tn(out, in, batch, delta.a.data(), xin.a.data(), grad->data() + w_off_[l], true);
      double* db = grad->data() + b_off_[l];
      for (int i = 0; i < batch; ++i) {
        const double* r = delta.row(i);
        for (int j = 0; j < out; ++j) db[j] += r[j];
      }
    }
    if (l > 0 || dX != nullptr) {
      Mat dprev(batch, in);
      gemm_nn(batch, in, out, delta.a.data(), theta_.data() + w_off_[l], dprev.a.data(), false);
      if (l == 0) {
        *dX = std::move(dprev);
      } else {
        delta = std::move(dprev);
      }
    }
  }
}

LstmStack::LstmStack(int input, int hidden, int layers, int output, uint64_t init_seed)
    : input_(input), hidden_(hidden), layers_(layers), output_(output) {
  if (input <= 0 || hidden <= 0 || layers <= 0 || output <= 0)
    throw ShapeError("LstmStack: bad dimensions");
  size_t total = 0;
  for (int l = 0; l < layers_; ++l) {
    w_off_.push_back(total);
    total += static_cast<size_t>(4 * hidden_) * in_size(l);
    u_off_.push_back(total);
    total += static_cast<size_t>(4 * hidden_) * hidden_;
    b_off_.push_back(total);
    total += 4 * hidden_;
  }
  pw_off_ = total;
  total += static_cast<size_t>(output_) * hidden_;
  pb_off_ = total;
  total += output_;
  theta_.assign(total, 0.0);
  RngStream rng(init_seed);
  for (int l = 0; l < layers_; ++l) {
    const int fan = in_size(l) + hidden_;
    init_uniform(theta_.data() + w_off_[l], static_cast<size_t>(4 * hidden_) * in_size(l), fan, rng);
    init_uniform(theta_.data() + u_off_[l], static_cast<size_t>(4 * hidden_) * hidden_, fan, rng);
    init_uniform(theta_.data() + b_off_[l], 4 * hidden_, fan, rng);
  }
  init_uniform(theta_.data() + pw_off_, static_cast<size_t>(output_) * hidden_, hidden_, rng);
  init_uniform(theta_.data() + pb_off_, output_, hidden_, rng);
}

LstmStack::State LstmStack::zero_state(int batch) const {
  State s;
  s.h.assign(layers_, Mat(batch, hidden_));
  s.c.assign(layers_, Mat(batch, hidden_));
  return s;
}

namespace {

// Splits a [batch x 4H] pre-activation block into gate activations.
struct Gates {
  Mat f, i, g, o;
};

}  // namespace

std::vector<Mat> LstmStack::forward(const std::vector<Mat>& xs, const State& init,
                                    Cache* cache) const {
  if (xs.empty()) throw ShapeError("LstmStack::forward: empty sequence");
  const int T = static_cast<int>(xs.size());
  const int batch = xs[0].rows;
  if (xs[0].cols != input_) throw ShapeError("LstmStack::forward: input width mismatch");

  if (cache) {
    cache->T = T;
    cache->batch = batch;
    cache->xs = xs;
    auto alloc = [&](std::vector<std::vector<Mat>>& m) {
      m.assign(layers_, std::vector<Mat>(T));
    };
    alloc(cache->f);
    alloc(cache->i);
    alloc(cache->g);
    alloc(cache->o);
    alloc(cache->c);
    alloc(cache->h);
  }

  std::vector<Mat> h = init.h, c = init.c;
  if (static_cast<int>(h.size()) != layers_) {
    h.assign(layers_, Mat(batch, hidden_));
    c.assign(layers_, Mat(batch, hidden_));
  }
  if (cache) {
    cache->h0 = h;
    cache->c0 = c;
  }
  const int H = hidden_;
  std::vector<Mat> outputs(T);

  for (int t = 0; t < T; ++t) {
    const Mat* xin = &xs[t];
    for (int l = 0; l < layers_; ++l) {
      const int in = in_size(l);
      Mat z(batch, 4 * H);
      gemm_nt(batch, 4 * H, in, xin->a.data(), theta_.data() + w_off_[l], z.a.data(), false);
      gemm_nt(batch, 4 * H, H, h[l].a.data(), theta_.data() + u_off_[l], z.a.data(), true);
      const double* b = theta_.data() + b_off_[l];
      Mat fg(batch, H), ig(batch, H), gg(batch, H), og(batch, H);
      for (int r = 0; r < batch; ++r) {
        const double* zr = z.row(r);
        double* fr = fg.row(r);
        double* ir = ig.row(r);
        double* gr = gg.row(r);
        double* orow = og.row(r);
        for (int j = 0; j < H; ++j) {
          fr[j] = sigmoid(zr[j] + b[j]);
          ir[j] = sigmoid(zr[H + j] + b[H + j]);
          gr[j] = std::tanh(zr[2 * H + j] + b[2 * H + j]);
          orow[j] = sigmoid(zr[3 * H + j] + b[3 * H + j]);
        }
      }
      Mat cn(batch, H), hn(batch, H);
      for (size_t idx = 0; idx < cn.a.size(); ++idx) {
        cn.a[idx] = fg.a[idx] * c[l].a[idx] + ig.a[idx] * gg.a[idx];
        hn.a[idx] = og.a[idx] * std::tanh(cn.a[idx]);
      }
      if (cache) {
        cache->f[l][t] = fg;
        cache->i[l][t] = ig;
        cache->g[l][t] = gg;
        cache->o[l][t] = og;
        cache->c[l][t] = cn;
        cache->h[l][t] = hn;
      }
      c[l] = std::move(cn);
      h[l] = std::move(hn);
      xin = &h[l];
    }
    Mat y(batch, output_);
    gemm_nt(batch, output_, H, h[layers_ - 1].a.data(), theta_.data() + pw_off_, y.a.data(), false);
    const double* pb = theta_.data() + pb_off_;
    for (int r = 0; r < batch; ++r) {
      double* yr = y.row(r);
      for (int j = 0; j < output_; ++j) yr[j] += pb[j];
    }
    outputs[t] = std::move(y);
  }
  return outputs;
}

Vec LstmStack::step_one(std::span<const double> x, State& state) const {
  std::vector<Mat> xs(1, Mat(1, input_));
  std::copy(x.begin(), x.end(), xs[0].a.begin());
  Cache cache;
  std::vector<Mat> y = forward(xs, state, &cache);
  for (int l = 0; l < layers_; ++l) {
    state.h[l] = cache.h[l][0];
    state.c[l] = cache.c[l][0];
  }
  return y[0].a;
}

void LstmStack::backward(const Cache& cache, const std::vector<Mat>& dys, Vec* grad,
                         std::vector<Mat>* dxs) const {
  const int T = cache.T, batch = cache.batch, H = hidden_;
  if (static_cast<int>(dys.size()) != T) throw ShapeError("LstmStack::backward: dys length mismatch");
  grad->assign(theta_.size(), 0.0);
  if (dxs) dxs->assign(T, Mat(batch, input_));

  // dh from the projection and from the layer above, per layer, current step
  std::vector<Mat> dh(layers_, Mat(batch, H));
  std::vector<Mat> dc(layers_, Mat(batch, H));
  // dh carried through the recurrence (from step t+1)
  std::vector<Mat> dh_next(layers_, Mat(batch, H));

  double* dWp = grad->data() + pw_off_;
  double* dbp = grad->data() + pb_off_;

  for (int t = T - 1; t >= 0; --t) {
    for (int l = 0; l < layers_; ++l) dh[l] = dh_next[l];

    if (dys[t].rows > 0) {
      const Mat& dy = dys[t];
      // projection grads and dh contribution to the top layer
      gemm_tn(output_, H, batch, dy.a.data(), cache.h[layers_ - 1][t].a.data(), dWp, true);
      for (int r = 0; r < batch; ++r) {
        const double* dyr = dy.row(r);
        for (int j = 0; j < output_; ++j) dbp[j] += dyr[j];
      }
      gemm_nn(batch, H, output_, dy.a.data(), theta_.data() + pw_off_, dh[layers_ - 1].a.data(), true);
    }

    for (int l = layers_ - 1; l >= 0; --l) {
      const Mat& f = cache.f[l][t];
      const Mat& ig = cache.i[l][t];
      const Mat& g = cache.g[l][t];
      const Mat& o = cache.o[l][t];
      const Mat& c = cache.c[l][t];
      const Mat& cprev = (t > 0) ? cache.c[l][t - 1] : cache.c0[l];
      const Mat& hprev = (t > 0) ? cache.h[l][t - 1] : cache.h0[l];

      Mat dz(batch, 4 * H);
      for (int r = 0; r < batch; ++r) {
        const double* dhr = dh[l].row(r);
        double* dcr = dc[l].row(r);
        const double* fr = f.row(r);
        const double* ir = ig.row(r);
        const double* gr = g.row(r);
        const double* orow = o.row(r);
        const double* cr = c.row(r);
        double* dzr = dz.row(r);
        for (int j = 0; j < H; ++j) {
          const double tc = std::tanh(cr[j]);
          const double do_ = dhr[j] * tc;
          const double dct = dhr[j] * orow[j] * (1.0 - tc * tc) + dcr[j];
          const double df = dct * cprev.at(r, j);
          const double di = dct * gr[j];
          const double dg = dct * ir[j];
          dzr[j] = df * fr[j] * (1.0 - fr[j]);
          dzr[H + j] = di * ir[j] * (1.0 - ir[j]);
          dzr[2 * H + j] = dg * (1.0 - gr[j] * gr[j]);
          dzr[3 * H + j] = do_ * orow[j] * (1.0 - orow[j]);
          dcr[j] = dct * fr[j];  // carried to step t-1
        }
      }

      const int in = in_size(l);
      const Mat& xin = (l == 0) ? cache.xs[t] : cache.h[l - 1][t];
      gemm_tn(4 * H, in, batch, dz.a.data(), xin.a.data(), grad->data() + w_off_[l], true);
      gemm_tn(4 * H, H, batch, dz.a.data(), hprev.a.data(), grad->data() + u_off_[l], true);
      double* db = grad->data() + b_off_[l];
      for (int r = 0; r < batch; ++r) {
        const double* dzr = dz.row(r);
        for (int j = 0; j < 4 * H; ++j) db[j] += dzr[j];
      }
      // dh to previous step (recurrence) and dx to layer below
      gemm_nn(batch, H, 4 * H, dz.a.data(), theta_.data() + u_off_[l], dh_next[l].a.data(), false);
      if (l > 0) {
        gemm_nn(batch, H, 4 * H, dz.a.data(), theta_.data() + w_off_[l], dh[l - 1].a.data(), true);
      } else if (dxs) {
        gemm_nn(batch, input_, 4 * H, dz.a.data(), theta_.data() + w_off_[0],
                (*dxs)[t].a.data(), false);
      }
    }
  }
}

void adam_step(Vec& params, const Vec& grad, AdamState& st) {
  if (params.size() != grad.size()) throw ShapeError("adam_step: grad size mismatch");
  if (st.m.empty()) {
    st.m.assign(params.size(), 0.0);
    st.v.assign(params.size(), 0.0);
  }
  if (st.m.size() != params.size()) throw ShapeError("adam_step: moment size mismatch");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

}  // namespace oransim::nn
