#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oransim/common.hpp"
#include "oransim/rng.hpp"

namespace oransim::nn {

using Vec = std::vector<double>;

// Dense row-major matrix.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// C[m x n] = A[m x k] * B[n x k]^T  (dot products of rows)
void gemm_nt(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
// C[m x n] = A[m x k] * B[k x n]
void gemm_nn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);
// C[m x n] = A[k x m]^T * B[k x n]
void gemm_tn(int m, int n, int k, const double* A, const double* B, double* C, bool accumulate);

enum class Act : uint8_t { kTanh, kLinear };

// Fully connected stack with per-layer tanh/linear activations. Parameters
// live in one flat vector (per layer: weight [out x in] row-major, then
// bias [out]) so the optimizer, checkpoints and gradient checks all see the
// same layout.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> widths, std::vector<Act> acts, uint64_t init_seed);

  int input_size() const { return widths_.front(); }
  int output_size() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(acts_.size()); }
  size_t num_params() const { return theta_.size(); }
  const Vec& params() const { return theta_; }
  Vec& params() { return theta_; }
  const std::vector<int>& widths() const { return widths_; }

  struct Cache {
    Mat x;                    // input batch
    std::vector<Mat> act;     // post-activation per layer
  };

  // Batch forward: X is [batch x input]. Pure; all state goes to the cache.
  Mat forward(const Mat& X, Cache* cache = nullptr) const;
  Vec forward_one(std::span<const double> x) const;

  // Exact gradients of the cached forward. dY is [batch x output]. Writes the
  // parameter gradient (flat, same layout as params) into grad; optionally
  // the input gradient into dX.
  void backward(const Cache& cache, const Mat& dY, Vec* grad, Mat* dX = nullptr) const;

  size_t weight_offset(int layer) const { return w_off_[layer]; }
  size_t bias_offset(int layer) const { return b_off_[layer]; }

 private:
  std::vector<int> widths_;
  std::vector<Act> acts_;
  std::vector<size_t> w_off_, b_off_;
  Vec theta_;
};

// Two-deep (configurable) LSTM with sigmoid gates, tanh candidate, and a
// linear output projection on the top layer's hidden state. Gate row order
// within each 4H block: f, i, g (candidate), o.
class LstmStack {
 public:
  LstmStack() = default;
  LstmStack(int input, int hidden, int layers, int output, uint64_t init_seed);

  int input_size() const { return input_; }
  int hidden_size() const { return hidden_; }
  int layers() const { return layers_; }
  int output_size() const { return output_; }
  size_t num_params() const { return theta_.size(); }
  const Vec& params() const { return theta_; }
  Vec& params() { return theta_; }

  struct Cache {
    int T = 0, batch = 0;
    std::vector<Mat> xs;                       // per-step input batches
    std::vector<Mat> h0, c0;                   // initial state per layer
    // [layer][step] activation records
    std::vector<std::vector<Mat>> f, i, g, o, c, h;
  };

  struct State {
    std::vector<Mat> h, c;  // [layer], each [batch x hidden]
  };
  State zero_state(int batch) const;

  // Runs the full sequence; returns the per-step projected outputs
  // [batch x output]. Pure given init.
  std::vector<Mat> forward(const std::vector<Mat>& xs, const State& init,
                           Cache* cache = nullptr) const;

  // Single-step advance used for streaming inference; no cache, mutates state.
  Vec step_one(std::span<const double> x, State& state) const;

  // Full backpropagation through time over the cached window. dys matches the
  // forward outputs; entries may be empty matrices (treated as zero). When
  // dxs is given it receives the per-step input gradients.
  void backward(const Cache& cache, const std::vector<Mat>& dys, Vec* grad,
                std::vector<Mat>* dxs = nullptr) const;

  // Parameter block offsets (flat layout, per layer: W [4H x in_l], U [4H x H],
  // b [4H]; then projection Wp [out x H], bp [out]).
  size_t w_off(int layer) const { return w_off_[layer]; }
  size_t u_off(int layer) const { return u_off_[layer]; }
  size_t b_off(int layer) const { return b_off_[layer]; }
  size_t proj_w_off() const { return pw_off_; }
  size_t proj_b_off() const { return pb_off_; }

 private:
  int input_ = 0, hidden_ = 0, layers_ = 0, output_ = 0;
  std::vector<size_t> w_off_, u_off_, b_off_;
  size_t pw_off_ = 0, pb_off_ = 0;
  Vec theta_;

  int in_size(int layer) const { return layer == 0 ? input_ : hidden_; }
};

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Vec m, v;
};

// Standard Adam with bias correction. Resizes the moment buffers on first
// use; throws ShapeError if sizes disagree afterwards.
void adam_step(Vec& params, const Vec& grad, AdamState& st);

}  // namespace oransim::nn
