#pragma once

#include <string>
#include <vector>

#include "dsad/activation.hpp"
#include "dsad/matrix.hpp"
#include "dsad/rng.hpp"

// Differentiable primitives. Each layer follows the same gradient contract:
//   forward(x, cache)  — const; fills the cache when training
//   backward(dout, cache) — returns dL/dx and accumulates dL/dparam into
//                           Parameter::grad
// forward never touches model state, so concurrent forward calls on one
// instance are safe; backward requires exclusive access.

namespace dsad {

struct Parameter {
  std::string name;
  Matrix values;
  Matrix grad;

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)), values(rows, cols), grad(rows, cols) {}

  void zero_grad() { grad.zero(); }
};

void xavier_uniform(Matrix& w, int fan_in, int fan_out, Rng& rng);
void zero_grads(const std::vector<Parameter*>& params);

enum class LayerKind { linear, dilated_conv, attention, gcn, positional_embedding };

struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  int width = 0;
  int kernel_size = 3;  // conv only; must be odd
  int dilation = 1;     // conv only
  int heads = 1;        // attention only

  void validate() const;
};

// ---------------------------------------------------------------------------

class Linear {
 public:
  struct Cache {
    Matrix x;
  };

  Linear(const std::string& name, int d_in, int d_out, Rng& rng);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dout, const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  int d_in() const { return w.values.rows(); }
  int d_out() const { return w.values.cols(); }

  Parameter w;
  Parameter b;
};

// 1-D convolution along time with symmetric zero padding, so the output
// keeps the input length for any odd kernel and dilation.
class DilatedConv {
 public:
  struct Cache {
    Matrix x;
  };

  DilatedConv(const std::string& name, int d_in, const LayerSpec& spec, Rng& rng);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dout, const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  int kernel_size() const { return ksize_; }
  int dilation() const { return dilation_; }

  Parameter w;  // (ksize * d_in) x d_out, tap-major rows
  Parameter b;  // 1 x d_out

 private:
  int ksize_;
  int dilation_;
};

// Residual block: conv -> activation -> conv, plus identity skip.
class ConvBlock {
 public:
  struct Cache {
    DilatedConv::Cache c1, c2;
    Matrix pre;  // output of conv1 before the activation
  };

  ConvBlock(const std::string& name, int width, int kernel_size, int dilation, Rng& rng);

  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dout, const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  DilatedConv conv1, conv2;
};

// Self-attention whose softmax weights are gated elementwise by a temporal
// adjacency matrix and then row-renormalized, keeping each row on the
// simplex. With the identity adjacency every position attends to itself;
// a wide adjacency recovers plain softmax attention.
class AdjacencyAttention {
 public:
  struct Cache {
    Matrix x;
    Matrix adjacency;
    Matrix q, k, v;                        // full-width projections
    std::vector<Matrix> softmax;           // per head, pre-gate softmax P
    std::vector<Matrix> weights;           // per head, renormalized R
    std::vector<std::vector<double>> gate_rowsum;  // per head, rowsum of P.*A
    Matrix concat;                         // concatenated head outputs
  };

  AdjacencyAttention(const std::string& name, int width, int heads, Rng& rng);

  Matrix forward(const Matrix& x, const Matrix& adjacency, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dout, const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  // Post-renormalization attention weights of one head (test surface).
  Matrix attention_weights(const Matrix& x, const Matrix& adjacency, int head) const;

  int heads() const { return heads_; }
  int head_dim() const { return wq.values.cols() / heads_; }

  Parameter wq, wk, wv, wo;
  Parameter bq, bk, bv, bo;

 private:
  int heads_;
};

// out = act(adjacency_norm * x * W); adjacency_norm must be row-stochastic.
class GraphConv {
 public:
  struct Cache {
    Matrix ax;   // adjacency_norm * x
    Matrix pre;  // ax * W
    Matrix adjacency_norm;
  };

  GraphConv(const std::string& name, int d_in, int d_out, Rng& rng);

  Matrix forward(const Matrix& x, const Matrix& adjacency_norm, Cache* cache = nullptr) const;
  Matrix backward(const Matrix& dout, const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  Parameter w;
};

// Learnable per-position embedding added to the first T rows of the input.
class PositionalEmbedding {
 public:
  PositionalEmbedding(const std::string& name, int t_max, int width, Rng& rng);

  Matrix forward(const Matrix& x) const;  // throws capacity_error when T > t_max
  Matrix backward(const Matrix& dout, int t);
  void collect_parameters(std::vector<Parameter*>& out);

  int t_max() const { return table.values.rows(); }

  Parameter table;
};

// Classifier head shared by both streams: sigmoid frame scores from a linear
// projection plus visual-text alignment scores against the anomaly
// embedding, a(t) = (cos(h_t, e_anomaly) + 1) / 2.
class ScoreHead {
 public:
  struct Cache {
    Matrix h;
    std::vector<double> scores;
    std::vector<double> cos;
  };

  ScoreHead(const std::string& name, int width, Rng& rng);

  void forward(const Matrix& h, std::vector<double>& scores, std::vector<double>& align,
               Cache* cache = nullptr) const;
  // dH from both score and alignment paths.
  Matrix backward(const std::vector<double>& dscores, const std::vector<double>& dalign,
                  const Cache& cache);
  void collect_parameters(std::vector<Parameter*>& out);

  Linear classifier;
  Parameter class_embeddings;  // row 0: anomaly, row 1: normal
};

}  // namespace dsad
