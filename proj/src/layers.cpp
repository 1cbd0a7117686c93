#include "dsad/layers.hpp"

#include <cmath>

#include "dsad/errors.hpp"
#include "dsad/kernels.hpp"

namespace dsad {

void xavier_uniform(Matrix& w, int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
}

void zero_grads(const std::vector<Parameter*>& params) {
  for (Parameter* p : params) p->zero_grad();
}

void LayerSpec::validate() const {
  if (width <= 0) throw invalid_parameter("LayerSpec: width must be positive");
  if (kind == LayerKind::dilated_conv) {
    if (kernel_size < 1 || kernel_size % 2 == 0) {
      throw invalid_parameter("LayerSpec: kernel_size must be odd and positive");
    }
    if (dilation < 1) throw invalid_parameter("LayerSpec: dilation must be >= 1");
  }
  if (kind == LayerKind::attention && heads < 1) {
    throw invalid_parameter("LayerSpec: heads must be >= 1");
  }
}

// ---------------------------------------------------------------------------

Linear::Linear(const std::string& name, int d_in, int d_out, Rng& rng)
    : w(name + ".w", d_in, d_out), b(name + ".b", 1, d_out) {
  xavier_uniform(w.values, d_in, d_out, rng);
}

Matrix Linear::forward(const Matrix& x, Cache* cache) const {
  if (x.cols() != w.values.rows()) throw dimension_error("Linear: input width mismatch");
  Matrix out(x.rows(), w.values.cols());
  kernels::matmul(x, w.values, out);
  for (int i = 0; i < out.rows(); ++i) {
    double* row = out.row(i);
    for (int j = 0; j < out.cols(); ++j) row[j] += b.values.data()[j];
  }
  if (cache) cache->x = x;
  return out;
}

Matrix Linear::backward(const Matrix& dout, const Cache& cache) {
  kernels::matmul_tn_acc(cache.x, dout, w.grad);
  for (int i = 0; i < dout.rows(); ++i) {
    const double* row = dout.row(i);
    for (int j = 0; j < dout.cols(); ++j) b.grad.data()[j] += row[j];
  }
  Matrix dx(cache.x.rows(), cache.x.cols());
  kernels::matmul_nt(dout, w.values, dx);
  return dx;
}

void Linear::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------------------

DilatedConv::DilatedConv(const std::string& name, int d_in, const LayerSpec& spec, Rng& rng)
    : w(name + ".w", spec.kernel_size * d_in, spec.width),
      b(name + ".b", 1, spec.width),
      ksize_(spec.kernel_size),
      dilation_(spec.dilation) {
  if (spec.kind != LayerKind::dilated_conv) throw invalid_parameter("DilatedConv: wrong kind");
  spec.validate();
  xavier_uniform(w.values, ksize_ * d_in, spec.width, rng);
}

Matrix DilatedConv::forward(const Matrix& x, Cache* cache) const {
  Matrix out(x.rows(), w.values.cols());
  kernels::conv1d(x, w.values, b.values, ksize_, dilation_, out);
  if (cache) cache->x = x;
  return out;
}

Matrix DilatedConv::backward(const Matrix& dout, const Cache& cache) {
  kernels::conv1d_backward_weights(cache.x, dout, ksize_, dilation_, w.grad, b.grad);
  Matrix dx(cache.x.rows(), cache.x.cols());
  kernels::conv1d_backward_data(dout, w.values, ksize_, dilation_, dx);
  return dx;
}

void DilatedConv::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&w);
  out.push_back(&b);
}

// ---------------------------------------------------------------------------

ConvBlock::ConvBlock(const std::string& name, int width, int kernel_size, int dilation, Rng& rng)
    : conv1(name + ".conv1", width,
            LayerSpec{LayerKind::dilated_conv, width, kernel_size, dilation, 1}, rng),
      conv2(name + ".conv2", width,
            LayerSpec{LayerKind::dilated_conv, width, kernel_size, dilation, 1}, rng) {}

Matrix ConvBlock::forward(const Matrix& x, Cache* cache) const {
  Matrix pre = conv1.forward(x, cache ? &cache->c1 : nullptr);
  if (cache) cache->pre = pre;
  gelu_inplace(pre);
  Matrix out = conv2.forward(pre, cache ? &cache->c2 : nullptr);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += x.data()[i];
  return out;
}

Matrix ConvBlock::backward(const Matrix& dout, const Cache& cache) {
  Matrix dact = conv2.backward(dout, cache.c2);
  Matrix dpre(dact.rows(), dact.cols());
  gelu_backward(cache.pre, dact, dpre);
  Matrix dx = conv1.backward(dpre, cache.c1);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += dout.data()[i];  // skip path
  return dx;
}

void ConvBlock::collect_parameters(std::vector<Parameter*>& out) {
  conv1.collect_parameters(out);
  conv2.collect_parameters(out);
}

// ---------------------------------------------------------------------------

namespace {

Matrix head_slice(const Matrix& m, int head, int dh) {
  Matrix s(m.rows(), dh);
  for (int i = 0; i < m.rows(); ++i) {
    const double* src = m.row(i) + head * dh;
    double* dst = s.row(i);
    for (int j = 0; j < dh; ++j) dst[j] = src[j];
  }
  return s;
}

void head_scatter_add(Matrix& full, const Matrix& s, int head, int dh) {
  for (int i = 0; i < s.rows(); ++i) {
    double* dst = full.row(i) + head * dh;
    const double* src = s.row(i);
    for (int j = 0; j < dh; ++j) dst[j] += src[j];
  }
}

void softmax_rows(Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    double* row = m.row(i);
    double mx = row[0];
    for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < m.cols(); ++j) row[j] *= inv;
  }
}

}  // namespace

AdjacencyAttention::AdjacencyAttention(const std::string& name, int width, int heads, Rng& rng)
    : wq(name + ".wq", width, width),
      wk(name + ".wk", width, width),
      wv(name + ".wv", width, width),
      wo(name + ".wo", width, width),
      bq(name + ".bq", 1, width),
      bk(name + ".bk", 1, width),
      bv(name + ".bv", 1, width),
      bo(name + ".bo", 1, width),
      heads_(heads) {
  if (heads < 1 || width % heads != 0) {
    throw invalid_parameter("AdjacencyAttention: width must be divisible by heads");
  }
  xavier_uniform(wq.values, width, width, rng);
  xavier_uniform(wk.values, width, width, rng);
  xavier_uniform(wv.values, width, width, rng);
  xavier_uniform(wo.values, width, width, rng);
}

Matrix AdjacencyAttention::forward(const Matrix& x, const Matrix& adjacency, Cache* cache) const {
  const int t = x.rows();
  const int d = wq.values.rows();
  if (x.cols() != d) throw dimension_error("AdjacencyAttention: input width mismatch");
  if (adjacency.rows() != t || adjacency.cols() != t) {
    throw dimension_error("AdjacencyAttention: adjacency/sequence length mismatch");
  }
  const int dh = d / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto project = [&](const Parameter& w, const Parameter& b) {
    Matrix out(t, d);
    kernels::matmul(x, w.values, out);
    for (int i = 0; i < t; ++i) {
      double* row = out.row(i);
      for (int j = 0; j < d; ++j) row[j] += b.values.data()[j];
    }
    return out;
  };
  Matrix q = project(wq, bq), k = project(wk, bk), v = project(wv, bv);

  Matrix concat(t, d);
  if (cache) {
    cache->softmax.assign(heads_, Matrix());
    cache->weights.assign(heads_, Matrix());
    cache->gate_rowsum.assign(heads_, {});
  }
  for (int h = 0; h < heads_; ++h) {
    Matrix qh = head_slice(q, h, dh);
    Matrix kh = head_slice(k, h, dh);
    Matrix vh = head_slice(v, h, dh);
    Matrix logits(t, t);
    kernels::matmul_nt(qh, kh, logits);
    for (std::size_t i = 0; i < logits.size(); ++i) logits.data()[i] *= scale;
    softmax_rows(logits);  // logits now holds P

    // Gate by adjacency, renormalize rows.
    Matrix weights(t, t);
    std::vector<double> rowsum(t);
    for (int i = 0; i < t; ++i) {
      double s = 0.0;
      for (int j = 0; j < t; ++j) {
        weights(i, j) = logits(i, j) * adjacency(i, j);
        s += weights(i, j);
      }
      rowsum[i] = s;
      const double inv = 1.0 / s;
      for (int j = 0; j < t; ++j) weights(i, j) *= inv;
    }

    Matrix oh(t, dh);
    kernels::matmul(weights, vh, oh);
    for (int i = 0; i < t; ++i) {
      double* dst = concat.row(i) + h * dh;
      const double* src = oh.row(i);
      for (int j = 0; j < dh; ++j) dst[j] = src[j];
    }
    if (cache) {
      cache->softmax[h] = std::move(logits);
      cache->weights[h] = std::move(weights);
      cache->gate_rowsum[h] = std::move(rowsum);
    }
  }

  Matrix out(t, d);
  kernels::matmul(concat, wo.values, out);
  for (int i = 0; i < t; ++i) {
    double* row = out.row(i);
    for (int j = 0; j < d; ++j) row[j] += bo.values.data()[j];
  }
  if (cache) {
    cache->x = x;
    cache->adjacency = adjacency;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
  }
  return out;
}

Matrix AdjacencyAttention::attention_weights(const Matrix& x, const Matrix& adjacency,
                                             int head) const {
  Cache cache;
  forward(x, adjacency, &cache);
  return cache.weights.at(head);
}

Matrix AdjacencyAttention::backward(const Matrix& dout, const Cache& cache) {
  const int t = cache.x.rows();
  const int d = wq.values.rows();
  const int dh = d / heads_;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  kernels::matmul_tn_acc(cache.concat, dout, wo.grad);
  for (int i = 0; i < t; ++i) {
    const double* row = dout.row(i);
    for (int j = 0; j < d; ++j) bo.grad.data()[j] += row[j];
  }
  Matrix dconcat(t, d);
  kernels::matmul_nt(dout, wo.values, dconcat);

  Matrix dq(t, d), dk(t, d), dv(t, d);
  for (int h = 0; h < heads_; ++h) {
    const Matrix& softmax = cache.softmax[h];
    const Matrix& weights = cache.weights[h];
    const std::vector<double>& rowsum = cache.gate_rowsum[h];
    Matrix qh = head_slice(cache.q, h, dh);
    Matrix kh = head_slice(cache.k, h, dh);
    Matrix vh = head_slice(cache.v, h, dh);
    Matrix doh = head_slice(dconcat, h, dh);

    Matrix dweights(t, t);
    kernels::matmul_nt(doh, vh, dweights);
    Matrix dvh(t, dh);
    kernels::matmul_tn_acc(weights, doh, dvh);

    // Renormalization backward: R = M / rowsum(M), gate backward: M = P .* A,
    // then softmax backward onto the logits.
    Matrix dlogits(t, t);
    for (int i = 0; i < t; ++i) {
      const double* dw_row = dweights.row(i);
      const double* r_row = weights.row(i);
      const double* p_row = softmax.row(i);
      const double* a_row = cache.adjacency.row(i);
      double* dl_row = dlogits.row(i);
      double wdot = 0.0;
      for (int j = 0; j < t; ++j) wdot += dw_row[j] * r_row[j];
      const double inv = 1.0 / rowsum[i];
      double pdot = 0.0;
      // dM = (dR - <dR, R>) / s ; dP = dM .* A ; store dP in dl_row.
      for (int j = 0; j < t; ++j) {
        dl_row[j] = (dw_row[j] - wdot) * inv * a_row[j];
        pdot += dl_row[j] * p_row[j];
      }
      for (int j = 0; j < t; ++j) dl_row[j] = p_row[j] * (dl_row[j] - pdot);
    }

    Matrix dqh(t, dh);
    kernels::matmul(dlogits, kh, dqh);
    Matrix dkh(t, dh);
    kernels::matmul_tn_acc(dlogits, qh, dkh);
    for (std::size_t i = 0; i < dqh.size(); ++i) dqh.data()[i] *= scale;
    for (std::size_t i = 0; i < dkh.size(); ++i) dkh.data()[i] *= scale;

    head_scatter_add(dq, dqh, h, dh);
    head_scatter_add(dk, dkh, h, dh);
    head_scatter_add(dv, dvh, h, dh);
  }

  kernels::matmul_tn_acc(cache.x, dq, wq.grad);
  kernels::matmul_tn_acc(cache.x, dk, wk.grad);
  kernels::matmul_tn_acc(cache.x, dv, wv.grad);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d; ++j) {
      bq.grad.data()[j] += dq(i, j);
      bk.grad.data()[j] += dk(i, j);
      bv.grad.data()[j] += dv(i, j);
    }
  }

  Matrix dx(t, d);
  kernels::matmul_nt(dq, wq.values, dx);
  Matrix tmp(t, d);
  kernels::matmul_nt(dk, wk.values, tmp);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += tmp.data()[i];
  kernels::matmul_nt(dv, wv.values, tmp);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += tmp.data()[i];
  return dx;
}

void AdjacencyAttention::collect_parameters(std::vector<Parameter*>& out) {
  for (Parameter* p : {&wq, &wk, &wv, &wo, &bq, &bk, &bv, &bo}) out.push_back(p);
}

// ---------------------------------------------------------------------------

GraphConv::GraphConv(const std::string& name, int d_in, int d_out, Rng& rng)
    : w(name + ".w", d_in, d_out) {
  xavier_uniform(w.values, d_in, d_out, rng);
}

Matrix GraphConv::forward(const Matrix& x, const Matrix& adjacency_norm, Cache* cache) const {
  const int t = x.rows();
  if (adjacency_norm.rows() != t || adjacency_norm.cols() != t) {
    throw dimension_error("GraphConv: adjacency/sequence length mismatch");
  }
  Matrix ax(t, x.cols());
  kernels::matmul(adjacency_norm, x, ax);
  Matrix pre(t, w.values.cols());
  kernels::matmul(ax, w.values, pre);
  Matrix out = pre;
  gelu_inplace(out);
  if (cache) {
    cache->ax = std::move(ax);
    cache->pre = std::move(pre);
    cache->adjacency_norm = adjacency_norm;
  }
  return out;
}

Matrix GraphConv::backward(const Matrix& dout, const Cache& cache) {
  Matrix dpre(dout.rows(), dout.cols());
  gelu_backward(cache.pre, dout, dpre);
  kernels::matmul_tn_acc(cache.ax, dpre, w.grad);
  Matrix dax(cache.ax.rows(), cache.ax.cols());
  kernels::matmul_nt(dpre, w.values, dax);
  Matrix dx(dax.rows(), dax.cols());
  kernels::matmul_tn_acc(cache.adjacency_norm, dax, dx);  // adjacency_norm^T * dax
  return dx;
}

void GraphConv::collect_parameters(std::vector<Parameter*>& out) { out.push_back(&w); }

// ---------------------------------------------------------------------------

PositionalEmbedding::PositionalEmbedding(const std::string& name, int t_max, int width, Rng& rng)
    : table(name + ".table", t_max, width) {
  xavier_uniform(table.values, width, width, rng);
}

Matrix PositionalEmbedding::forward(const Matrix& x) const {
  if (x.rows() > table.values.rows()) {
    throw capacity_error("PositionalEmbedding: sequence length " + std::to_string(x.rows()) +
                         " exceeds table capacity " + std::to_string(table.values.rows()));
  }
  if (x.cols() != table.values.cols()) {
    throw dimension_error("PositionalEmbedding: feature width mismatch");
  }
  Matrix out = x;
  for (int i = 0; i < x.rows(); ++i) {
    double* row = out.row(i);
    const double* emb = table.values.row(i);
    for (int j = 0; j < x.cols(); ++j) row[j] += emb[j];
  }
  return out;
}

Matrix PositionalEmbedding::backward(const Matrix& dout, int t) {
  for (int i = 0; i < t; ++i) {
    double* grad = table.grad.row(i);
    const double* row = dout.row(i);
    for (int j = 0; j < dout.cols(); ++j) grad[j] += row[j];
  }
  return dout;
}

void PositionalEmbedding::collect_parameters(std::vector<Parameter*>& out) {
  out.push_back(&table);
}

// ---------------------------------------------------------------------------

ScoreHead::ScoreHead(const std::string& name, int width, Rng& rng)
    : classifier(name + ".classifier", width, 1, rng),
      class_embeddings(name + ".class_embeddings", 2, width) {
  // Orthogonal unit-norm anomaly/normal embeddings.
  std::vector<double> a(width), n(width);
  for (int j = 0; j < width; ++j) a[j] = rng.normal();
  for (int j = 0; j < width; ++j) n[j] = rng.normal();
  double na = 0.0;
  for (double v : a) na += v * v;
  na = std::sqrt(na);
  for (int j = 0; j < width; ++j) a[j] /= na;
  double proj = 0.0;
  for (int j = 0; j < width; ++j) proj += a[j] * n[j];
  for (int j = 0; j < width; ++j) n[j] -= proj * a[j];
  double nn = 0.0;
  for (double v : n) nn += v * v;
  nn = std::sqrt(nn);
  for (int j = 0; j < width; ++j) n[j] /= nn;
  for (int j = 0; j < width; ++j) {
    class_embeddings.values(0, j) = a[j];
    class_embeddings.values(1, j) = n[j];
  }
}

namespace {
constexpr double kNormFloor = 1e-12;
}

void ScoreHead::forward(const Matrix& h, std::vector<double>& scores, std::vector<double>& align,
                        Cache* cache) const {
  const int t = h.rows();
  const int d = h.cols();
  scores.resize(t);
  align.resize(t);
  std::vector<double> cos(t);
  const double* e = class_embeddings.values.row(0);
  double enorm = 0.0;
  for (int j = 0; j < d; ++j) enorm += e[j] * e[j];
  enorm = std::sqrt(enorm);
  for (int i = 0; i < t; ++i) {
    const double* row = h.row(i);
    double logit = classifier.b.values.data()[0];
    double dotv = 0.0, hnorm = 0.0;
    for (int j = 0; j < d; ++j) {
      logit += row[j] * classifier.w.values(j, 0);
      dotv += row[j] * e[j];
      hnorm += row[j] * row[j];
    }
    hnorm = std::sqrt(hnorm);
    scores[i] = sigmoid(logit);
    cos[i] = dotv / std::max(hnorm * enorm, kNormFloor);
    align[i] = 0.5 * (cos[i] + 1.0);
  }
  if (cache) {
    cache->h = h;
    cache->scores = scores;
    cache->cos = cos;
  }
}

Matrix ScoreHead::backward(const std::vector<double>& dscores, const std::vector<double>& dalign,
                           const Cache& cache) {
  const int t = cache.h.rows();
  const int d = cache.h.cols();
  Matrix dh(t, d);
  const double* e = class_embeddings.values.row(0);
  double enorm2 = 0.0;
  for (int j = 0; j < d; ++j) enorm2 += e[j] * e[j];
  const double enorm = std::sqrt(enorm2);
  double* de = class_embeddings.grad.row(0);

  for (int i = 0; i < t; ++i) {
    const double* hrow = cache.h.row(i);
    double* drow = dh.row(i);
    // Classifier path through the sigmoid.
    const double s = cache.scores[i];
    const double dlogit = dscores[i] * s * (1.0 - s);
    classifier.b.grad.data()[0] += dlogit;
    for (int j = 0; j < d; ++j) {
      classifier.w.grad(j, 0) += dlogit * hrow[j];
      drow[j] += dlogit * classifier.w.values(j, 0);
    }
    // Alignment path through the cosine.
    const double dcos = 0.5 * dalign[i];
    if (dcos != 0.0) {
      double hnorm2 = 0.0;
      for (int j = 0; j < d; ++j) hnorm2 += hrow[j] * hrow[j];
      const double hnorm = std::sqrt(hnorm2);
      const double denom = hnorm * enorm;
      if (denom > kNormFloor) {
        const double c = cache.cos[i];
        const double inv = 1.0 / denom;
        for (int j = 0; j < d; ++j) {
          drow[j] += dcos * (e[j] * inv - c * hrow[j] / hnorm2);
          de[j] += dcos * (hrow[j] * inv - c * e[j] / enorm2);
        }
      }
    }
  }
  return dh;
}

void ScoreHead::collect_parameters(std::vector<Parameter*>& out) {
  classifier.collect_parameters(out);
  out.push_back(&class_embeddings);
}

}  // namespace dsad
