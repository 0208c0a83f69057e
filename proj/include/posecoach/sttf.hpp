// Copyright 2026 The posecoach Authors
// SPDX-License-Identifier: Apache-2.0

// Small spatial-temporal transformer scorer. Attention runs over the joints of
// each frame, the per-frame outputs are flattened and projected to one token,
// then attention runs over frames. Gradients are derived by hand.
//
// All tensors are row-major doubles living in one flat parameter vector; a
// Layout maps named slices onto it so checkpoints are just config + vector.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "posecoach/assessment.hpp"
#include "posecoach/errors.hpp"
#include "posecoach/normalization.hpp"
#include "posecoach/skeleton.hpp"

namespace posecoach::sttf {

struct STTFConfig {
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t spatial_layers = 2;
  std::size_t temporal_layers = 2;
  std::size_t seq_len = 64;
  std::size_t n_joints = kNumJoints;
  std::uint64_t seed = 0;

  friend bool operator==(const STTFConfig&, const STTFConfig&) = default;
};

inline constexpr std::size_t kNumScores = 3;  // joint, pace, range

inline void validate(const STTFConfig& c) {
  if (c.d_model == 0 || c.n_heads == 0) throw ValidationError("sttf: d_model and n_heads must be positive");
  if (c.d_model % c.n_heads != 0) throw ValidationError("sttf: d_model must be divisible by n_heads");
  if (c.seq_len < 2) throw ValidationError("sttf: seq_len must be >= 2");
  if (c.n_joints != kNumJoints) throw ValidationError("sttf: n_joints must be 17");
}

// --- parameter layout -------------------------------------------------------

struct Slice {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

struct LinearP {
  Slice w;  // in x out
  Slice b;  // 1 x out
};

struct NormP {
  Slice gain;
  Slice bias;
};

struct BlockP {
  NormP ln1;
  LinearP q, k, v, o;
  NormP ln2;
  LinearP fc1, fc2;
};

struct NamedSlice {
  std::string name;
  std::string kind;  // layer type, used to spread gradient checks
  Slice slice;
};

struct Layout {
  LinearP embed;
  Slice spatial_pos;
  std::vector<BlockP> spatial;
  NormP spatial_norm;
  LinearP flatten;
  Slice temporal_pos;
  std::vector<BlockP> temporal;
  NormP temporal_norm;
  LinearP mistake_head;
  LinearP score_head;
  std::vector<NamedSlice> named;
  std::size_t total = 0;
};

namespace detail {

class LayoutBuilder {
 public:
  explicit LayoutBuilder(Layout& l) : l_(l) {}

  Slice take(const std::string& name, const std::string& kind, std::size_t rows, std::size_t cols) {
    Slice s{l_.total, rows, cols};
    l_.total += rows * cols;
    l_.named.push_back({name, kind, s});
    return s;
  }
  LinearP linear(const std::string& name, const std::string& kind, std::size_t in, std::size_t out) {
    LinearP p;
    p.w = take(name + ".w", kind + ".w", in, out);
    p.b = take(name + ".b", kind + ".b", 1, out);
    return p;
  }
  NormP norm(const std::string& name, std::size_t d) {
    NormP p;
    p.gain = take(name + ".gain", "layernorm.gain", 1, d);
    p.bias = take(name + ".bias", "layernorm.bias", 1, d);
    return p;
  }
  BlockP block(const std::string& name, std::size_t d) {
    BlockP b;
    b.ln1 = norm(name + ".ln1", d);
    b.q = linear(name + ".q", "attention.q", d, d);
    b.k = linear(name + ".k", "attention.k", d, d);
    b.v = linear(name + ".v", "attention.v", d, d);
    b.o = linear(name + ".o", "attention.o", d, d);
    b.ln2 = norm(name + ".ln2", d);
    b.fc1 = linear(name + ".fc1", "mlp.fc1", d, 2 * d);
    b.fc2 = linear(name + ".fc2", "mlp.fc2", 2 * d, d);
    return b;
  }

 private:
  Layout& l_;
};

}  // namespace detail

inline Layout make_layout(const STTFConfig& c) {
  validate(c);
  Layout l;
  detail::LayoutBuilder b(l);
  const std::size_t d = c.d_model;
  l.embed = b.linear("embed", "embed", 2, d);
  l.spatial_pos = b.take("spatial_pos", "spatial_pos", c.n_joints, d);
  for (std::size_t i = 0; i < c.spatial_layers; ++i) {
    l.spatial.push_back(b.block("spatial." + std::to_string(i), d));
  }
  l.spatial_norm = b.norm("spatial_norm", d);
  l.flatten = b.linear("flatten", "flatten", c.n_joints * d, d);
  l.temporal_pos = b.take("temporal_pos", "temporal_pos", c.seq_len, d);
  for (std::size_t i = 0; i < c.temporal_layers; ++i) {
    l.temporal.push_back(b.block("temporal." + std::to_string(i), d));
  }
  l.temporal_norm = b.norm("temporal_norm", d);
  l.mistake_head = b.linear("mistake_head", "mistake_head", d, 1);
  l.score_head = b.linear("score_head", "score_head", d, kNumScores);
  return l;
}

struct STTFModel {
  STTFConfig config;
  Layout layout;
  std::vector<double> params;

  const double* at(const Slice& s) const { return params.data() + s.offset; }
};

// Deterministic in config.seed. Weights ~ N(0, 1/fan_in), biases 0, norm
// gains 1, positional embeddings ~ N(0, 0.1^2).
inline STTFModel init_model(const STTFConfig& c) {
  STTFModel m;
  m.config = c;
  m.layout = make_layout(c);
  m.params.assign(m.layout.total, 0.0);
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const NamedSlice& n : m.layout.named) {
    double* p = m.params.data() + n.slice.offset;
    const bool is_weight = n.kind.size() > 2 && n.kind.compare(n.kind.size() - 2, 2, ".w") == 0;
    if (n.kind == "layernorm.gain") {
      std::fill(p, p + n.slice.size(), 1.0);
    } else if (is_weight) {
      const double sd = 1.0 / std::sqrt(static_cast<double>(n.slice.rows));
      for (std::size_t i = 0; i < n.slice.size(); ++i) p[i] = sd * normal(rng);
    } else if (n.kind == "spatial_pos" || n.kind == "temporal_pos") {
      for (std::size_t i = 0; i < n.slice.size(); ++i) p[i] = 0.1 * normal(rng);
    }
  }
  return m;
}

// --- primitives ---------------------------------------------------------------

namespace detail {

using Mat = std::vector<double>;  // row-major, shape carried by the caller

// Y[n x out] = X[n x in] W[in x out] + b
inline void linear_fwd(const double* x, std::size_t n, std::size_t in, const double* w,
                       const double* b, std::size_t out, double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    double* yr = y + r * out;
    for (std::size_t c = 0; c < out; ++c) yr[c] = b[c];
    const double* xr = x + r * in;
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w + i * out;
      for (std::size_t c = 0; c < out; ++c) yr[c] += xi * wi[c];
    }
  }
}

// Accumulates into dx (if non-null), dw and db.
inline void linear_bwd(const double* x, std::size_t n, std::size_t in, const double* w,
                       std::size_t out, const double* dy, double* dx, double* dw, double* db) {
  for (std::size_t r = 0; r < n; ++r) {
    const double* dyr = dy + r * out;
    const double* xr = x + r * in;
    for (std::size_t c = 0; c < out; ++c) db[c] += dyr[c];
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w + i * out;
      double* dwi = dw + i * out;
      double acc = 0.0;
      for (std::size_t c = 0; c < out; ++c) {
        dwi[c] += xr[i] * dyr[c];
        acc += wi[c] * dyr[c];
      }
      if (dx) dx[r * in + i] += acc;
    }
  }
}

inline constexpr double kNormEps = 1e-5;

struct NormCache {
  Mat xhat;
  std::vector<double> rstd;
};

inline void norm_fwd(const double* x, std::size_t n, std::size_t d, const double* g,
                     const double* b, double* y, NormCache& c) {
  c.xhat.assign(n * d, 0.0);
  c.rstd.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x + r * d;
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += xr[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kNormEps);
    c.rstd[r] = rstd;
    for (std::size_t i = 0; i < d; ++i) {
      const double h = (xr[i] - mean) * rstd;
      c.xhat[r * d + i] = h;
      y[r * d + i] = g[i] * h + b[i];
    }
  }
}

inline void norm_bwd(const NormCache& c, std::size_t n, std::size_t d, const double* g,
                     const double* dy, double* dx, double* dg, double* db) {
  std::vector<double> dh(d);
  for (std::size_t r = 0; r < n; ++r) {
    const double* hr = c.xhat.data() + r * d;
    const double* dyr = dy + r * d;
    double mean_dh = 0.0;
    double mean_dh_h = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dg[i] += dyr[i] * hr[i];
      db[i] += dyr[i];
      dh[i] = dyr[i] * g[i];
      mean_dh += dh[i];
      mean_dh_h += dh[i] * hr[i];
    }
    mean_dh /= static_cast<double>(d);
    mean_dh_h /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
      dx[r * d + i] += c.rstd[r] * (dh[i] - mean_dh - hr[i] * mean_dh_h);
    }
  }
}

// tanh approximation of GELU.
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x)));
}

inline double gelu_grad(double x) {
  const double u = kGeluC * (x + 0.044715 * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy on a logit, stable for large |z|.
inline double bce_with_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

struct BlockCache {
  Mat x;      // block input
  NormCache n1;
  Mat a_in;   // ln1 output
  Mat q, k, v;
  Mat attn;   // heads x n x n
  Mat ctx;    // concatenated heads, n x d
  Mat x_mid;  // after attention residual
  NormCache n2;
  Mat m_in;   // ln2 output
  Mat pre;    // fc1 output, n x 2d
  Mat act;    // gelu(pre)
};

inline Mat block_fwd(const BlockP& p, const std::vector<double>& params, const Mat& x,
                     std::size_t n, std::size_t d, std::size_t heads, BlockCache& c) {
  const double* P = params.data();
  const std::size_t dh = d / heads;
  const std::size_t hid = 2 * d;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  c.x = x;
  c.a_in.assign(n * d, 0.0);
  norm_fwd(x.data(), n, d, P + p.ln1.gain.offset, P + p.ln1.bias.offset, c.a_in.data(), c.n1);
  c.q.assign(n * d, 0.0);
  c.k.assign(n * d, 0.0);
  c.v.assign(n * d, 0.0);
  linear_fwd(c.a_in.data(), n, d, P + p.q.w.offset, P + p.q.b.offset, d, c.q.data());
  linear_fwd(c.a_in.data(), n, d, P + p.k.w.offset, P + p.k.b.offset, d, c.k.data());
  linear_fwd(c.a_in.data(), n, d, P + p.v.w.offset, P + p.v.b.offset, d, c.v.data());

  c.attn.assign(heads * n * n, 0.0);
  c.ctx.assign(n * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      double* row = c.attn.data() + (h * n + i) * n;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < dh; ++e) s += c.q[i * d + off + e] * c.k[j * d + off + e];
        row[j] = s * inv_scale;
        mx = std::max(mx, row[j]);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = std::exp(row[j] - mx);
        z += row[j];
      }
      for (std::size_t j = 0; j < n; ++j) row[j] /= z;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = row[j];
        for (std::size_t e = 0; e < dh; ++e) c.ctx[i * d + off + e] += a * c.v[j * d + off + e];
      }
    }
  }

  c.x_mid.assign(n * d, 0.0);
  linear_fwd(c.ctx.data(), n, d, P + p.o.w.offset, P + p.o.b.offset, d, c.x_mid.data());
  for (std::size_t i = 0; i < n * d; ++i) c.x_mid[i] += x[i];

  c.m_in.assign(n * d, 0.0);
  norm_fwd(c.x_mid.data(), n, d, P + p.ln2.gain.offset, P + p.ln2.bias.offset, c.m_in.data(),
           c.n2);
  c.pre.assign(n * hid, 0.0);
  linear_fwd(c.m_in.data(), n, d, P + p.fc1.w.offset, P + p.fc1.b.offset, hid, c.pre.data());
  c.act.resize(n * hid);
  for (std::size_t i = 0; i < n * hid; ++i) c.act[i] = gelu(c.pre[i]);

  Mat y(n * d, 0.0);
  linear_fwd(c.act.data(), n, hid, P + p.fc2.w.offset, P + p.fc2.b.offset, d, y.data());
  for (std::size_t i = 0; i < n * d; ++i) y[i] += c.x_mid[i];
  return y;
}

// Returns dL/dx; parameter gradients accumulate into grad.
inline Mat block_bwd(const BlockP& p, const std::vector<double>& params, const BlockCache& c,
                     const Mat& dy, std::size_t n, std::size_t d, std::size_t heads,
                     std::vector<double>& grad) {
  const double* P = params.data();
  double* G = grad.data();
  const std::size_t dh = d / heads;
  const std::size_t hid = 2 * d;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // MLP branch.
  Mat d_act(n * hid, 0.0);
  linear_bwd(c.act.data(), n, hid, P + p.fc2.w.offset, d, dy.data(), d_act.data(),
             G + p.fc2.w.offset, G + p.fc2.b.offset);
  for (std::size_t i = 0; i < n * hid; ++i) d_act[i] *= gelu_grad(c.pre[i]);
  Mat d_min(n * d, 0.0);
  linear_bwd(c.m_in.data(), n, d, P + p.fc1.w.offset, hid, d_act.data(), d_min.data(),
             G + p.fc1.w.offset, G + p.fc1.b.offset);
  Mat d_mid = dy;
  norm_bwd(c.n2, n, d, P + p.ln2.gain.offset, d_min.data(), d_mid.data(), G + p.ln2.gain.offset,
           G + p.ln2.bias.offset);

  // Attention branch.
  Mat d_ctx(n * d, 0.0);
  linear_bwd(c.ctx.data(), n, d, P + p.o.w.offset, d, d_mid.data(), d_ctx.data(),
             G + p.o.w.offset, G + p.o.b.offset);
  Mat dq(n * d, 0.0), dk(n * d, 0.0), dv(n * d, 0.0);
  std::vector<double> da(n);
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = c.attn.data() + (h * n + i) * n;
      double dot_ad = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < dh; ++e) {
          s += d_ctx[i * d + off + e] * c.v[j * d + off + e];
          dv[j * d + off + e] += row[j] * d_ctx[i * d + off + e];
        }
        da[j] = s;
        dot_ad += s * row[j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const double ds = row[j] * (da[j] - dot_ad) * inv_scale;
        for (std::size_t e = 0; e < dh; ++e) {
          dq[i * d + off + e] += ds * c.k[j * d + off + e];
          dk[j * d + off + e] += ds * c.q[i * d + off + e];
        }
      }
    }
  }
  Mat d_ain(n * d, 0.0);
  linear_bwd(c.a_in.data(), n, d, P + p.q.w.offset, d, dq.data(), d_ain.data(), G + p.q.w.offset,
             G + p.q.b.offset);
  linear_bwd(c.a_in.data(), n, d, P + p.k.w.offset, d, dk.data(), d_ain.data(), G + p.k.w.offset,
             G + p.k.b.offset);
  linear_bwd(c.a_in.data(), n, d, P + p.v.w.offset, d, dv.data(), d_ain.data(), G + p.v.w.offset,
             G + p.v.b.offset);
  Mat dx = d_mid;
  norm_bwd(c.n1, n, d, P + p.ln1.gain.offset, d_ain.data(), dx.data(), G + p.ln1.gain.offset,
           G + p.ln1.bias.offset);
  return dx;
}

}  // namespace detail

// --- forward / loss / backward ----------------------------------------------

// Canonical coordinates, seq_len x 17 x 2, row-major.
using Input = std::vector<double>;

struct Target {
  std::array<double, kNumScores> scores{};  // each in [0, 1]
  std::vector<double> labels;               // per frame, 0 or 1
};

struct Output {
  std::array<double, kNumScores> scores{};
  std::vector<double> mistake_logits;
};

struct ForwardCache {
  Input input;
  std::vector<std::vector<detail::BlockCache>> spatial;  // [frame][layer]
  std::vector<detail::NormCache> spatial_norm;           // per frame
  detail::Mat spatial_out;                               // T x 17 x d
  detail::Mat tokens;                                    // T x d, before temporal blocks
  std::vector<detail::BlockCache> temporal;
  detail::NormCache temporal_norm;
  detail::Mat features;  // T x d
  std::array<double, kNumScores> pooled_logits{};
  detail::Mat pooled;    // d
};

inline void check_input(const STTFConfig& c, const Input& x) {
  if (x.size() != c.seq_len * c.n_joints * 2) {
    throw ValidationError("sttf: input has " + std::to_string(x.size()) + " values, expected " +
                          std::to_string(c.seq_len * c.n_joints * 2));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("sttf: non-finite input coordinate");
  }
}

inline Output forward(const STTFModel& m, const Input& x, ForwardCache* cache = nullptr) {
  using namespace detail;
  const STTFConfig& c = m.config;
  check_input(c, x);
  const Layout& L = m.layout;
  const double* P = m.params.data();
  const std::size_t d = c.d_model, J = c.n_joints, T = c.seq_len;

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.input = x;
  fc.spatial.assign(T, std::vector<BlockCache>(c.spatial_layers));
  fc.spatial_norm.assign(T, {});
  fc.spatial_out.assign(T * J * d, 0.0);
  fc.tokens.assign(T * d, 0.0);

  for (std::size_t t = 0; t < T; ++t) {
    Mat h(J * d, 0.0);
    linear_fwd(x.data() + t * J * 2, J, 2, P + L.embed.w.offset, P + L.embed.b.offset, d, h.data());
    for (std::size_t i = 0; i < J * d; ++i) h[i] += P[L.spatial_pos.offset + i];
    for (std::size_t l = 0; l < c.spatial_layers; ++l) {
      h = block_fwd(L.spatial[l], m.params, h, J, d, c.n_heads, fc.spatial[t][l]);
    }
    double* so = fc.spatial_out.data() + t * J * d;
    norm_fwd(h.data(), J, d, P + L.spatial_norm.gain.offset, P + L.spatial_norm.bias.offset, so,
             fc.spatial_norm[t]);
    linear_fwd(so, 1, J * d, P + L.flatten.w.offset, P + L.flatten.b.offset, d,
               fc.tokens.data() + t * d);
    for (std::size_t i = 0; i < d; ++i) fc.tokens[t * d + i] += P[L.temporal_pos.offset + t * d + i];
  }

  Mat h = fc.tokens;
  fc.temporal.assign(c.temporal_layers, {});
  for (std::size_t l = 0; l < c.temporal_layers; ++l) {
    h = block_fwd(L.temporal[l], m.params, h, T, d, c.n_heads, fc.temporal[l]);
  }
  fc.features.assign(T * d, 0.0);
  norm_fwd(h.data(), T, d, P + L.temporal_norm.gain.offset, P + L.temporal_norm.bias.offset,
           fc.features.data(), fc.temporal_norm);

  Output out;
  out.mistake_logits.assign(T, 0.0);
  linear_fwd(fc.features.data(), T, d, P + L.mistake_head.w.offset, P + L.mistake_head.b.offset, 1,
             out.mistake_logits.data());

  fc.pooled.assign(d, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < d; ++i) fc.pooled[i] += fc.features[t * d + i];
  }
  for (double& v : fc.pooled) v /= static_cast<double>(T);
  linear_fwd(fc.pooled.data(), 1, d, P + L.score_head.w.offset, P + L.score_head.b.offset,
             kNumScores, fc.pooled_logits.data());
  for (std::size_t k = 0; k < kNumScores; ++k) out.scores[k] = sigmoid(fc.pooled_logits[k]);
  return out;
}

inline void check_target(const STTFConfig& c, const Target& y) {
  if (y.labels.size() != c.seq_len) {
    throw ValidationError("sttf: target has " + std::to_string(y.labels.size()) +
                          " frame labels, expected " + std::to_string(c.seq_len));
  }
  for (double s : y.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("sttf: target score outside [0,1]");
  }
  for (double l : y.labels) {
    if (l != 0.0 && l != 1.0) throw ValidationError("sttf: frame label must be 0 or 1");
  }
}

// Mean squared error over the three scores plus mean per-frame binary
// cross-entropy, weighted 1:1.
inline double loss(const Output& pred, const Target& y) {
  if (pred.mistake_logits.size() != y.labels.size()) {
    throw ValidationError("sttf: prediction and target frame counts differ");
  }
  double mse = 0.0;
  for (std::size_t k = 0; k < kNumScores; ++k) {
    mse += (pred.scores[k] - y.scores[k]) * (pred.scores[k] - y.scores[k]);
  }
  mse /= static_cast<double>(kNumScores);
  double bce = 0.0;
  for (std::size_t t = 0; t < y.labels.size(); ++t) {
    bce += detail::bce_with_logit(pred.mistake_logits[t], y.labels[t]);
  }
  bce /= static_cast<double>(y.labels.size());
  return mse + bce;
}

struct Gradient {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as params
};

inline Gradient backward(const STTFModel& m, const Input& x, const Target& y) {
  using namespace detail;
  const STTFConfig& c = m.config;
  check_target(c, y);
  const Layout& L = m.layout;
  const double* P = m.params.data();
  const std::size_t d = c.d_model, J = c.n_joints, T = c.seq_len;

  ForwardCache fc;
  const Output out = forward(m, x, &fc);
  Gradient g;
  g.loss = loss(out, y);
  g.grad.assign(m.params.size(), 0.0);
  double* G = g.grad.data();

  // Heads.
  std::array<double, kNumScores> dz{};
  for (std::size_t k = 0; k < kNumScores; ++k) {
    const double s = out.scores[k];
    dz[k] = 2.0 * (s - y.scores[k]) / static_cast<double>(kNumScores) * s * (1.0 - s);
  }
  Mat d_pooled(d, 0.0);
  linear_bwd(fc.pooled.data(), 1, d, P + L.score_head.w.offset, kNumScores, dz.data(),
             d_pooled.data(), G + L.score_head.w.offset, G + L.score_head.b.offset);

  Mat d_logit(T);
  for (std::size_t t = 0; t < T; ++t) {
    d_logit[t] = (sigmoid(out.mistake_logits[t]) - y.labels[t]) / static_cast<double>(T);
  }
  Mat d_feat(T * d, 0.0);
  linear_bwd(fc.features.data(), T, d, P + L.mistake_head.w.offset, 1, d_logit.data(),
             d_feat.data(), G + L.mistake_head.w.offset, G + L.mistake_head.b.offset);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < d; ++i) d_feat[t * d + i] += d_pooled[i] / static_cast<double>(T);
  }

  // Temporal stage.
  Mat dh(T * d, 0.0);
  norm_bwd(fc.temporal_norm, T, d, P + L.temporal_norm.gain.offset, d_feat.data(), dh.data(),
           G + L.temporal_norm.gain.offset, G + L.temporal_norm.bias.offset);
  for (std::size_t l = c.temporal_layers; l-- > 0;) {
    dh = block_bwd(L.temporal[l], m.params, fc.temporal[l], dh, T, d, c.n_heads, g.grad);
  }
  for (std::size_t i = 0; i < T * d; ++i) G[L.temporal_pos.offset + i] += dh[i];

  // Spatial stage, frame by frame.
  for (std::size_t t = 0; t < T; ++t) {
    const double* so = fc.spatial_out.data() + t * J * d;
    Mat d_so(J * d, 0.0);
    linear_bwd(so, 1, J * d, P + L.flatten.w.offset, d, dh.data() + t * d, d_so.data(),
               G + L.flatten.w.offset, G + L.flatten.b.offset);
    Mat ds(J * d, 0.0);
    norm_bwd(fc.spatial_norm[t], J, d, P + L.spatial_norm.gain.offset, d_so.data(), ds.data(),
             G + L.spatial_norm.gain.offset, G + L.spatial_norm.bias.offset);
    for (std::size_t l = c.spatial_layers; l-- > 0;) {
      ds = block_bwd(L.spatial[l], m.params, fc.spatial[t][l], ds, J, d, c.n_heads, g.grad);
    }
    for (std::size_t i = 0; i < J * d; ++i) G[L.spatial_pos.offset + i] += ds[i];
    linear_bwd(x.data() + t * J * 2, J, 2, P + L.embed.w.offset, d, ds.data(), nullptr,
               G + L.embed.w.offset, G + L.embed.b.offset);
  }
  return g;
}

struct Example {
  Input input;
  Target target;
};

// Mean of per-example gradients and losses.
inline Gradient batch_gradient(const STTFModel& m, const std::vector<const Example*>& batch) {
  if (batch.empty()) throw ValidationError("sttf: empty batch");
  Gradient total;
  total.grad.assign(m.params.size(), 0.0);
  for (const Example* e : batch) {
    const Gradient g = backward(m, e->input, e->target);
    total.loss += g.loss;
    for (std::size_t i = 0; i < g.grad.size(); ++i) total.grad[i] += g.grad[i];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  for (double& v : total.grad) v *= inv;
  return total;
}

// --- training -----------------------------------------------------------------

struct TrainOptions {
  std::size_t epochs = 10;
  double lr = 1e-2;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;  // shuffling
  // Stop early once an epoch's mean loss falls below this (0 disables).
  double target_loss = 0.0;
};

struct TrainResult {
  std::vector<double> loss_curve;  // mean training loss per epoch
};

// Plain minibatch SGD. Throws DivergenceError when the loss turns non-finite.
inline TrainResult train(STTFModel& m, const std::vector<Example>& data, const TrainOptions& o,
                         const std::function<void(std::size_t, double)>& on_epoch = {}) {
  if (data.empty()) throw ValidationError("sttf: empty training set");
  if (!(o.lr >= 0.0) || !std::isfinite(o.lr)) throw ValidationError("sttf: lr must be >= 0");
  if (o.batch_size == 0) throw ValidationError("sttf: batch_size must be positive");
  for (const Example& e : data) {
    check_input(m.config, e.input);
    check_target(m.config, e.target);
  }

  std::mt19937_64 rng(o.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TrainResult res;
  for (std::size_t epoch = 1; epoch <= o.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += o.batch_size) {
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + o.batch_size); ++i) {
        batch.push_back(&data[order[i]]);
      }
      const Gradient g = batch_gradient(m, batch);
      if (!std::isfinite(g.loss)) {
        throw DivergenceError("sttf: loss became non-finite at epoch " + std::to_string(epoch) +
                              " (batch starting at " + std::to_string(start) + ")");
      }
      sum += g.loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < m.params.size(); ++i) m.params[i] -= o.lr * g.grad[i];
    }
    const double epoch_loss = sum / static_cast<double>(data.size());
    res.loss_curve.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
    if (o.target_loss > 0.0 && epoch_loss < o.target_loss) break;
  }
  return res;
}

// --- data preparation -----------------------------------------------------------

// Globally normalized coordinates resampled to seq_len frames by linear
// interpolation over timestamps. Occluded joints become (0, 0).
inline Input make_input(const Sequence& seq, const STTFConfig& c,
                        double occlusion_threshold = kDefaultOcclusionThreshold) {
  posecoach::validate(seq);
  const auto skels = normalize_all(seq, {occlusion_threshold});
  const std::size_t J = c.n_joints, T = c.seq_len;
  const auto coords = [&](std::size_t f, std::size_t j) -> Vec2 {
    if (skels[f].occluded[j]) return {};
    return skels[f].points[j];
  };
  Input x(T * J * 2, 0.0);
  const double t0 = seq.frames.front().timestamp;
  const double t1 = seq.frames.back().timestamp;
  std::size_t f = 0;
  for (std::size_t k = 0; k < T; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(T - 1);
    while (f + 2 < seq.size() && seq[f + 1].timestamp <= t) ++f;
    const double ta = seq[f].timestamp, tb = seq[f + 1].timestamp;
    const double w = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    for (std::size_t j = 0; j < J; ++j) {
      const Vec2 p = (1.0 - w) * coords(f, j) + w * coords(f + 1, j);
      x[(k * J + j) * 2] = p.x;
      x[(k * J + j) * 2 + 1] = p.y;
    }
  }
  return x;
}

// Index of the source frame nearest to each resampled step.
inline std::vector<std::size_t> resample_sources(const Sequence& seq, std::size_t T) {
  std::vector<std::size_t> out(T, 0);
  const double t0 = seq.frames.front().timestamp;
  const double t1 = seq.frames.back().timestamp;
  std::size_t f = 0;
  for (std::size_t k = 0; k < T; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(T - 1);
    while (f + 1 < seq.size() && std::abs(seq[f + 1].timestamp - t) <= std::abs(seq[f].timestamp - t)) {
      ++f;
    }
    out[k] = f;
  }
  return out;
}

// Scores come from the annotation when present, otherwise from the class
// label (wrong -> 0, anything else -> 1). Frame labels mark annotated mistakes.
inline Target make_target(const Sequence& seq, const Annotation& ann, const STTFConfig& c) {
  Target y;
  if (ann.scores) {
    y.scores = {ann.scores->joint / 100.0, ann.scores->pace / 100.0, ann.scores->range / 100.0};
  } else {
    const double v = seq.label == ClassLabel::kWrong ? 0.0 : 1.0;
    y.scores = {v, v, v};
  }
  std::vector<bool> bad(seq.size(), false);
  for (const MistakeNote& n : ann.per_frame_mistakes) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i].id == n.frame_id) bad[i] = true;
    }
  }
  y.labels.assign(c.seq_len, 0.0);
  const auto src = resample_sources(seq, c.seq_len);
  for (std::size_t k = 0; k < c.seq_len; ++k) y.labels[k] = bad[src[k]] ? 1.0 : 0.0;
  return y;
}

// Auxiliary report column: scores on 0-100 and frames whose mistake
// probability exceeds 0.5.
inline ModelScores score_sequence(const STTFModel& m, const Sequence& seq,
                                  double occlusion_threshold = kDefaultOcclusionThreshold) {
  const Output out = forward(m, make_input(seq, m.config, occlusion_threshold));
  ModelScores s;
  s.joint = 100.0 * out.scores[0];
  s.pace = 100.0 * out.scores[1];
  s.range = 100.0 * out.scores[2];
  const auto src = resample_sources(seq, m.config.seq_len);
  for (std::size_t k = 0; k < out.mistake_logits.size(); ++k) {
    if (out.mistake_logits[k] > 0.0) {
      const std::string& id = seq[src[k]].id;
      if (s.mistake_frames.empty() || s.mistake_frames.back() != id) s.mistake_frames.push_back(id);
    }
  }
  return s;
}

}  // namespace posecoach::sttf
