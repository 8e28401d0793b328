#pragma once

// LSTM pointer network over graph embeddings.
//
// Encoder: each embedding row is normalized, projected to d dims and fed
// through an LSTM; the hidden states form the context matrix C (|V| x d).
// Decoder: an LSTM started from the encoder's final state and a trainable
// first input. Each step refines its output with one glimpse (additive
// attention over C, returning the attention-weighted sum of contexts), then
// scores every node with a pointer head
//     u_j = v_p . tanh(W_ref_p C_j + W_q_p g + b_p)
// and masks already chosen nodes to -inf. The projected embedding of the
// chosen node is the next decoder input.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pipesched/embedding.hpp"
#include "pipesched/error.hpp"
#include "pipesched/graph.hpp"

namespace pipesched::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct PolicyConfig {
  int hidden_dim = 256;
  int max_degree = 6;

  [[nodiscard]] int feature_dim() const { return 2 * max_degree + 3; }
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

/// Every trainable tensor. Vectors are stored as one-column matrices. The same
/// type carries gradients and optimizer moments.
struct PolicyParams {
  PolicyConfig config;

  Mat embed_w, embed_b;                 // d x F, d x 1
  Mat enc_wx, enc_wh, enc_b;            // 4d x d, 4d x d, 4d x 1 (gates i, f, g, o)
  Mat dec_wx, dec_wh, dec_b;
  Mat dec0;                             // d x 1, first decoder input
  Mat glimpse_ref, glimpse_query;       // d x d (theta_g, omega_g)
  Mat glimpse_bias, glimpse_v;          // d x 1 (beta_g, v_g)
  Mat pointer_ref, pointer_query;       // d x d (theta_p, omega_p)
  Mat pointer_bias, pointer_v;          // d x 1 (beta_p, v_p)

  template <typename F>
  void for_each(F&& f) {
    f("embed_w", embed_w), f("embed_b", embed_b);
    f("enc_wx", enc_wx), f("enc_wh", enc_wh), f("enc_b", enc_b);
    f("dec_wx", dec_wx), f("dec_wh", dec_wh), f("dec_b", dec_b);
    f("dec0", dec0);
    f("glimpse_ref", glimpse_ref), f("glimpse_query", glimpse_query);
    f("glimpse_bias", glimpse_bias), f("glimpse_v", glimpse_v);
    f("pointer_ref", pointer_ref), f("pointer_query", pointer_query);
    f("pointer_bias", pointer_bias), f("pointer_v", pointer_v);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<PolicyParams*>(this)->for_each([&](const char* name, Mat& m) { f(name, static_cast<const Mat&>(m)); });
  }

  /// Same shapes, all zeros.
  [[nodiscard]] PolicyParams zeros_like() const {
    PolicyParams z = *this;
    z.for_each([](const char*, Mat& m) { m.setZero(); });
    return z;
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const char*, const Mat& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  [[nodiscard]] bool all_finite() const {
    bool ok = true;
    for_each([&](const char*, const Mat& m) { ok = ok && m.allFinite(); });
    return ok;
  }
};

/// Uniform(-1/sqrt(d), 1/sqrt(d)) for every tensor.
inline PolicyParams init_params(const PolicyConfig& cfg, std::uint64_t seed) {
  if (cfg.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (cfg.max_degree < 1) throw ConfigError("max_degree must be >= 1");
  const int d = cfg.hidden_dim, f = cfg.feature_dim();
  PolicyParams p;
  p.config = cfg;
  p.embed_w.resize(d, f), p.embed_b.resize(d, 1);
  p.enc_wx.resize(4 * d, d), p.enc_wh.resize(4 * d, d), p.enc_b.resize(4 * d, 1);
  p.dec_wx.resize(4 * d, d), p.dec_wh.resize(4 * d, d), p.dec_b.resize(4 * d, 1);
  p.dec0.resize(d, 1);
  p.glimpse_ref.resize(d, d), p.glimpse_query.resize(d, d), p.glimpse_bias.resize(d, 1), p.glimpse_v.resize(d, 1);
  p.pointer_ref.resize(d, d), p.pointer_query.resize(d, d), p.pointer_bias.resize(d, 1), p.pointer_v.resize(d, 1);

  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> u(-bound, bound);
  p.for_each([&](const char*, Mat& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
  });
  return p;
}

/// Embedding rows as reals: levels divided by the largest level, ids by the
/// largest node id, memory by the largest node memory. The -1 id sentinel is
/// kept as -1 and the 0 level sentinel as 0.
inline Mat normalized_features(const GraphEmbedding& emb) {
  const int rows = emb.num_rows, cols = emb.width(), deg = emb.max_degree;
  double max_level = 1, max_id = 1, max_mem = 1;
  for (int r = 0; r < rows; ++r) {
    max_level = std::max(max_level, static_cast<double>(emb.at(r, emb.level_col())));
    max_id = std::max(max_id, static_cast<double>(emb.at(r, emb.node_id_col())));
    max_mem = std::max(max_mem, static_cast<double>(emb.at(r, emb.memory_col())));
  }
  Mat x(rows, cols);
  for (int r = 0; r < rows; ++r) {
    x(r, emb.level_col()) = emb.at(r, emb.level_col()) / max_level;
    for (int s = 0; s < deg; ++s) {
      x(r, emb.parent_level_col(s)) = emb.at(r, emb.parent_level_col(s)) / max_level;
      const auto pid = emb.at(r, emb.parent_id_col(s));
      x(r, emb.parent_id_col(s)) = pid < 0 ? -1.0 : pid / max_id;
    }
    x(r, emb.node_id_col()) = emb.at(r, emb.node_id_col()) / max_id;
    x(r, emb.memory_col()) = emb.at(r, emb.memory_col()) / max_mem;
  }
  return x;
}

namespace detail {

inline Vec sigmoid(const Vec& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct LstmStep {
  Vec x, h_prev, c_prev;
  Vec i, f, g, o, c, tanh_c, h;
};

inline void lstm_forward(const Mat& wx, const Mat& wh, const Mat& b, const Vec& x, const Vec& h_prev,
                         const Vec& c_prev, LstmStep& s) {
  const Eigen::Index d = h_prev.size();
  const Vec z = wx * x + wh * h_prev + b.col(0);
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = sigmoid(z.segment(0, d));
  s.f = sigmoid(z.segment(d, d));
  s.g = z.segment(2 * d, d).array().tanh().matrix();
  s.o = sigmoid(z.segment(3 * d, d));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
}

// Accumulates weight gradients; returns input gradient and writes the
// gradients flowing into the previous hidden and cell states.
inline Vec lstm_backward(const Mat& wx, const Mat& wh, const LstmStep& s, const Vec& dh, const Vec& dc, Mat& dwx,
                         Mat& dwh, Mat& db, Vec& dh_prev, Vec& dc_prev) {
  const Eigen::Index d = dh.size();
  const Vec d_o = dh.cwiseProduct(s.tanh_c);
  const Vec dc_total = dc + dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
  Vec dz(4 * d);
  dz.segment(0, d) = dc_total.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
  dz.segment(d, d) = dc_total.cwiseProduct(s.c_prev).cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
  dz.segment(2 * d, d) = dc_total.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
  dz.segment(3 * d, d) = d_o.cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));
  dwx.noalias() += dz * s.x.transpose();
  dwh.noalias() += dz * s.h_prev.transpose();
  db.col(0) += dz;
  dc_prev = dc_total.cwiseProduct(s.f);
  dh_prev = wh.transpose() * dz;
  return wx.transpose() * dz;
}

// Softmax over entries with mask == 0; masked entries get probability 0.
inline Vec masked_softmax(const Vec& logits, const std::vector<char>& mask, double* log_norm = nullptr) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    if (!mask[j]) mx = std::max(mx, logits[j]);
  if (mx == -std::numeric_limits<double>::infinity()) throw DecodeExhausted("every node is masked");
  Vec p = Vec::Zero(logits.size());
  double sum = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    if (!mask[j]) sum += (p[j] = std::exp(logits[j] - mx));
  p /= sum;
  if (log_norm) *log_norm = mx + std::log(sum);
  return p;
}

struct AttentionStep {
  Vec h;          // decoder output before the glimpse
  Vec glimpse_q;  // W_q_g h + b_g
  Mat glimpse_t;  // tanh(ref_g + q), |V| x d
  Vec glimpse_a;  // attention weights
  Vec glimpse;    // C^T a
  Vec pointer_q;
  Mat pointer_t;
  Vec logits;     // masked entries hold -inf
  Vec probs;
  double log_norm = 0.0;
};

}  // namespace detail

struct DecoderState {
  Vec h, c;
};

struct EncoderOutput {
  Mat inputs;        // projected embeddings, |V| x d
  Mat contexts;      // C, |V| x d
  DecoderState final_state;
  Mat ref_glimpse;   // C W_ref_g^T
  Mat ref_pointer;   // C W_ref_p^T
};

namespace detail {

struct EncoderTrace {
  Mat features;
  std::vector<LstmStep> steps;
};

inline EncoderOutput encode_impl(const GraphEmbedding& emb, const PolicyParams& p, EncoderTrace* trace) {
  if (emb.max_degree != p.config.max_degree)
    throw ShapeError("embedding degree " + std::to_string(emb.max_degree) + " does not match the policy's " +
                     std::to_string(p.config.max_degree));
  if (emb.num_rows < 1) throw ShapeError("cannot encode an empty graph");
  const int n = emb.num_rows, d = p.config.hidden_dim;
  const Mat x = normalized_features(emb);
  EncoderOutput out;
  out.inputs = (x * p.embed_w.transpose()).rowwise() + p.embed_b.col(0).transpose();
  out.contexts.resize(n, d);
  Vec h = Vec::Zero(d), c = Vec::Zero(d);
  LstmStep step;
  if (trace) {
    trace->features = x;
    trace->steps.resize(n);
  }
  for (int t = 0; t < n; ++t) {
    LstmStep& s = trace ? trace->steps[t] : step;
    lstm_forward(p.enc_wx, p.enc_wh, p.enc_b, out.inputs.row(t).transpose(), h, c, s);
    h = s.h;
    c = s.c;
    out.contexts.row(t) = h.transpose();
  }
  if (!out.contexts.allFinite()) throw NumericalError("encoder produced non-finite contexts");
  out.final_state = {h, c};
  out.ref_glimpse = out.contexts * p.glimpse_ref.transpose();
  out.ref_pointer = out.contexts * p.pointer_ref.transpose();
  return out;
}

inline void attend(const EncoderOutput& enc, const PolicyParams& p, const Vec& h, const std::vector<char>& mask,
                   AttentionStep& a) {
  a.h = h;
  a.glimpse_q = p.glimpse_query * h + p.glimpse_bias.col(0);
  a.glimpse_t = (enc.ref_glimpse.rowwise() + a.glimpse_q.transpose()).array().tanh().matrix();
  const Vec u = a.glimpse_t * p.glimpse_v.col(0);
  a.glimpse_a = masked_softmax(u, mask);
  a.glimpse = enc.contexts.transpose() * a.glimpse_a;
  a.pointer_q = p.pointer_query * a.glimpse + p.pointer_bias.col(0);
  a.pointer_t = (enc.ref_pointer.rowwise() + a.pointer_q.transpose()).array().tanh().matrix();
  a.logits = a.pointer_t * p.pointer_v.col(0);
  for (Eigen::Index j = 0; j < a.logits.size(); ++j)
    if (mask[j]) a.logits[j] = -std::numeric_limits<double>::infinity();
  a.probs = masked_softmax(a.logits, mask, &a.log_norm);
  if (!a.probs.allFinite()) throw NumericalError("pointer produced non-finite probabilities");
}

}  // namespace detail

inline EncoderOutput encode(const GraphEmbedding& emb, const PolicyParams& p) {
  return detail::encode_impl(emb, p, nullptr);
}

struct StepOutput {
  Vec probabilities;
  DecoderState state;
};

/// One decoder step: LSTM, glimpse, pointer. mask[j] != 0 marks node j as
/// already selected.
inline StepOutput decode_step(const Vec& input, const DecoderState& state, const EncoderOutput& enc,
                              const std::vector<char>& mask, const PolicyParams& p) {
  detail::LstmStep s;
  detail::lstm_forward(p.dec_wx, p.dec_wh, p.dec_b, input, state.h, state.c, s);
  detail::AttentionStep a;
  detail::attend(enc, p, s.h, mask, a);
  return {a.probs, {s.h, s.c}};
}

enum class DecodeMode { kGreedy, kSample };

struct EpisodeTrace {
  std::vector<NodeIndex> sequence;
  /// log p(sequence[i] | sequence[<i], G)
  std::vector<double> step_logprobs;
  double reward = 0.0;

  [[nodiscard]] double logprob() const {
    double s = 0.0;
    for (double l : step_logprobs) s += l;
    return s;
  }
  /// Mask seen at step i: the first i selected nodes.
  [[nodiscard]] std::vector<char> mask_at(int step) const {
    std::vector<char> m(sequence.size(), 0);
    for (int k = 0; k < step; ++k) m[sequence[k]] = 1;
    return m;
  }
};

/// Greedy picks the most probable node, lowest index on ties. Sample draws
/// from the step distribution with `rng`.
inline EpisodeTrace decode_sequence(const EncoderOutput& enc, const PolicyParams& p, DecodeMode mode,
                                    std::mt19937_64* rng = nullptr) {
  if (mode == DecodeMode::kSample && rng == nullptr) throw ConfigError("sampling requires an rng");
  const int n = static_cast<int>(enc.contexts.rows());
  EpisodeTrace trace;
  trace.sequence.reserve(n);
  trace.step_logprobs.reserve(n);
  std::vector<char> mask(n, 0);
  DecoderState state = enc.final_state;
  Vec input = p.dec0.col(0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  detail::LstmStep s;
  detail::AttentionStep a;
  for (int step = 0; step < n; ++step) {
    detail::lstm_forward(p.dec_wx, p.dec_wh, p.dec_b, input, state.h, state.c, s);
    state = {s.h, s.c};
    detail::attend(enc, p, s.h, mask, a);
    int pick = -1;
    if (mode == DecodeMode::kGreedy) {
      for (int j = 0; j < n; ++j)
        if (!mask[j] && (pick < 0 || a.probs[j] > a.probs[pick])) pick = j;
    } else {
      const double r = unit(*rng);
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        if (mask[j]) continue;
        pick = j;
        acc += a.probs[j];
        if (r < acc) break;
      }
    }
    trace.sequence.push_back(pick);
    trace.step_logprobs.push_back(a.logits[pick] - a.log_norm);
    mask[pick] = 1;
    input = enc.inputs.row(pick).transpose();
  }
  return trace;
}

/// log p(sequence | G) with the decoder fed the given sequence.
inline double sequence_logprob(const GraphEmbedding& emb, const std::vector<NodeIndex>& sequence,
                               const PolicyParams& p) {
  const EncoderOutput enc = encode(emb, p);
  const int n = emb.num_rows;
  std::vector<char> mask(n, 0);
  DecoderState state = enc.final_state;
  Vec input = p.dec0.col(0);
  double total = 0.0;
  detail::LstmStep s;
  detail::AttentionStep a;
  for (int step = 0; step < n; ++step) {
    detail::lstm_forward(p.dec_wx, p.dec_wh, p.dec_b, input, state.h, state.c, s);
    state = {s.h, s.c};
    detail::attend(enc, p, s.h, mask, a);
    const NodeIndex pick = sequence[step];
    total += a.logits[pick] - a.log_norm;
    mask[pick] = 1;
    input = enc.inputs.row(pick).transpose();
  }
  return total;
}

/// Sum over steps of the entropy of the step distribution, with the decoder
/// fed `sequence`.
inline double sequence_entropy(const GraphEmbedding& emb, const std::vector<NodeIndex>& sequence,
                               const PolicyParams& p) {
  const EncoderOutput enc = encode(emb, p);
  const int n = emb.num_rows;
  std::vector<char> mask(n, 0);
  DecoderState state = enc.final_state;
  Vec input = p.dec0.col(0);
  double total = 0.0;
  detail::LstmStep s;
  detail::AttentionStep a;
  for (int step = 0; step < n; ++step) {
    detail::lstm_forward(p.dec_wx, p.dec_wh, p.dec_b, input, state.h, state.c, s);
    state = {s.h, s.c};
    detail::attend(enc, p, s.h, mask, a);
    for (int j = 0; j < n; ++j)
      if (!mask[j] && a.probs[j] > 0.0) total -= a.probs[j] * std::log(a.probs[j]);
    mask[sequence[step]] = 1;
    input = enc.inputs.row(sequence[step]).transpose();
  }
  return total;
}

/// Gradient of advantage * log p(trace.sequence | G) with respect to every
/// parameter, by backpropagation through pointer, glimpse, decoder, encoder
/// and the input projection. A nonzero `entropy_weight` adds
/// entropy_weight * sum_t H(p_t), the entropy of each step distribution along
/// the trace.
inline PolicyParams backward(const GraphEmbedding& emb, const EpisodeTrace& trace, double advantage,
                             const PolicyParams& p, double entropy_weight = 0.0) {
  PolicyParams grad = p.zeros_like();
  if (advantage == 0.0 && entropy_weight == 0.0) return grad;
  const int n = emb.num_rows, d = p.config.hidden_dim;
  if (static_cast<int>(trace.sequence.size()) != n)
    throw ShapeError("trace length " + std::to_string(trace.sequence.size()) + " does not match " +
                     std::to_string(n) + " nodes");

  // Forward pass with everything kept.
  detail::EncoderTrace etrace;
  const EncoderOutput enc = detail::encode_impl(emb, p, &etrace);
  std::vector<detail::LstmStep> dsteps(n);
  std::vector<detail::AttentionStep> attn(n);
  std::vector<std::vector<char>> masks(n);
  {
    std::vector<char> mask(n, 0);
    Vec h = enc.final_state.h, c = enc.final_state.c;
    Vec input = p.dec0.col(0);
    for (int step = 0; step < n; ++step) {
      detail::lstm_forward(p.dec_wx, p.dec_wh, p.dec_b, input, h, c, dsteps[step]);
      h = dsteps[step].h;
      c = dsteps[step].c;
      masks[step] = mask;
      detail::attend(enc, p, h, mask, attn[step]);
      const NodeIndex pick = trace.sequence[step];
      if (pick < 0 || pick >= n || mask[pick]) throw ShapeError("trace is not a permutation");
      mask[pick] = 1;
      input = enc.inputs.row(pick).transpose();
    }
  }

  Mat d_inputs = Mat::Zero(n, d);
  Mat d_contexts = Mat::Zero(n, d);
  Mat d_ref_g = Mat::Zero(n, d);
  Mat d_ref_p = Mat::Zero(n, d);
  Vec dh_next = Vec::Zero(d), dc_next = Vec::Zero(d);

  for (int step = n - 1; step >= 0; --step) {
    const auto& a = attn[step];
    const auto& mask = masks[step];
    const NodeIndex pick = trace.sequence[step];

    // d(adv * log p[pick]) / d logits
    Vec dl = Vec::Zero(n);
    for (int j = 0; j < n; ++j)
      if (!mask[j]) dl[j] = advantage * ((j == pick ? 1.0 : 0.0) - a.probs[j]);
    if (entropy_weight != 0.0) {
      // dH/dl_j = -p_j (log p_j + H)
      double h = 0.0;
      for (int j = 0; j < n; ++j)
        if (!mask[j] && a.probs[j] > 0.0) h -= a.probs[j] * std::log(a.probs[j]);
      for (int j = 0; j < n; ++j)
        if (!mask[j] && a.probs[j] > 0.0) dl[j] -= entropy_weight * a.probs[j] * (std::log(a.probs[j]) + h);
    }

    // Pointer head.
    grad.pointer_v.col(0).noalias() += a.pointer_t.transpose() * dl;
    const Mat d_pre_p =
        (dl * p.pointer_v.col(0).transpose()).cwiseProduct((1.0 - a.pointer_t.array().square()).matrix());
    d_ref_p += d_pre_p;
    const Vec dq_p = d_pre_p.colwise().sum().transpose();
    grad.pointer_query.noalias() += dq_p * a.glimpse.transpose();
    grad.pointer_bias.col(0) += dq_p;
    const Vec d_glimpse = p.pointer_query.transpose() * dq_p;

    // Glimpse.
    d_contexts.noalias() += a.glimpse_a * d_glimpse.transpose();
    const Vec da = enc.contexts * d_glimpse;
    const Vec du = a.glimpse_a.cwiseProduct((da.array() - a.glimpse_a.dot(da)).matrix());
    grad.glimpse_v.col(0).noalias() += a.glimpse_t.transpose() * du;
    const Mat d_pre_g =
        (du * p.glimpse_v.col(0).transpose()).cwiseProduct((1.0 - a.glimpse_t.array().square()).matrix());
    d_ref_g += d_pre_g;
    const Vec dq_g = d_pre_g.colwise().sum().transpose();
    grad.glimpse_query.noalias() += dq_g * a.h.transpose();
    grad.glimpse_bias.col(0) += dq_g;
    const Vec dh = p.glimpse_query.transpose() * dq_g + dh_next;

    // Decoder LSTM.
    Vec dh_prev, dc_prev;
    const Vec dx = detail::lstm_backward(p.dec_wx, p.dec_wh, dsteps[step], dh, dc_next, grad.dec_wx, grad.dec_wh,
                                         grad.dec_b, dh_prev, dc_prev);
    if (step == 0)
      grad.dec0.col(0) += dx;
    else
      d_inputs.row(trace.sequence[step - 1]) += dx.transpose();
    dh_next = dh_prev;
    dc_next = dc_prev;
  }

  // Reference projections.
  grad.glimpse_ref.noalias() += d_ref_g.transpose() * enc.contexts;
  grad.pointer_ref.noalias() += d_ref_p.transpose() * enc.contexts;
  d_contexts.noalias() += d_ref_g * p.glimpse_ref;
  d_contexts.noalias() += d_ref_p * p.pointer_ref;

  // Encoder LSTM; the decoder started from its final state.
  Vec dh = dh_next, dc = dc_next;
  for (int t = n - 1; t >= 0; --t) {
    dh += d_contexts.row(t).transpose();
    Vec dh_prev, dc_prev;
    const Vec dx = detail::lstm_backward(p.enc_wx, p.enc_wh, etrace.steps[t], dh, dc, grad.enc_wx, grad.enc_wh,
                                         grad.enc_b, dh_prev, dc_prev);
    d_inputs.row(t) += dx.transpose();
    dh = dh_prev;
    dc = dc_prev;
  }

  // Input projection.
  grad.embed_w.noalias() += d_inputs.transpose() * etrace.features;
  grad.embed_b.col(0) += d_inputs.colwise().sum().transpose();

  grad.for_each([](const char* name, const Mat& m) {
    if (!m.allFinite()) throw NumericalError(std::string("non-finite gradient in ") + name);
  });
  return grad;
}

}  // namespace pipesched::nn
