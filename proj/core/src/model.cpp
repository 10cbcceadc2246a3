#include "nmt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace nmt {
namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

void check_index(int index, int vocab, const char* what) {
  if (index < 0 || index >= vocab) {
    throw std::invalid_argument(std::string(what) + " index " + std::to_string(index) +
                                " outside vocabulary of size " + std::to_string(vocab));
  }
}

// Scores of one decoder state against all annotations: row t of the result is
// tanh(W_state s_prev + W_annot h_t). The annotation part is hoisted by the
// callers that loop over steps.
Eigen::MatrixXd attention_tanh_block(const Eigen::MatrixXd& annot_proj,
                                     const Eigen::VectorXd& s_prev,
                                     const AttentionParams& attn) {
  Eigen::VectorXd state_proj = attn.w_state * s_prev;
  return (annot_proj.rowwise() + state_proj.transpose()).array().tanh();
}

struct GruBackwardResult {
  Eigen::VectorXd dx;
  Eigen::VectorXd dh_prev;
};

// Reverse of gru_cell_forward. dh is the loss gradient at the new hidden
// state; parameter gradients accumulate into `grads`.
GruBackwardResult gru_cell_backward(const Eigen::VectorXd& dh, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& h_prev, const GruGates& gates,
                                    const GruCellParams& cell, GruCellParams& grads) {
  const Eigen::VectorXd& z = gates.update;
  const Eigen::VectorXd& r = gates.reset;
  const Eigen::VectorXd& g = gates.cand;

  // h = (1 - z) . h_prev + z . g
  Eigen::VectorXd dz = dh.cwiseProduct(g - h_prev);
  Eigen::VectorXd dg = dh.cwiseProduct(z);
  Eigen::VectorXd dh_prev = dh.cwiseProduct(Eigen::VectorXd::Ones(z.size()) - z);

  Eigen::VectorXd dg_pre = dg.cwiseProduct((1.0 - g.array().square()).matrix());
  grads.w_cand.noalias() += dg_pre * x.transpose();
  grads.u_cand.noalias() += dg_pre * (r.cwiseProduct(h_prev)).transpose();
  grads.b_cand += dg_pre;
  Eigen::VectorXd drs = cell.u_cand.transpose() * dg_pre;  // grad wrt r . h_prev
  Eigen::VectorXd dr = drs.cwiseProduct(h_prev);
  dh_prev += drs.cwiseProduct(r);

  Eigen::VectorXd dr_pre = dr.cwiseProduct(r).cwiseProduct(Eigen::VectorXd::Ones(r.size()) - r);
  grads.w_reset.noalias() += dr_pre * x.transpose();
  grads.u_reset.noalias() += dr_pre * h_prev.transpose();
  grads.b_reset += dr_pre;
  dh_prev.noalias() += cell.u_reset.transpose() * dr_pre;

  Eigen::VectorXd dz_pre = dz.cwiseProduct(z).cwiseProduct(Eigen::VectorXd::Ones(z.size()) - z);
  grads.w_update.noalias() += dz_pre * x.transpose();
  grads.u_update.noalias() += dz_pre * h_prev.transpose();
  grads.b_update += dz_pre;
  dh_prev.noalias() += cell.u_update.transpose() * dz_pre;

  GruBackwardResult out;
  out.dx = cell.w_cand.transpose() * dg_pre;
  out.dx.noalias() += cell.w_reset.transpose() * dr_pre;
  out.dx.noalias() += cell.w_update.transpose() * dz_pre;
  out.dh_prev = std::move(dh_prev);
  return out;
}

// Shared forward pass; `teacher_forcing` selects the decoder input rule after
// the SOS bootstrap.
ForwardCache run_forward(const SentencePair& pair, const ModelParams& params,
                         bool teacher_forcing) {
  if (pair.target.empty()) throw std::invalid_argument("empty target sequence");

  ForwardCache cache;
  cache.source = pair.source;
  cache.target = pair.target;

  const int hidden = params.dims.hidden;
  const int embed = params.dims.embed;
  const auto src_len = static_cast<Eigen::Index>(pair.source.size());
  const auto tgt_len = static_cast<Eigen::Index>(pair.target.size());

  // Encoder
  cache.encoder_states.reserve(src_len + 1);
  cache.encoder_gates.reserve(src_len);
  cache.annotations.resize(src_len, hidden);
  cache.encoder_states.emplace_back(Eigen::VectorXd::Zero(hidden));
  for (Eigen::Index t = 0; t < src_len; ++t) {
    check_index(pair.source[t], params.dims.src_vocab, "source");
    Eigen::VectorXd x = params.src_embedding.row(pair.source[t]).transpose();
    GruGates gates;
    Eigen::VectorXd h = gru_cell_forward(x, cache.encoder_states.back(), params.encoder, &gates);
    cache.annotations.row(t) = h.transpose();
    cache.encoder_states.push_back(std::move(h));
    cache.encoder_gates.push_back(std::move(gates));
  }

  // Decoder: first input SOS, initial state = encoder final hidden.
  Eigen::MatrixXd annot_proj = cache.annotations * params.attention.w_annot.transpose();
  cache.decoder_states.reserve(tgt_len + 1);
  cache.decoder_states.push_back(cache.encoder_states.back());
  cache.alphas.resize(tgt_len, src_len);
  cache.decoder_inputs.reserve(tgt_len);
  cache.decoder_gates.reserve(tgt_len);
  cache.contexts.reserve(tgt_len);
  cache.probs.reserve(tgt_len);

  double loss_sum = 0.0;
  int y_prev = Vocabulary::kSosIndex;
  for (Eigen::Index p = 0; p < tgt_len; ++p) {
    check_index(y_prev, params.dims.tgt_vocab, "target");
    const Eigen::VectorXd& s_prev = cache.decoder_states.back();

    Eigen::MatrixXd tq = attention_tanh_block(annot_proj, s_prev, params.attention);
    Eigen::VectorXd alpha = softmax(tq * params.attention.v_a);
    Eigen::VectorXd context = cache.annotations.transpose() * alpha;

    Eigen::VectorXd input(embed + hidden);
    input.head(embed) = params.tgt_embedding.row(y_prev).transpose();
    input.tail(hidden) = context;

    GruGates gates;
    Eigen::VectorXd s = gru_cell_forward(input, s_prev, params.decoder, &gates);
    Eigen::VectorXd probs = softmax(params.w_out * s);

    check_index(pair.target[p], params.dims.tgt_vocab, "target");
    loss_sum += -std::log(probs(pair.target[p]));

    cache.decoder_inputs.push_back(y_prev);
    cache.alphas.row(p) = alpha.transpose();
    cache.contexts.push_back(std::move(context));
    cache.decoder_gates.push_back(std::move(gates));
    y_prev = teacher_forcing ? pair.target[p] : argmax(probs);
    cache.decoder_states.push_back(std::move(s));
    cache.probs.push_back(std::move(probs));
  }
  cache.loss = loss_sum / static_cast<double>(tgt_len);
  return cache;
}

}  // namespace

GruCellParams GruCellParams::zeros(int hidden, int input) {
  GruCellParams p;
  p.w_update = Eigen::MatrixXd::Zero(hidden, input);
  p.u_update = Eigen::MatrixXd::Zero(hidden, hidden);
  p.w_reset = Eigen::MatrixXd::Zero(hidden, input);
  p.u_reset = Eigen::MatrixXd::Zero(hidden, hidden);
  p.w_cand = Eigen::MatrixXd::Zero(hidden, input);
  p.u_cand = Eigen::MatrixXd::Zero(hidden, hidden);
  p.b_update = Eigen::VectorXd::Zero(hidden);
  p.b_reset = Eigen::VectorXd::Zero(hidden);
  p.b_cand = Eigen::VectorXd::Zero(hidden);
  return p;
}

AttentionParams AttentionParams::zeros(int attn, int hidden) {
  AttentionParams p;
  p.w_state = Eigen::MatrixXd::Zero(attn, hidden);
  p.w_annot = Eigen::MatrixXd::Zero(attn, hidden);
  p.v_a = Eigen::VectorXd::Zero(attn);
  return p;
}

ModelParams::ModelParams(const ModelHyper& hyper) : dims(hyper) {
  if (hyper.src_vocab <= 0 || hyper.tgt_vocab <= 0 || hyper.hidden <= 0 || hyper.embed <= 0 ||
      hyper.attn <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  src_embedding = Eigen::MatrixXd::Zero(hyper.src_vocab, hyper.embed);
  tgt_embedding = Eigen::MatrixXd::Zero(hyper.tgt_vocab, hyper.embed);
  encoder = GruCellParams::zeros(hyper.hidden, hyper.embed);
  decoder = GruCellParams::zeros(hyper.hidden, hyper.embed + hyper.hidden);
  attention = AttentionParams::zeros(hyper.attn, hyper.hidden);
  w_out = Eigen::MatrixXd::Zero(hyper.tgt_vocab, hyper.hidden);
}

namespace {

template <typename Params, typename Ref, typename Matrix, typename Vector>
std::vector<Ref> enumerate_params(Params& p) {
  auto mat = [](const char* name, Matrix& m, bool bias = false) {
    return Ref{name, m.data(), m.rows(), m.cols(), bias};
  };
  auto vec = [](const char* name, Vector& v, bool bias) {
    return Ref{name, v.data(), v.size(), 1, bias};
  };
  std::vector<Ref> refs;
  refs.reserve(24);
  refs.push_back(mat("src_embedding", p.src_embedding));
  refs.push_back(mat("tgt_embedding", p.tgt_embedding));
  refs.push_back(mat("encoder.w_update", p.encoder.w_update));
  refs.push_back(mat("encoder.u_update", p.encoder.u_update));
  refs.push_back(vec("encoder.b_update", p.encoder.b_update, true));
  refs.push_back(mat("encoder.w_reset", p.encoder.w_reset));
  refs.push_back(mat("encoder.u_reset", p.encoder.u_reset));
  refs.push_back(vec("encoder.b_reset", p.encoder.b_reset, true));
  refs.push_back(mat("encoder.w_cand", p.encoder.w_cand));
  refs.push_back(mat("encoder.u_cand", p.encoder.u_cand));
  refs.push_back(vec("encoder.b_cand", p.encoder.b_cand, true));
  refs.push_back(mat("decoder.w_update", p.decoder.w_update));
  refs.push_back(mat("decoder.u_update", p.decoder.u_update));
  refs.push_back(vec("decoder.b_update", p.decoder.b_update, true));
  refs.push_back(mat("decoder.w_reset", p.decoder.w_reset));
  refs.push_back(mat("decoder.u_reset", p.decoder.u_reset));
  refs.push_back(vec("decoder.b_reset", p.decoder.b_reset, true));
  refs.push_back(mat("decoder.w_cand", p.decoder.w_cand));
  refs.push_back(mat("decoder.u_cand", p.decoder.u_cand));
  refs.push_back(vec("decoder.b_cand", p.decoder.b_cand, true));
  refs.push_back(mat("attention.w_state", p.attention.w_state));
  refs.push_back(mat("attention.w_annot", p.attention.w_annot));
  refs.push_back(vec("attention.v_a", p.attention.v_a, false));
  refs.push_back(mat("w_out", p.w_out));
  return refs;
}

}  // namespace

std::vector<ParamRef> ModelParams::parameters() {
  return enumerate_params<ModelParams, ParamRef, Eigen::MatrixXd, Eigen::VectorXd>(*this);
}

std::vector<ConstParamRef> ModelParams::parameters() const {
  return enumerate_params<const ModelParams, ConstParamRef, const Eigen::MatrixXd,
                          const Eigen::VectorXd>(*this);
}

Eigen::Index ModelParams::parameter_count() const {
  Eigen::Index n = 0;
  for (const ConstParamRef& ref : parameters()) n += ref.size();
  return n;
}

ModelParams init_model_params(const ModelHyper& hyper, Rng& rng) {
  ModelParams params(hyper);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hyper.hidden));
  for (ParamRef& ref : params.parameters()) {
    if (ref.is_bias) continue;
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      ref.data[i] = rng.uniform_range(-bound, bound);
    }
  }
  return params;
}

ModelParams zeros_like(const ModelParams& params) { return ModelParams(params.dims); }

Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruCellParams& cell, GruGates* gates) {
  if (x.size() != cell.input_size() || h_prev.size() != cell.hidden_size()) {
    throw std::invalid_argument("gru_cell_forward: shape mismatch");
  }
  Eigen::VectorXd z = sigmoid(cell.w_update * x + cell.u_update * h_prev + cell.b_update);
  Eigen::VectorXd r = sigmoid(cell.w_reset * x + cell.u_reset * h_prev + cell.b_reset);
  Eigen::VectorXd g =
      (cell.w_cand * x + cell.u_cand * r.cwiseProduct(h_prev) + cell.b_cand).array().tanh();
  Eigen::VectorXd h = (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(g);
  if (gates != nullptr) {
    gates->update = std::move(z);
    gates->reset = std::move(r);
    gates->cand = std::move(g);
  }
  return h;
}

EncoderOutput encoder_forward(const std::vector<int>& source, const ModelParams& params) {
  if (source.empty()) throw std::invalid_argument("empty source sequence");
  EncoderOutput out;
  out.annotations.resize(static_cast<Eigen::Index>(source.size()), params.dims.hidden);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params.dims.hidden);
  for (std::size_t t = 0; t < source.size(); ++t) {
    check_index(source[t], params.dims.src_vocab, "source");
    Eigen::VectorXd x = params.src_embedding.row(source[t]).transpose();
    h = gru_cell_forward(x, h, params.encoder);
    out.annotations.row(static_cast<Eigen::Index>(t)) = h.transpose();
  }
  out.final_hidden = std::move(h);
  return out;
}

Eigen::VectorXd attention_weights(const Eigen::VectorXd& s_prev,
                                  const Eigen::MatrixXd& annotations,
                                  const AttentionParams& attn) {
  if (annotations.rows() == 0) throw std::invalid_argument("attention over empty annotations");
  if (annotations.cols() != attn.w_annot.cols() || s_prev.size() != attn.w_state.cols()) {
    throw std::invalid_argument("attention_weights: shape mismatch");
  }
  Eigen::MatrixXd annot_proj = annotations * attn.w_annot.transpose();
  Eigen::MatrixXd tq = attention_tanh_block(annot_proj, s_prev, attn);
  return softmax(tq * attn.v_a);
}

Eigen::VectorXd context_vector(const Eigen::VectorXd& weights,
                               const Eigen::MatrixXd& annotations) {
  if (weights.size() != annotations.rows()) {
    throw std::invalid_argument("context_vector: weight/annotation length mismatch");
  }
  return annotations.transpose() * weights;
}

DecoderStepResult decoder_step(int y_prev_index, const Eigen::VectorXd& s_prev,
                               const Eigen::MatrixXd& annotations, const ModelParams& params) {
  check_index(y_prev_index, params.dims.tgt_vocab, "target");
  DecoderStepResult out;
  out.alpha = attention_weights(s_prev, annotations, params.attention);
  Eigen::VectorXd context = context_vector(out.alpha, annotations);
  Eigen::VectorXd input(params.dims.embed + params.dims.hidden);
  input.head(params.dims.embed) = params.tgt_embedding.row(y_prev_index).transpose();
  input.tail(params.dims.hidden) = context;
  out.state = gru_cell_forward(input, s_prev, params.decoder);
  out.probs = softmax(params.w_out * out.state);
  return out;
}

ForwardCache forward_teacher_forced(const SentencePair& pair, const ModelParams& params) {
  return run_forward(pair, params, /*teacher_forcing=*/true);
}

ForwardCache forward_free_running(const SentencePair& pair, const ModelParams& params) {
  return run_forward(pair, params, /*teacher_forcing=*/false);
}

double teacher_forced_loss(const SentencePair& pair, const ModelParams& params) {
  return forward_teacher_forced(pair, params).loss;
}

ModelParams backward(const ForwardCache& cache, const ModelParams& params) {
  ModelParams grads = zeros_like(params);

  const int hidden = params.dims.hidden;
  const int embed = params.dims.embed;
  const auto src_len = static_cast<Eigen::Index>(cache.source.size());
  const auto tgt_len = static_cast<Eigen::Index>(cache.target.size());
  const double inv_len = 1.0 / static_cast<double>(tgt_len);

  Eigen::MatrixXd annot_proj = cache.annotations * params.attention.w_annot.transpose();
  Eigen::MatrixXd d_annotations = Eigen::MatrixXd::Zero(src_len, hidden);
  Eigen::VectorXd ds_carry = Eigen::VectorXd::Zero(hidden);

  for (Eigen::Index p = tgt_len - 1; p >= 0; --p) {
    const Eigen::VectorXd& s_prev = cache.decoder_states[p];
    const Eigen::VectorXd& s_cur = cache.decoder_states[p + 1];

    // Softmax cross-entropy: dlogits = (P - onehot(target)) / L
    Eigen::VectorXd dlogits = cache.probs[p] * inv_len;
    dlogits(cache.target[p]) -= inv_len;
    grads.w_out.noalias() += dlogits * s_cur.transpose();
    Eigen::VectorXd ds = params.w_out.transpose() * dlogits + ds_carry;

    // Decoder GRU on input [embed(y_prev); context]
    Eigen::VectorXd input(embed + hidden);
    input.head(embed) = params.tgt_embedding.row(cache.decoder_inputs[p]).transpose();
    input.tail(hidden) = cache.contexts[p];
    GruBackwardResult gru =
        gru_cell_backward(ds, input, s_prev, cache.decoder_gates[p], params.decoder, grads.decoder);
    grads.tgt_embedding.row(cache.decoder_inputs[p]) += gru.dx.head(embed).transpose();
    Eigen::VectorXd dc = gru.dx.tail(hidden);
    Eigen::VectorXd ds_prev = std::move(gru.dh_prev);

    // Context: c = annotations^T alpha
    Eigen::VectorXd alpha = cache.alphas.row(p).transpose();
    Eigen::VectorXd dalpha = cache.annotations * dc;
    d_annotations.noalias() += alpha * dc.transpose();

    // Softmax of alignment scores
    Eigen::VectorXd dscore =
        alpha.cwiseProduct(dalpha - Eigen::VectorXd::Constant(src_len, alpha.dot(dalpha)));

    // score_t = v_a . tanh(W_state s_prev + W_annot h_t); tanh block recomputed
    Eigen::MatrixXd tq = attention_tanh_block(annot_proj, s_prev, params.attention);
    grads.attention.v_a.noalias() += tq.transpose() * dscore;
    Eigen::MatrixXd dtq_pre =
        (dscore * params.attention.v_a.transpose()).cwiseProduct((1.0 - tq.array().square()).matrix());
    Eigen::VectorXd dtq_colsum = dtq_pre.colwise().sum().transpose();
    grads.attention.w_state.noalias() += dtq_colsum * s_prev.transpose();
    ds_prev.noalias() += params.attention.w_state.transpose() * dtq_colsum;
    grads.attention.w_annot.noalias() += dtq_pre.transpose() * cache.annotations;
    d_annotations.noalias() += dtq_pre * params.attention.w_annot;

    ds_carry = std::move(ds_prev);
  }

  // s_0 is the encoder's final hidden state.
  Eigen::VectorXd dh_carry = std::move(ds_carry);
  for (Eigen::Index t = src_len - 1; t >= 0; --t) {
    Eigen::VectorXd dh = d_annotations.row(t).transpose() + dh_carry;
    Eigen::VectorXd x = params.src_embedding.row(cache.source[t]).transpose();
    GruBackwardResult gru = gru_cell_backward(dh, x, cache.encoder_states[t],
                                              cache.encoder_gates[t], params.encoder,
                                              grads.encoder);
    grads.src_embedding.row(cache.source[t]) += gru.dx.transpose();
    dh_carry = std::move(gru.dh_prev);
  }
  return grads;
}

double central_difference(const std::function<double(double)>& f, double x, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  return (f(x + epsilon) - f(x - epsilon)) / (2.0 * epsilon);
}

double finite_difference_grad(const SentencePair& pair, const ModelParams& params,
                              Eigen::Index coordinate, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  ModelParams perturbed = params;
  Eigen::Index offset = coordinate;
  for (ParamRef& ref : perturbed.parameters()) {
    if (offset < ref.size()) {
      double* slot = ref.data + offset;
      const double original = *slot;
      return central_difference(
          [&](double v) {
            *slot = v;
            return teacher_forced_loss(pair, perturbed);
          },
          original, epsilon);
    }
    offset -= ref.size();
  }
  throw std::invalid_argument("parameter coordinate out of range");
}

int argmax(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace nmt
