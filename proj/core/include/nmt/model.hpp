#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "nmt/corpus.hpp"
#include "nmt/rng.hpp"

namespace nmt {

// Gated recurrent cell: update gate z, reset gate r, candidate state g,
//   z = sigmoid(W_update x + U_update h_prev + b_update)
//   r = sigmoid(W_reset  x + U_reset  h_prev + b_reset)
//   g = tanh   (W_cand   x + U_cand (r . h_prev) + b_cand)
//   h = (1 - z) . h_prev + z . g
struct GruCellParams {
  Eigen::MatrixXd w_update, u_update;  // hidden x input, hidden x hidden
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_update, b_reset, b_cand;

  static GruCellParams zeros(int hidden, int input);
  int hidden_size() const { return static_cast<int>(w_update.rows()); }
  int input_size() const { return static_cast<int>(w_update.cols()); }
};

// Alignment scorer: score_t = v_a . tanh(W_state s_prev + W_annot h_t).
struct AttentionParams {
  Eigen::MatrixXd w_state;  // attn x hidden, applied to the decoder state
  Eigen::MatrixXd w_annot;  // attn x hidden, applied to each annotation
  Eigen::VectorXd v_a;      // attn

  static AttentionParams zeros(int attn, int hidden);
};

struct ModelHyper {
  int src_vocab = 0;
  int tgt_vocab = 0;
  int hidden = 256;
  int embed = 256;
  int attn = 256;
};

// Named view of one parameter block, for SGD updates, flat-coordinate
// perturbation and checkpointing. `data` points at the block's storage
// (Eigen column-major).
struct ParamRef {
  const char* name;
  double* data;
  Eigen::Index rows, cols;
  bool is_bias;
  Eigen::Index size() const { return rows * cols; }
};

struct ConstParamRef {
  const char* name;
  const double* data;
  Eigen::Index rows, cols;
  bool is_bias;
  Eigen::Index size() const { return rows * cols; }
};

// Every weight of the network: embeddings, encoder GRU, attention, decoder
// GRU (input = [embed(y_prev); context], so its input weight matrices subsume
// the separate y/context terms), output projection.
struct ModelParams {
  ModelHyper dims;
  Eigen::MatrixXd src_embedding;  // src_vocab x embed
  Eigen::MatrixXd tgt_embedding;  // tgt_vocab x embed
  GruCellParams encoder;          // input size = embed
  GruCellParams decoder;          // input size = embed + hidden
  AttentionParams attention;
  Eigen::MatrixXd w_out;          // tgt_vocab x hidden

  ModelParams() = default;
  explicit ModelParams(const ModelHyper& hyper);  // zero-valued, shaped

  // Stable enumeration of all parameter blocks (checkpoint order).
  std::vector<ParamRef> parameters();
  std::vector<ConstParamRef> parameters() const;
  Eigen::Index parameter_count() const;
};

// Weights uniform in [-1/sqrt(hidden), +1/sqrt(hidden)], biases zero.
ModelParams init_model_params(const ModelHyper& hyper, Rng& rng);

ModelParams zeros_like(const ModelParams& params);

// Post-activation gate values kept for the backward pass.
struct GruGates {
  Eigen::VectorXd update, reset, cand;
};

// One GRU step. Shapes must match the cell; pass `gates` to capture the gate
// activations.
Eigen::VectorXd gru_cell_forward(const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                 const GruCellParams& cell, GruGates* gates = nullptr);

struct EncoderOutput {
  Eigen::MatrixXd annotations;  // src_len x hidden, row t = h_t
  Eigen::VectorXd final_hidden;
};

// Runs the encoder over the source indices from a zero initial state.
EncoderOutput encoder_forward(const std::vector<int>& source, const ModelParams& params);

// Softmax-normalized alignment weights of the decoder state against every
// annotation row. Positive, sum to 1.
Eigen::VectorXd attention_weights(const Eigen::VectorXd& s_prev,
                                  const Eigen::MatrixXd& annotations,
                                  const AttentionParams& attn);

// Weighted sum of annotation rows.
Eigen::VectorXd context_vector(const Eigen::VectorXd& weights,
                               const Eigen::MatrixXd& annotations);

struct DecoderStepResult {
  Eigen::VectorXd state;  // s_p
  Eigen::VectorXd probs;  // distribution over the target vocabulary
  Eigen::VectorXd alpha;  // attention weights over source positions
};

// One decoder step: attention, context, GRU step on [embed(y_prev); context],
// output softmax. The first step takes SOS and the encoder's final hidden
// state.
DecoderStepResult decoder_step(int y_prev_index, const Eigen::VectorXd& s_prev,
                               const Eigen::MatrixXd& annotations, const ModelParams& params);

// Everything the backward pass needs from one forward run.
struct ForwardCache {
  std::vector<int> source;          // with EOS
  std::vector<int> target;          // with EOS
  std::vector<int> decoder_inputs;  // y_{p-1} actually fed at each step (SOS first)
  Eigen::MatrixXd annotations;
  std::vector<GruGates> encoder_gates;
  std::vector<Eigen::VectorXd> encoder_states;  // h_0 (zero) .. h_{|x|}
  std::vector<GruGates> decoder_gates;
  std::vector<Eigen::VectorXd> decoder_states;  // s_0 (= final hidden) .. s_L
  std::vector<Eigen::VectorXd> contexts;        // c_p per step
  std::vector<Eigen::VectorXd> probs;           // P_p per step
  Eigen::MatrixXd alphas;                       // target_len x src_len
  double loss = 0.0;                            // mean per-token NLL
};

// Teacher-forced pass: decoder inputs are the shifted ground-truth targets.
ForwardCache forward_teacher_forced(const SentencePair& pair, const ModelParams& params);

// Free-running pass: after SOS the decoder consumes its own argmax.
ForwardCache forward_free_running(const SentencePair& pair, const ModelParams& params);

// Teacher-forced loss only (used by the finite-difference oracle).
double teacher_forced_loss(const SentencePair& pair, const ModelParams& params);

// Reverse-mode gradients of the cached pass's loss with respect to every
// parameter. Result blocks have the same shapes as `params`.
ModelParams backward(const ForwardCache& cache, const ModelParams& params);

// Second-order central difference (f(x+eps) - f(x-eps)) / 2 eps.
double central_difference(const std::function<double(double)>& f, double x, double epsilon);

// Numerical gradient of the teacher-forced loss along one flat parameter
// coordinate (parameters() order, column-major within a block). Two forward
// passes, no analytic machinery shared with backward().
double finite_difference_grad(const SentencePair& pair, const ModelParams& params,
                              Eigen::Index coordinate, double epsilon);

// Index of the largest coefficient; ties break to the lowest index.
int argmax(const Eigen::VectorXd& v);

}  // namespace nmt
