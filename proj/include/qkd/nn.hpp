#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkd/linalg.hpp"
#include "qkd/preprocess.hpp"
#include "qkd/qsim.hpp"

namespace qkd::nn {

// Gate order used for all per-gate arrays.
enum GateIndex { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

// One quantum gate block: affine projection of the concatenated
// (h_prev, x_t) vector down to one angle per wire, followed by a
// strongly-entangling circuit whose <Z_i> values are the gate
// pre-activations.
struct QlstmGateParams {
    Mat in_proj_w;                    // [n_qubits x (h_dim + x_dim)]
    Vec in_proj_b;                    // [n_qubits]
    qsim::EntanglerWeights vqc;       // [n_qlayers][n_qubits][3]
};

struct QlstmParams {
    int n_qubits = 9;
    int n_qlayers = 1;
    int x_dim = 1;
    std::array<QlstmGateParams, 4> gates;  // forget, input, candidate, output

    int hidden() const { return n_qubits; }
};

// Classical LSTM layer; dimensions are parametric so the same code serves
// the hybrid stack (input = n_qubits) and the standalone baseline
// (input = feature_dim).
struct LstmParams {
    int input = 9;
    int hidden = 32;
    std::array<Mat, 4> w_x;  // [hidden x input] per gate (f, i, c, o order)
    std::array<Mat, 4> w_h;  // [hidden x hidden]
    std::array<Vec, 4> b;    // [hidden]
};

struct FcParams {
    Mat w;  // [n_classes x hidden]
    Vec b;  // [n_classes]
};

enum class ModelKind { Hybrid, ClassicalLstm };

struct ModelHyper {
    ModelKind kind = ModelKind::Hybrid;
    int x_dim = 1;
    int n_qubits = 9;
    int n_qlayers = 1;
    int lstm_hidden = 32;
    int n_classes = 8;
    int seq_len = kSequenceLength;
};

struct ModelParams {
    ModelHyper hyper;
    std::optional<QlstmParams> qlstm;  // present iff hyper.kind == Hybrid
    LstmParams lstm;
    FcParams fc;

    // All trainable tensors in a fixed order; the basis for the optimizer,
    // serialization and gradient checking.
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
    std::size_t param_count() const;

    static ModelParams init(const ModelHyper& hyper, std::uint64_t seed);
    static ModelParams zeros_like(const ModelParams& other);
    void fill(double value);
};

// ---- forward/backward ----

struct QlstmStepCache {
    Vec v;                      // concat(h_prev, x_t)
    std::array<Vec, 4> z;       // projected angles per gate
    std::array<Vec, 4> a;       // VQC outputs per gate
    Vec f, i, cbar, o;
    Vec c_prev, c, tanh_c, h;
};

struct LstmStepCache {
    Vec x;
    std::array<Vec, 4> pre;     // gate pre-activations
    Vec f, i, cbar, o;
    Vec c_prev, c, tanh_c, h;
};

struct SampleCache {
    std::vector<QlstmStepCache> qlstm_steps;
    std::vector<LstmStepCache> lstm_steps;
    Vec h_last;
    Vec logits;
};

// One QLSTM cell step. h_prev/c_prev have length n_qubits.
void qlstm_cell(std::span<const double> x_t, const Vec& h_prev, const Vec& c_prev,
                const QlstmParams& p, QlstmStepCache& cache);

// One classical LSTM cell step.
void lstm_cell(std::span<const double> x_t, const Vec& h_prev, const Vec& c_prev,
               const LstmParams& p, LstmStepCache& cache);

// Unrolls the model over one sample sequence (feature_dim 1 per step).
void model_forward_sample(std::span<const double> seq, const ModelParams& p,
                          SampleCache& cache);

// Batch forward: logits is [batch x n_classes].
struct BatchForward {
    Mat logits;
    std::vector<SampleCache> caches;
};
BatchForward model_forward(const SequenceBatch& batch, const ModelParams& p, int threads = 1);

// Reverse-mode gradients for one sample; accumulates into grads.
void model_backward_sample(std::span<const double> seq, const SampleCache& cache,
                           std::span<const double> d_logits, const ModelParams& p,
                           ModelParams& grads);

// Batch backward with a deterministic (sample-order) reduction.
ModelParams model_backward(const SequenceBatch& batch, const BatchForward& fwd,
                           const Mat& d_logits, const ModelParams& p, int threads = 1);

// ---- checkpoint io ----

struct CheckpointMeta {
    std::uint64_t split_seed = 0;
    double split_ratio = 0.8;
    std::uint64_t init_seed = 0;
    int trained_epochs = 0;
};

void save_checkpoint(const std::string& path, const ModelParams& params, const Scaler& scaler,
                     const LabelCodec& codec, const CheckpointMeta& meta);

struct Checkpoint {
    ModelParams params;
    Scaler scaler;
    LabelCodec codec;
    CheckpointMeta meta;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace qkd::nn
