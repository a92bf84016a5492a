#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "qkd/nn.hpp"

namespace qkd::train {

struct TrainConfig {
    int max_epochs = 50;
    int batch_size = 64;
    double lr_init = 5e-4;      // eta_max
    double lr_min = 0.0;        // eta_min
    double weight_decay = 1e-4;
    int t_0 = 50;               // scheduler restart period, epochs
    int patience = 5;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

// Per-parameter Adam moments; shapes mirror the model.
struct OptimState {
    nn::ModelParams m;
    nn::ModelParams v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static OptimState like(const nn::ModelParams& params);
};

struct SchedulerState {
    double eta_max = 5e-4;
    double eta_min = 0.0;
    int t_i = 50;   // current period
    int t_cur = 0;  // epochs since last restart
};

// Cosine annealing value at a given position in the period.
double lr_at(const SchedulerState& st, int t_cur);

// Steps t_cur, wrapping back to 0 at the period boundary (multiplier 1).
void scheduler_advance(SchedulerState& st);

// Mean negative log softmax likelihood plus its logits gradient.
struct CrossEntropy {
    double loss = 0.0;
    Mat d_logits;
};
CrossEntropy cross_entropy(const Mat& logits, const std::vector<int>& targets);

// Decoupled weight decay (applied as p *= 1 - lr*wd) followed by the
// bias-corrected Adam update.
void adamw_step(nn::ModelParams& params, const nn::ModelParams& grads, OptimState& st,
                double lr, double weight_decay);

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double eval_loss = 0.0;
    double accuracy = 0.0;
};

// Stop when the monitored loss fails to improve on the best seen for
// `patience` consecutive epochs.
struct EarlyStopper {
    int patience = 5;
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int stale = 0;

    // Returns true when training should stop after this observation;
    // improved() tells whether the last observation set a new best.
    bool observe(int epoch, double eval_loss) {
        if (eval_loss < best) {
            best = eval_loss;
            best_epoch = epoch;
            stale = 0;
            return false;
        }
        stale += 1;
        return stale >= patience;
    }
    bool improved_at(int epoch) const { return best_epoch == epoch; }
};

struct TrainResult {
    nn::ModelParams best;
    std::vector<EpochStats> history;
    int best_epoch = 0;
    double best_eval_loss = 0.0;
};

// Epoch loop: seeded shuffle, minibatches, AdamW with the scheduled rate,
// held-out evaluation, early stopping on the held-out loss.
TrainResult train(nn::ModelParams init, const Mat& train_x, const std::vector<int>& train_y,
                  const Mat& eval_x, const std::vector<int>& eval_y, const TrainConfig& cfg);

struct EvalReport {
    double accuracy = 0.0;
    double precision = 0.0;  // support-weighted
    double recall = 0.0;     // support-weighted (equals accuracy)
    double f1 = 0.0;         // support-weighted
    double loss = 0.0;
    Mat confusion;           // rows = true class, cols = predicted
    std::vector<long> tp, fp, fn, tn;
    long total = 0;
};

EvalReport evaluate(const nn::ModelParams& params, const Mat& x, const std::vector<int>& y,
                    int threads = 1);

// Metrics from a raw confusion matrix; used by evaluate and directly
// testable against hand-computed cases.
EvalReport report_from_confusion(const Mat& confusion);

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history);
std::vector<EpochStats> read_history_csv(const std::string& path);
void write_confusion_csv(const std::string& path, const Mat& confusion,
                         const LabelCodec& codec);

}  // namespace qkd::train
