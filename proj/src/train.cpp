#include "qkd/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "qkd/parallel.hpp"
#include "qkd/rng.hpp"

namespace qkd::train {

void TrainConfig::validate() const {
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (lr_init <= 0.0) throw std::invalid_argument("lr_init must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (t_0 < 1) throw std::invalid_argument("t_0 must be >= 1");
    if (patience < 1 || patience > max_epochs)
        throw std::invalid_argument("patience must be in [1, max_epochs]");
}

OptimState OptimState::like(const nn::ModelParams& params) {
    OptimState st;
    st.m = nn::ModelParams::zeros_like(params);
    st.v = nn::ModelParams::zeros_like(params);
    return st;
}

double lr_at(const SchedulerState& st, int t_cur) {
    if (t_cur < 0) throw std::invalid_argument("t_cur must be >= 0");
    return st.eta_min +
           0.5 * (st.eta_max - st.eta_min) *
               (1.0 + std::cos(M_PI * static_cast<double>(t_cur) / static_cast<double>(st.t_i)));
}

void scheduler_advance(SchedulerState& st) {
    st.t_cur += 1;
    if (st.t_cur >= st.t_i) st.t_cur = 0;
}

CrossEntropy cross_entropy(const Mat& logits, const std::vector<int>& targets) {
    if (static_cast<int>(targets.size()) != logits.rows)
        throw std::invalid_argument("cross_entropy: target count mismatch");
    const int n = logits.rows, k = logits.cols;
    CrossEntropy out;
    out.d_logits = Mat(n, k);
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        if (targets[r] < 0 || targets[r] >= k)
            throw std::invalid_argument("cross_entropy: target index out of range");
        const double* row = logits.row(r);
        double mx = row[0];
        for (int c = 1; c < k; ++c) mx = std::max(mx, row[c]);
        double denom = 0.0;
        for (int c = 0; c < k; ++c) denom += std::exp(row[c] - mx);
        const double log_denom = std::log(denom);
        total += log_denom - (row[targets[r]] - mx);
        for (int c = 0; c < k; ++c) {
            const double softmax = std::exp(row[c] - mx) / denom;
            out.d_logits(r, c) = (softmax - (c == targets[r] ? 1.0 : 0.0)) / n;
        }
    }
    out.loss = total / n;
    return out;
}

void adamw_step(nn::ModelParams& params, const nn::ModelParams& grads, OptimState& st,
                double lr, double weight_decay) {
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));

    auto p = params.tensors();
    const auto g = grads.tensors();
    auto m = st.m.tensors();
    auto v = st.v.tensors();
    for (std::size_t k = 0; k < p.size(); ++k) {
        for (std::size_t j = 0; j < p[k].size(); ++j) {
            double& pj = p[k][j];
            const double gj = g[k][j];
            pj -= lr * weight_decay * pj;  // decoupled decay
            double& mj = m[k][j];
            double& vj = v[k][j];
            mj = st.beta1 * mj + (1.0 - st.beta1) * gj;
            vj = st.beta2 * vj + (1.0 - st.beta2) * gj * gj;
            const double m_hat = mj / bc1;
            const double v_hat = vj / bc2;
            pj -= lr * m_hat / (std::sqrt(v_hat) + st.eps);
        }
    }
}

namespace {

double eval_loss_only(const nn::ModelParams& params, const Mat& x, const std::vector<int>& y,
                      int threads, double* accuracy) {
    SequenceBatch all;
    all.x = x;
    all.y = y;
    const nn::BatchForward fwd = nn::model_forward(all, params, threads);
    const CrossEntropy ce = cross_entropy(fwd.logits, y);
    if (accuracy) {
        long correct = 0;
        for (int r = 0; r < fwd.logits.rows; ++r) {
            int arg = 0;
            for (int c = 1; c < fwd.logits.cols; ++c)
                if (fwd.logits(r, c) > fwd.logits(r, arg)) arg = c;
            if (arg == y[r]) ++correct;
        }
        *accuracy = static_cast<double>(correct) / fwd.logits.rows;
    }
    return ce.loss;
}

}  // namespace

TrainResult train(nn::ModelParams init, const Mat& train_x, const std::vector<int>& train_y,
                  const Mat& eval_x, const std::vector<int>& eval_y, const TrainConfig& cfg) {
    cfg.validate();
    if (train_x.rows == 0) throw std::invalid_argument("train: empty training set");
    if (eval_x.rows == 0) throw std::invalid_argument("train: empty evaluation set");

    TrainResult result;
    result.best = init;
    result.best_eval_loss = std::numeric_limits<double>::infinity();

    nn::ModelParams params = std::move(init);
    OptimState opt = OptimState::like(params);
    SchedulerState sched{cfg.lr_init, cfg.lr_min, cfg.t_0, 0};
    RandomStream shuffle_rng(splitmix64(cfg.seed ^ 0x7368756646ULL));

    std::vector<int> order(train_x.rows);
    for (int i = 0; i < train_x.rows; ++i) order[i] = i;

    EarlyStopper stopper{cfg.patience};
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at(sched, sched.t_cur);

        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.pick(i)]);

        double loss_sum = 0.0;
        long loss_count = 0;
        for (int start = 0; start < train_x.rows; start += cfg.batch_size) {
            const int n = std::min(cfg.batch_size, train_x.rows - start);
            SequenceBatch batch;
            batch.x = Mat(n, train_x.cols);
            batch.y.resize(n);
            for (int r = 0; r < n; ++r) {
                const int src = order[start + r];
                for (int c = 0; c < train_x.cols; ++c) batch.x(r, c) = train_x(src, c);
                batch.y[r] = train_y[src];
            }

            const nn::BatchForward fwd = nn::model_forward(batch, params, cfg.threads);
            const CrossEntropy ce = cross_entropy(fwd.logits, batch.y);
            const nn::ModelParams grads =
                nn::model_backward(batch, fwd, ce.d_logits, params, cfg.threads);
            adamw_step(params, grads, opt, lr, cfg.weight_decay);

            loss_sum += ce.loss * n;
            loss_count += n;
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.train_loss = loss_sum / static_cast<double>(loss_count);
        stats.eval_loss = eval_loss_only(params, eval_x, eval_y, cfg.threads, &stats.accuracy);
        result.history.push_back(stats);

        const bool stop = stopper.observe(stats.epoch, stats.eval_loss);
        if (stopper.improved_at(stats.epoch)) {
            result.best_eval_loss = stats.eval_loss;
            result.best = params;
            result.best_epoch = stats.epoch;
        }
        if (stop) break;
        scheduler_advance(sched);
    }
    return result;
}

EvalReport report_from_confusion(const Mat& confusion) {
    const int k = confusion.rows;
    if (k == 0 || confusion.cols != k)
        throw std::invalid_argument("confusion matrix must be square and nonempty");

    EvalReport rep;
    rep.confusion = confusion;
    rep.tp.assign(k, 0);
    rep.fp.assign(k, 0);
    rep.fn.assign(k, 0);
    rep.tn.assign(k, 0);

    long total = 0, diag = 0;
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            const long n = static_cast<long>(confusion(r, c));
            total += n;
            if (r == c) diag += n;
        }
    if (total == 0) throw std::invalid_argument("empty evaluation set");

    double precision_w = 0.0, recall_w = 0.0, f1_w = 0.0;
    for (int c = 0; c < k; ++c) {
        long tp = static_cast<long>(confusion(c, c));
        long support = 0, predicted = 0;
        for (int r = 0; r < k; ++r) {
            support += static_cast<long>(confusion(c, r));
            predicted += static_cast<long>(confusion(r, c));
        }
        rep.tp[c] = tp;
        rep.fp[c] = predicted - tp;
        rep.fn[c] = support - tp;
        rep.tn[c] = total - support - (predicted - tp);

        const double prec = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
        const double rec = support > 0 ? static_cast<double>(tp) / support : 0.0;
        const double f1 = prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        const double w = static_cast<double>(support) / total;
        precision_w += w * prec;
        recall_w += w * rec;
        f1_w += w * f1;
    }

    rep.total = total;
    rep.accuracy = static_cast<double>(diag) / total;
    rep.precision = precision_w;
    rep.recall = recall_w;
    rep.f1 = f1_w;
    return rep;
}

EvalReport evaluate(const nn::ModelParams& params, const Mat& x, const std::vector<int>& y,
                    int threads) {
    if (x.rows == 0) throw std::invalid_argument("evaluate: empty test set");
    SequenceBatch all;
    all.x = x;
    all.y = y;
    const nn::BatchForward fwd = nn::model_forward(all, params, threads);
    const CrossEntropy ce = cross_entropy(fwd.logits, y);

    const int k = params.hyper.n_classes;
    Mat confusion(k, k);
    for (int r = 0; r < fwd.logits.rows; ++r) {
        int arg = 0;
        for (int c = 1; c < k; ++c)
            if (fwd.logits(r, c) > fwd.logits(r, arg)) arg = c;
        confusion(y[r], arg) += 1.0;
    }
    EvalReport rep = report_from_confusion(confusion);
    rep.loss = ce.loss;
    return rep;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "epoch,train_loss,eval_loss,accuracy\n";
    char buf[64];
    auto fixed = [&buf](double v) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 9);
        return std::string(buf, res.ptr);
    };
    for (const auto& s : history)
        out << s.epoch << ',' << fixed(s.train_loss) << ',' << fixed(s.eval_loss) << ','
            << fixed(s.accuracy) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EpochStats> read_history_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open history: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("epoch,", 0) != 0)
        throw std::runtime_error("not a history csv: " + path);
    std::vector<EpochStats> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EpochStats s;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &s.epoch, &s.train_loss, &s.eval_loss,
                        &s.accuracy) != 4)
            throw std::runtime_error("malformed history row in " + path + ": " + line);
        out.push_back(s);
    }
    return out;
}

void write_confusion_csv(const std::string& path, const Mat& confusion,
                         const LabelCodec& codec) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "true_label";
    for (const auto& label : codec.labels) out << ',' << label;
    out << '\n';
    for (int r = 0; r < confusion.rows; ++r) {
        out << codec.labels[r];
        for (int c = 0; c < confusion.cols; ++c)
            out << ',' << static_cast<long>(confusion(r, c));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace qkd::train
