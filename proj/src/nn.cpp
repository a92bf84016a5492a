#include "qkd/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "qkd/parallel.hpp"
#include "qkd/rng.hpp"

namespace qkd::nn {

std::vector<std::span<double>> ModelParams::tensors() {
    std::vector<std::span<double>> out;
    auto add_vec = [&out](Vec& v) { out.emplace_back(v.data(), v.size()); };
    auto add_mat = [&out](Mat& m) { out.emplace_back(m.a.data(), m.a.size()); };
    if (qlstm) {
        for (auto& gate : qlstm->gates) {
            add_mat(gate.in_proj_w);
            add_vec(gate.in_proj_b);
            out.emplace_back(gate.vqc.angles.data(), gate.vqc.angles.size());
        }
    }
    for (auto& m : lstm.w_x) add_mat(m);
    for (auto& m : lstm.w_h) add_mat(m);
    for (auto& v : lstm.b) add_vec(v);
    add_mat(fc.w);
    add_vec(fc.b);
    return out;
}

std::vector<std::span<const double>> ModelParams::tensors() const {
    // read-only view over the same fixed tensor order
    auto spans = const_cast<ModelParams*>(this)->tensors();
    return {spans.begin(), spans.end()};
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.size();
    return n;
}

ModelParams ModelParams::init(const ModelHyper& hyper, std::uint64_t seed) {
    ModelParams p;
    p.hyper = hyper;
    RandomStream rng(splitmix64(seed ^ 0x696e6974ULL));
    auto uniform_pm = [&rng](double bound) { return (rng.uniform() * 2.0 - 1.0) * bound; };

    const int lstm_input = hyper.kind == ModelKind::Hybrid ? hyper.n_qubits : hyper.x_dim;

    if (hyper.kind == ModelKind::Hybrid) {
        QlstmParams q;
        q.n_qubits = hyper.n_qubits;
        q.n_qlayers = hyper.n_qlayers;
        q.x_dim = hyper.x_dim;
        const int v_dim = q.hidden() + q.x_dim;
        const double bound = 1.0 / std::sqrt(static_cast<double>(v_dim));
        for (auto& gate : q.gates) {
            gate.in_proj_w = Mat(q.n_qubits, v_dim);
            for (double& v : gate.in_proj_w.a) v = uniform_pm(bound);
            gate.in_proj_b.assign(q.n_qubits, 0.0);
            gate.vqc = qsim::EntanglerWeights(q.n_qlayers, q.n_qubits);
            for (double& v : gate.vqc.angles) v = rng.uniform() * 2.0 * M_PI;
        }
        p.qlstm = std::move(q);
    }

    p.lstm.input = lstm_input;
    p.lstm.hidden = hyper.lstm_hidden;
    const double bx = 1.0 / std::sqrt(static_cast<double>(lstm_input));
    const double bh = 1.0 / std::sqrt(static_cast<double>(hyper.lstm_hidden));
    for (int g = 0; g < 4; ++g) {
        p.lstm.w_x[g] = Mat(hyper.lstm_hidden, lstm_input);
        for (double& v : p.lstm.w_x[g].a) v = uniform_pm(bx);
        p.lstm.w_h[g] = Mat(hyper.lstm_hidden, hyper.lstm_hidden);
        for (double& v : p.lstm.w_h[g].a) v = uniform_pm(bh);
        // forget-gate bias starts at 1 so early cell state survives
        p.lstm.b[g].assign(hyper.lstm_hidden, g == kForget ? 1.0 : 0.0);
    }

    p.fc.w = Mat(hyper.n_classes, hyper.lstm_hidden);
    for (double& v : p.fc.w.a) v = uniform_pm(bh);
    p.fc.b.assign(hyper.n_classes, 0.0);
    return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
    ModelParams p = other;
    p.fill(0.0);
    return p;
}

void ModelParams::fill(double value) {
    for (auto t : tensors())
        for (double& v : t) v = value;
}

namespace {

Vec affine(const Mat& w, const Vec& b, const Vec& x) {
    Vec y = matvec(w, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

void elementwise_activations(QlstmStepCache& c) {
    const std::size_t n = c.a[0].size();
    c.f.resize(n);
    c.i.resize(n);
    c.cbar.resize(n);
    c.o.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.f[k] = sigmoid(c.a[kForget][k]);
        c.i[k] = sigmoid(c.a[kInput][k]);
        c.cbar[k] = std::tanh(c.a[kCandidate][k]);
        c.o[k] = sigmoid(c.a[kOutput][k]);
    }
}

void cell_update(const Vec& f, const Vec& i, const Vec& cbar, const Vec& o, const Vec& c_prev,
                 Vec& c, Vec& tanh_c, Vec& h) {
    const std::size_t n = f.size();
    c.resize(n);
    tanh_c.resize(n);
    h.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c[k] = f[k] * c_prev[k] + i[k] * cbar[k];
        tanh_c[k] = std::tanh(c[k]);
        h[k] = o[k] * tanh_c[k];
    }
}

}  // namespace

void qlstm_cell(std::span<const double> x_t, const Vec& h_prev, const Vec& c_prev,
                const QlstmParams& p, QlstmStepCache& cache) {
    if (static_cast<int>(x_t.size()) != p.x_dim ||
        static_cast<int>(h_prev.size()) != p.hidden() ||
        static_cast<int>(c_prev.size()) != p.hidden())
        throw std::invalid_argument("qlstm_cell: shape mismatch");

    cache.v.assign(h_prev.begin(), h_prev.end());
    cache.v.insert(cache.v.end(), x_t.begin(), x_t.end());
    cache.c_prev = c_prev;

    for (int g = 0; g < 4; ++g) {
        cache.z[g] = affine(p.gates[g].in_proj_w, p.gates[g].in_proj_b, cache.v);
        cache.a[g] = qsim::vqc_eval(cache.z[g], p.gates[g].vqc);
    }
    elementwise_activations(cache);
    cell_update(cache.f, cache.i, cache.cbar, cache.o, c_prev, cache.c, cache.tanh_c, cache.h);
}

void lstm_cell(std::span<const double> x_t, const Vec& h_prev, const Vec& c_prev,
               const LstmParams& p, LstmStepCache& cache) {
    if (static_cast<int>(x_t.size()) != p.input ||
        static_cast<int>(h_prev.size()) != p.hidden ||
        static_cast<int>(c_prev.size()) != p.hidden)
        throw std::invalid_argument("lstm_cell: shape mismatch");

    cache.x.assign(x_t.begin(), x_t.end());
    cache.c_prev = c_prev;
    for (int g = 0; g < 4; ++g) {
        cache.pre[g] = affine(p.w_x[g], p.b[g], cache.x);
        const Vec hh = matvec(p.w_h[g], h_prev);
        for (int k = 0; k < p.hidden; ++k) cache.pre[g][k] += hh[k];
    }
    const int n = p.hidden;
    cache.f.resize(n);
    cache.i.resize(n);
    cache.cbar.resize(n);
    cache.o.resize(n);
    for (int k = 0; k < n; ++k) {
        cache.f[k] = sigmoid(cache.pre[kForget][k]);
        cache.i[k] = sigmoid(cache.pre[kInput][k]);
        cache.cbar[k] = std::tanh(cache.pre[kCandidate][k]);
        cache.o[k] = sigmoid(cache.pre[kOutput][k]);
    }
    cell_update(cache.f, cache.i, cache.cbar, cache.o, c_prev, cache.c, cache.tanh_c, cache.h);
}

void model_forward_sample(std::span<const double> seq, const ModelParams& p,
                          SampleCache& cache) {
    const ModelHyper& hy = p.hyper;
    if (static_cast<int>(seq.size()) != hy.seq_len)
        throw std::invalid_argument("model_forward: sequence length mismatch");

    cache.qlstm_steps.clear();
    cache.lstm_steps.clear();

    if (hy.kind == ModelKind::Hybrid) {
        const QlstmParams& q = *p.qlstm;
        Vec h(q.hidden(), 0.0), c(q.hidden(), 0.0);
        cache.qlstm_steps.resize(hy.seq_len);
        for (int t = 0; t < hy.seq_len; ++t) {
            qlstm_cell(seq.subspan(t, 1), h, c, q, cache.qlstm_steps[t]);
            h = cache.qlstm_steps[t].h;
            c = cache.qlstm_steps[t].c;
        }
        Vec lh(p.lstm.hidden, 0.0), lc(p.lstm.hidden, 0.0);
        cache.lstm_steps.resize(hy.seq_len);
        for (int t = 0; t < hy.seq_len; ++t) {
            lstm_cell(cache.qlstm_steps[t].h, lh, lc, p.lstm, cache.lstm_steps[t]);
            lh = cache.lstm_steps[t].h;
            lc = cache.lstm_steps[t].c;
        }
        cache.h_last = lh;
    } else {
        Vec lh(p.lstm.hidden, 0.0), lc(p.lstm.hidden, 0.0);
        cache.lstm_steps.resize(hy.seq_len);
        for (int t = 0; t < hy.seq_len; ++t) {
            lstm_cell(seq.subspan(t, 1), lh, lc, p.lstm, cache.lstm_steps[t]);
            lh = cache.lstm_steps[t].h;
            lc = cache.lstm_steps[t].c;
        }
        cache.h_last = lh;
    }
    cache.logits = affine(p.fc.w, p.fc.b, cache.h_last);
}

BatchForward model_forward(const SequenceBatch& batch, const ModelParams& p, int threads) {
    BatchForward out;
    const int n = batch.x.rows;
    out.logits = Mat(n, p.hyper.n_classes);
    out.caches.resize(n);
    parallel_for(n, threads, [&](int s) {
        model_forward_sample({batch.x.row(s), static_cast<std::size_t>(batch.x.cols)}, p,
                             out.caches[s]);
        for (int c = 0; c < p.hyper.n_classes; ++c) out.logits(s, c) = out.caches[s].logits[c];
    });
    return out;
}

namespace {

// BPTT through the classical LSTM. d_x_out (when non-null) receives the
// gradient w.r.t. the layer inputs, one Vec per timestep.
void lstm_backward(const std::vector<LstmStepCache>& steps, const Vec& d_h_last,
                   const LstmParams& p, LstmParams& grads, std::vector<Vec>* d_x_out) {
    const int T = static_cast<int>(steps.size());
    const int n = p.hidden;
    Vec dh = d_h_last;
    Vec dc(n, 0.0);
    const Vec zeros(n, 0.0);
    if (d_x_out) d_x_out->assign(T, Vec());

    for (int t = T - 1; t >= 0; --t) {
        const LstmStepCache& s = steps[t];
        Vec d_o(n), d_c_total(n);
        for (int k = 0; k < n; ++k) {
            d_o[k] = dh[k] * s.tanh_c[k];
            d_c_total[k] = dc[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
        }
        std::array<Vec, 4> d_pre;
        for (auto& v : d_pre) v.assign(n, 0.0);
        for (int k = 0; k < n; ++k) {
            const double d_f = d_c_total[k] * s.c_prev[k];
            const double d_i = d_c_total[k] * s.cbar[k];
            const double d_cb = d_c_total[k] * s.i[k];
            d_pre[kForget][k] = d_f * s.f[k] * (1.0 - s.f[k]);
            d_pre[kInput][k] = d_i * s.i[k] * (1.0 - s.i[k]);
            d_pre[kCandidate][k] = d_cb * (1.0 - s.cbar[k] * s.cbar[k]);
            d_pre[kOutput][k] = d_o[k] * s.o[k] * (1.0 - s.o[k]);
        }

        const Vec& h_prev = t > 0 ? steps[t - 1].h : zeros;
        Vec dh_prev(n, 0.0);
        Vec dx(p.input, 0.0);
        for (int g = 0; g < 4; ++g) {
            add_outer(grads.w_x[g], d_pre[g], s.x);
            add_outer(grads.w_h[g], d_pre[g], h_prev);
            add_inplace(grads.b[g], d_pre[g]);
            add_inplace(dh_prev, matvec_t(p.w_h[g], d_pre[g]));
            add_inplace(dx, matvec_t(p.w_x[g], d_pre[g]));
        }
        if (d_x_out) (*d_x_out)[t] = std::move(dx);

        dh = std::move(dh_prev);
        for (int k = 0; k < n; ++k) dc[k] = d_c_total[k] * s.f[k];
    }
}

// BPTT through the QLSTM, chaining the adjoint-mode circuit gradients
// with the projection and the recurrent concat path.
void qlstm_backward(const std::vector<QlstmStepCache>& steps, const std::vector<Vec>& d_h_per_t,
                    const QlstmParams& p, QlstmParams& grads) {
    const int T = static_cast<int>(steps.size());
    const int n = p.hidden();
    Vec dh_rec(n, 0.0);
    Vec dc(n, 0.0);

    for (int t = T - 1; t >= 0; --t) {
        const QlstmStepCache& s = steps[t];
        Vec dh(n);
        for (int k = 0; k < n; ++k) dh[k] = d_h_per_t[t][k] + dh_rec[k];

        Vec d_o(n), d_c_total(n);
        for (int k = 0; k < n; ++k) {
            d_o[k] = dh[k] * s.tanh_c[k];
            d_c_total[k] = dc[k] + dh[k] * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
        }
        std::array<Vec, 4> d_a;
        for (auto& v : d_a) v.assign(n, 0.0);
        for (int k = 0; k < n; ++k) {
            const double d_f = d_c_total[k] * s.c_prev[k];
            const double d_i = d_c_total[k] * s.cbar[k];
            const double d_cb = d_c_total[k] * s.i[k];
            d_a[kForget][k] = d_f * s.f[k] * (1.0 - s.f[k]);
            d_a[kInput][k] = d_i * s.i[k] * (1.0 - s.i[k]);
            d_a[kCandidate][k] = d_cb * (1.0 - s.cbar[k] * s.cbar[k]);
            d_a[kOutput][k] = d_o[k] * s.o[k] * (1.0 - s.o[k]);
        }

        Vec dv(s.v.size(), 0.0);
        for (int g = 0; g < 4; ++g) {
            const auto vjp = qsim::vqc_vjp(s.z[g], p.gates[g].vqc, d_a[g]);
            for (std::size_t k = 0; k < vjp.d_w.angles.size(); ++k)
                grads.gates[g].vqc.angles[k] += vjp.d_w.angles[k];
            add_outer(grads.gates[g].in_proj_w, vjp.d_x, s.v);
            add_inplace(grads.gates[g].in_proj_b, vjp.d_x);
            add_inplace(dv, matvec_t(p.gates[g].in_proj_w, vjp.d_x));
        }

        dh_rec.assign(dv.begin(), dv.begin() + n);
        for (int k = 0; k < n; ++k) dc[k] = d_c_total[k] * s.f[k];
    }
}

}  // namespace

void model_backward_sample(std::span<const double> seq, const SampleCache& cache,
                           std::span<const double> d_logits, const ModelParams& p,
                           ModelParams& grads) {
    (void)seq;
    const ModelHyper& hy = p.hyper;
    const Vec d_logits_v(d_logits.begin(), d_logits.end());

    add_outer(grads.fc.w, d_logits_v, cache.h_last);
    add_inplace(grads.fc.b, d_logits_v);
    const Vec d_h_last = matvec_t(p.fc.w, d_logits_v);

    if (hy.kind == ModelKind::Hybrid) {
        std::vector<Vec> d_lstm_inputs;
        lstm_backward(cache.lstm_steps, d_h_last, p.lstm, grads.lstm, &d_lstm_inputs);
        qlstm_backward(cache.qlstm_steps, d_lstm_inputs, *p.qlstm, *grads.qlstm);
    } else {
        lstm_backward(cache.lstm_steps, d_h_last, p.lstm, grads.lstm, nullptr);
    }
}

ModelParams model_backward(const SequenceBatch& batch, const BatchForward& fwd,
                           const Mat& d_logits, const ModelParams& p, int threads) {
    const int n = batch.x.rows;
    std::vector<ModelParams> per_sample(n, ModelParams::zeros_like(p));
    parallel_for(n, threads, [&](int s) {
        model_backward_sample({batch.x.row(s), static_cast<std::size_t>(batch.x.cols)},
                              fwd.caches[s],
                              {d_logits.row(s), static_cast<std::size_t>(d_logits.cols)}, p,
                              per_sample[s]);
    });
    ModelParams total = ModelParams::zeros_like(p);
    auto total_t = total.tensors();
    for (int s = 0; s < n; ++s) {
        const auto sample_t = per_sample[s].tensors();
        for (std::size_t k = 0; k < total_t.size(); ++k)
            for (std::size_t j = 0; j < total_t[k].size(); ++j)
                total_t[k][j] += sample_t[k][j];
    }
    return total;
}

// ---- checkpoint io ----

namespace {

constexpr char kMagic[8] = {'Q', 'K', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_vec(std::ostream& out, const Vec& v) {
    write_u64(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Vec read_vec(std::istream& in) {
    Vec v(read_u64(in));
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    std::string s(read_u32(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params, const Scaler& scaler,
                     const LabelCodec& codec, const CheckpointMeta& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kVersion);

    const ModelHyper& hy = params.hyper;
    write_u32(out, hy.kind == ModelKind::Hybrid ? 1 : 0);
    write_u32(out, static_cast<std::uint32_t>(hy.x_dim));
    write_u32(out, static_cast<std::uint32_t>(hy.n_qubits));
    write_u32(out, static_cast<std::uint32_t>(hy.n_qlayers));
    write_u32(out, static_cast<std::uint32_t>(hy.lstm_hidden));
    write_u32(out, static_cast<std::uint32_t>(hy.n_classes));
    write_u32(out, static_cast<std::uint32_t>(hy.seq_len));

    write_u64(out, meta.split_seed);
    write_f64(out, meta.split_ratio);
    write_u64(out, meta.init_seed);
    write_u32(out, static_cast<std::uint32_t>(meta.trained_epochs));

    write_vec(out, scaler.means);
    write_vec(out, scaler.stds);

    write_u32(out, static_cast<std::uint32_t>(codec.labels.size()));
    for (const auto& label : codec.labels) write_string(out, label);

    const auto tensors = params.tensors();
    write_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        write_u64(out, t.size());
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    if (read_u32(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");

    ModelHyper hy;
    hy.kind = read_u32(in) == 1 ? ModelKind::Hybrid : ModelKind::ClassicalLstm;
    hy.x_dim = static_cast<int>(read_u32(in));
    hy.n_qubits = static_cast<int>(read_u32(in));
    hy.n_qlayers = static_cast<int>(read_u32(in));
    hy.lstm_hidden = static_cast<int>(read_u32(in));
    hy.n_classes = static_cast<int>(read_u32(in));
    hy.seq_len = static_cast<int>(read_u32(in));

    Checkpoint ck;
    ck.meta.split_seed = read_u64(in);
    ck.meta.split_ratio = read_f64(in);
    ck.meta.init_seed = read_u64(in);
    ck.meta.trained_epochs = static_cast<int>(read_u32(in));

    ck.scaler.means = read_vec(in);
    ck.scaler.stds = read_vec(in);

    const auto n_labels = read_u32(in);
    for (std::uint32_t i = 0; i < n_labels; ++i) ck.codec.labels.push_back(read_string(in));

    ck.params = ModelParams::init(hy, 0);  // shapes only; values overwritten below
    auto tensors = ck.params.tensors();
    const auto n_tensors = read_u32(in);
    if (n_tensors != tensors.size())
        throw std::runtime_error("checkpoint tensor count mismatch");
    for (auto& t : tensors) {
        const auto n = read_u64(in);
        if (n != t.size()) throw std::runtime_error("checkpoint tensor shape mismatch");
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ck;
}

}  // namespace qkd::nn
