#include "qkd/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "qkd/rng.hpp"

namespace qkd {

const std::vector<std::string>& selected_feature_names() {
    static const std::vector<std::string> names = {
        "Key_Length",    "QBER",           "Measurement_entropy",
        "Signal_loss_rate", "Decoy_loss_rate", "Avg_Photon_time",
        "Whole_key_time", "Arrival_var",   "Arrival_dev"};
    return names;
}

LabelCodec LabelCodec::standard() {
    LabelCodec codec;
    for (int i = 0; i < kScenarioCount; ++i)
        codec.labels.push_back(scenario_label(static_cast<ScenarioKind>(i)));
    std::sort(codec.labels.begin(), codec.labels.end());
    return codec;
}

int LabelCodec::index_of(const std::string& label) const {
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw std::invalid_argument("unknown label: " + label);
    return static_cast<int>(it - labels.begin());
}

const std::string& LabelCodec::label_of(int index) const {
    if (index < 0 || index >= num_classes())
        throw std::invalid_argument("label index out of range");
    return labels[index];
}

Vec LabelCodec::one_hot(int index) const {
    if (index < 0 || index >= num_classes())
        throw std::invalid_argument("label index out of range");
    Vec v(num_classes(), 0.0);
    v[static_cast<std::size_t>(index)] = 1.0;
    return v;
}

Labeled select_features(const DatasetTable& table, const LabelCodec& codec) {
    Labeled out;
    out.x = Mat(static_cast<int>(table.rows.size()), kFeatureCount);
    out.y.reserve(table.rows.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const MetricsRow& r = table.rows[i];
        double* row = out.x.row(static_cast<int>(i));
        row[0] = static_cast<double>(r.key_length);
        row[1] = r.qber;
        row[2] = r.measurement_entropy;
        row[3] = r.signal_loss_rate;
        row[4] = r.decoy_loss_rate;
        row[5] = r.avg_photon_time;
        row[6] = r.whole_key_time;
        row[7] = r.arrival_var;
        row[8] = r.arrival_dev;
        out.y.push_back(codec.index_of(r.label));
    }
    return out;
}

Scaler fit_scaler(const Mat& train) {
    if (train.rows == 0) throw std::invalid_argument("fit_scaler: empty training matrix");
    Scaler s;
    s.means.assign(train.cols, 0.0);
    s.stds.assign(train.cols, 0.0);
    for (int r = 0; r < train.rows; ++r)
        for (int c = 0; c < train.cols; ++c) s.means[c] += train(r, c);
    for (int c = 0; c < train.cols; ++c) s.means[c] /= train.rows;
    for (int r = 0; r < train.rows; ++r)
        for (int c = 0; c < train.cols; ++c) {
            const double d = train(r, c) - s.means[c];
            s.stds[c] += d * d;
        }
    for (int c = 0; c < train.cols; ++c) {
        s.stds[c] = std::sqrt(s.stds[c] / train.rows);
        if (s.stds[c] <= 0.0)
            throw std::invalid_argument("degenerate feature: column " + std::to_string(c) +
                                        " is constant on the training split");
    }
    return s;
}

Mat Scaler::transform(const Mat& x) const {
    if (x.cols != static_cast<int>(means.size()))
        throw std::invalid_argument("scaler dimension mismatch");
    Mat out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - means[c]) / stds[c];
    return out;
}

Mat Scaler::inverse_transform(const Mat& x) const {
    if (x.cols != static_cast<int>(means.size()))
        throw std::invalid_argument("scaler dimension mismatch");
    Mat out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c) out(r, c) = x(r, c) * stds[c] + means[c];
    return out;
}

namespace {

Mat gather_rows(const Mat& x, const std::vector<std::size_t>& idx) {
    Mat out(static_cast<int>(idx.size()), x.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int c = 0; c < x.cols; ++c) out(static_cast<int>(i), c) = x(static_cast<int>(idx[i]), c);
    return out;
}

void seeded_shuffle(std::vector<std::size_t>& idx, RandomStream& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.pick(i)]);
}

}  // namespace

Split stratified_split(const Mat& x, const std::vector<int>& y, double ratio,
                       std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must be in (0,1)");
    if (static_cast<int>(y.size()) != x.rows)
        throw std::invalid_argument("label count must match row count");

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

    Split split;
    RandomStream rng(splitmix64(seed));
    for (auto& [cls, idx] : by_class) {
        if (idx.size() < 2)
            throw std::invalid_argument("class " + std::to_string(cls) +
                                        " has fewer than 2 samples; cannot stratify");
        seeded_shuffle(idx, rng);
        auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? split.train_idx : split.test_idx).push_back(idx[i]);
    }
    std::sort(split.train_idx.begin(), split.train_idx.end());
    std::sort(split.test_idx.begin(), split.test_idx.end());

    split.train_x = gather_rows(x, split.train_idx);
    split.test_x = gather_rows(x, split.test_idx);
    for (std::size_t i : split.train_idx) split.train_y.push_back(y[i]);
    for (std::size_t i : split.test_idx) split.test_y.push_back(y[i]);
    return split;
}

Mat inject_noise(const Mat& train, double sigma, std::uint64_t seed) {
    Mat out = train;
    if (sigma == 0.0) return out;
    RandomStream rng(splitmix64(seed ^ 0x6e6f697365ULL));
    for (double& v : out.a) v += rng.normal(0.0, sigma);
    return out;
}

std::vector<SequenceBatch> make_sequences(const Mat& x, const std::vector<int>& y,
                                          int batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<SequenceBatch> batches;
    for (int start = 0; start < x.rows; start += batch_size) {
        const int n = std::min(batch_size, x.rows - start);
        SequenceBatch b;
        b.x = Mat(n, x.cols);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < x.cols; ++c) b.x(r, c) = x(start + r, c);
        b.y.assign(y.begin() + start, y.begin() + start + n);
        batches.push_back(std::move(b));
    }
    return batches;
}

Split subsample_train(const Split& split, int target, std::uint64_t seed) {
    if (target <= 0 || target >= split.train_x.rows) return split;

    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < split.train_y.size(); ++i)
        by_class[split.train_y[i]].push_back(i);

    const double frac = static_cast<double>(target) / split.train_x.rows;
    RandomStream rng(splitmix64(seed ^ 0x737562ULL));
    std::vector<std::size_t> keep;
    for (auto& [cls, idx] : by_class) {
        seeded_shuffle(idx, rng);
        auto n = static_cast<std::size_t>(std::llround(frac * static_cast<double>(idx.size())));
        n = std::clamp<std::size_t>(n, 1, idx.size());
        keep.insert(keep.end(), idx.begin(), idx.begin() + n);
    }
    std::sort(keep.begin(), keep.end());

    Split out;
    out.test_x = split.test_x;
    out.test_y = split.test_y;
    out.test_idx = split.test_idx;
    out.train_x = Mat(static_cast<int>(keep.size()), split.train_x.cols);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        for (int c = 0; c < split.train_x.cols; ++c)
            out.train_x(static_cast<int>(i), c) = split.train_x(static_cast<int>(keep[i]), c);
        out.train_y.push_back(split.train_y[keep[i]]);
        out.train_idx.push_back(split.train_idx[keep[i]]);
    }
    return out;
}

}  // namespace qkd
