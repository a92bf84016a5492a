#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkd/dataset.hpp"
#include "qkd/linalg.hpp"

namespace qkd {

inline constexpr int kFeatureCount = 9;
inline constexpr int kSequenceLength = 9;  // one timestep per selected feature

// Selected feature columns, in order (detection rates are dropped: the
// loss rates carry the same information).
const std::vector<std::string>& selected_feature_names();

struct Labeled {
    Mat x;                    // [N x 9]
    std::vector<int> y;      // class indices
};

// Maps the eight labels to indices 0..7 in alphabetical order.
struct LabelCodec {
    std::vector<std::string> labels;

    static LabelCodec standard();
    int index_of(const std::string& label) const;  // throws on unknown label
    const std::string& label_of(int index) const;
    Vec one_hot(int index) const;
    int num_classes() const { return static_cast<int>(labels.size()); }
};

Labeled select_features(const DatasetTable& table, const LabelCodec& codec);

struct Scaler {
    Vec means;
    Vec stds;

    Mat transform(const Mat& x) const;
    Mat inverse_transform(const Mat& x) const;
};

// Fit on the training split only (population standard deviation); a
// constant column is a degenerate feature and throws.
Scaler fit_scaler(const Mat& train);

struct Split {
    Mat train_x, test_x;
    std::vector<int> train_y, test_y;
    std::vector<std::size_t> train_idx, test_idx;  // indices into the source
};

// Stratified split: per class, a seeded shuffle then round(ratio * n)
// rows to train (clamped so both sides stay nonempty). Classes with
// fewer than 2 samples cannot be stratified and throw.
Split stratified_split(const Mat& x, const std::vector<int>& y, double ratio,
                       std::uint64_t seed);

// Adds iid Gaussian noise (mean 0) to a standardized training matrix.
Mat inject_noise(const Mat& train, double sigma, std::uint64_t seed);

// Batch of row-sequences: each source row becomes a sequence of
// kSequenceLength scalar timesteps (feature_dim 1).
struct SequenceBatch {
    Mat x;                  // [batch x seq_len]
    std::vector<int> y;
};

std::vector<SequenceBatch> make_sequences(const Mat& x, const std::vector<int>& y,
                                          int batch_size = 64);

// Stratified subsample of about `target` rows (proportional per class),
// used by the reduced training profile. target <= 0 keeps everything.
Split subsample_train(const Split& split, int target, std::uint64_t seed);

}  // namespace qkd
