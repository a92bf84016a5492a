#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "qkd/preprocess.hpp"

using namespace qkd;

namespace {

// Eight rows, one per label, with distinct values.
DatasetTable table_with_all_labels() {
    DatasetTable t;
    for (int s = 0; s < kScenarioCount; ++s) {
        MetricsRow row;
        row.key_length = 100 + s;
        row.qber = 0.01 * (s + 1);
        row.measurement_entropy = 0.1 * (s + 1);
        row.signal_loss_rate = 0.2;
        row.decoy_loss_rate = 0.3;
        row.avg_photon_time = 0.06;
        row.whole_key_time = 30.0 + s;
        row.arrival_var = 0.001;
        row.arrival_dev = 0.02;
        row.label = scenario_label(static_cast<ScenarioKind>(s));
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace

TEST_CASE("label codec is an alphabetical bijection") {
    const auto codec = LabelCodec::standard();
    REQUIRE(codec.num_classes() == 8);
    for (int i = 1; i < codec.num_classes(); ++i) CHECK(codec.labels[i - 1] < codec.labels[i]);
    for (int i = 0; i < codec.num_classes(); ++i)
        CHECK(codec.index_of(codec.label_of(i)) == i);
    CHECK(codec.label_of(0) == "combined_attack");
    CHECK(codec.label_of(3) == "normal");
    CHECK_THROWS_AS(codec.index_of("nope"), std::invalid_argument);

    for (int i = 0; i < codec.num_classes(); ++i) {
        const auto v = codec.one_hot(i);
        double sum = 0;
        int nonzero = 0;
        for (double x : v) {
            sum += x;
            nonzero += x != 0.0;
        }
        CHECK(sum == 1.0);
        CHECK(nonzero == 1);
        CHECK(v[i] == 1.0);
    }
}

TEST_CASE("select_features keeps the 9 training columns in order") {
    DatasetTable t;
    MetricsRow row;  // dataset sample row, first line
    row.key_length = 253;
    row.qber = 0.0553;
    row.measurement_entropy = 0.2981;
    row.signal_detection_rate = 0.7311;
    row.decoy_detection_rate = 0.7545;
    row.signal_loss_rate = 0.2691;
    row.decoy_loss_rate = 0.2455;
    row.avg_photon_time = 0.0684;
    row.whole_key_time = 35.34;
    row.arrival_var = 0.0019;
    row.arrival_dev = 0.0359;
    row.label = "normal";
    t.rows.push_back(row);

    const auto codec = LabelCodec::standard();
    const auto got = select_features(t, codec);
    REQUIRE(got.x.rows == 1);
    REQUIRE(got.x.cols == 9);
    const double want[9] = {253, 0.0553, 0.2981, 0.2691, 0.2455, 0.0684, 35.34, 0.0019, 0.0359};
    for (int c = 0; c < 9; ++c) CHECK(got.x(0, c) == doctest::Approx(want[c]));
    CHECK(got.y[0] == codec.index_of("normal"));

    // detection rates must not appear anywhere in the selected row
    for (int c = 0; c < 9; ++c) {
        CHECK(got.x(0, c) != doctest::Approx(0.7311));
        CHECK(got.x(0, c) != doctest::Approx(0.7545));
    }

    const auto names = selected_feature_names();
    CHECK(names.size() == 9);
    for (const auto& n : names) {
        CHECK(n != "Signal_detection_rate");
        CHECK(n != "Decoy_detection_rate");
    }

    const auto empty = select_features(DatasetTable{}, codec);
    CHECK(empty.x.rows == 0);
}

TEST_CASE("standardization") {
    SUBCASE("two-point column scales to minus one and one") {
        Mat train(2, 1);
        train(0, 0) = 1;
        train(1, 0) = 3;
        const auto scaler = fit_scaler(train);
        CHECK(scaler.means[0] == doctest::Approx(2.0));
        CHECK(scaler.stds[0] == doctest::Approx(1.0));  // population std
        const auto scaled = scaler.transform(train);
        CHECK(scaled(0, 0) == doctest::Approx(-1.0));
        CHECK(scaled(1, 0) == doctest::Approx(1.0));
    }
    SUBCASE("known scaler applied to a test point") {
        Scaler s;
        s.means = {1.0};
        s.stds = {1.0};
        Mat test(1, 1);
        test(0, 0) = 3;
        CHECK(s.transform(test)(0, 0) == doctest::Approx(2.0));
    }
    SUBCASE("inverse transform recovers inputs") {
        Mat train(3, 2);
        const double vals[3][2] = {{1, 10}, {2, 30}, {4, 50}};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c) train(r, c) = vals[r][c];
        const auto scaler = fit_scaler(train);
        const auto back = scaler.inverse_transform(scaler.transform(train));
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 2; ++c)
                CHECK(std::abs(back(r, c) - train(r, c)) < 1e-9);
    }
    SUBCASE("train columns are centered and unit after transform") {
        RandomStream rng(4);
        Mat train(200, 3);
        for (double& v : train.a) v = rng.normal(5.0, 3.0);
        const auto scaler = fit_scaler(train);
        const auto scaled = scaler.transform(train);
        for (int c = 0; c < 3; ++c) {
            double mean = 0, var = 0;
            for (int r = 0; r < 200; ++r) mean += scaled(r, c);
            mean /= 200;
            for (int r = 0; r < 200; ++r) var += scaled(r, c) * scaled(r, c);
            var = var / 200 - mean * mean;
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
        }
    }
    SUBCASE("constant column is rejected") {
        Mat train(5, 1);
        for (double& v : train.a) v = 2.5;
        CHECK_THROWS_AS(fit_scaler(train), std::invalid_argument);
    }
    SUBCASE("statistics come from the training split only") {
        Mat train(50, 1), test(50, 1);
        RandomStream rng(5);
        for (double& v : train.a) v = rng.normal(0.0, 1.0);
        for (double& v : test.a) v = rng.normal(4.0, 1.0);  // shifted test set
        const auto scaler = fit_scaler(train);
        const auto scaled_test = scaler.transform(test);
        double mean = 0;
        for (int r = 0; r < 50; ++r) mean += scaled_test(r, 0);
        mean /= 50;
        CHECK(std::abs(mean) > 1.0);  // would be ~0 had the scaler leaked test data
    }
}

TEST_CASE("stratified split") {
    const int per_class = 10, classes = 8;
    Mat x(per_class * classes, 2);
    std::vector<int> y;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            const int r = c * per_class + i;
            x(r, 0) = r;
            x(r, 1) = c;
            y.push_back(c);
        }

    const auto split = stratified_split(x, y, 0.8, 7);
    CHECK(split.train_x.rows == 64);
    CHECK(split.test_x.rows == 16);
    for (int c = 0; c < classes; ++c) {
        CHECK(std::count(split.train_y.begin(), split.train_y.end(), c) == 8);
        CHECK(std::count(split.test_y.begin(), split.test_y.end(), c) == 2);
    }

    SUBCASE("same seed reproduces the index sets") {
        const auto again = stratified_split(x, y, 0.8, 7);
        CHECK(again.train_idx == split.train_idx);
        CHECK(again.test_idx == split.test_idx);
    }
    SUBCASE("splits partition the input") {
        std::set<std::size_t> all(split.train_idx.begin(), split.train_idx.end());
        for (std::size_t i : split.test_idx) CHECK(all.insert(i).second);
        CHECK(all.size() == static_cast<std::size_t>(x.rows));
    }
    SUBCASE("a singleton class cannot be stratified") {
        Mat bad(3, 1);
        const std::vector<int> by{0, 0, 1};
        CHECK_THROWS_AS(stratified_split(bad, by, 0.8, 1), std::invalid_argument);
    }
    SUBCASE("ratio bounds") {
        CHECK_THROWS_AS(stratified_split(x, y, 0.0, 1), std::invalid_argument);
        CHECK_THROWS_AS(stratified_split(x, y, 1.0, 1), std::invalid_argument);
    }
}

TEST_CASE("gaussian noise injection") {
    Mat train(1000, 100);
    RandomStream rng(6);
    for (double& v : train.a) v = rng.normal(0.0, 1.0);

    SUBCASE("sigma zero is the identity") {
        const auto out = inject_noise(train, 0.0, 1);
        CHECK(out.a == train.a);
    }
    SUBCASE("difference statistics match the configured sigma") {
        const auto out = inject_noise(train, 0.05, 1);
        double mean = 0, var = 0;
        const std::size_t n = train.a.size();
        for (std::size_t i = 0; i < n; ++i) mean += out.a[i] - train.a[i];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = out.a[i] - train.a[i] - mean;
            var += d * d;
        }
        const double std_dev = std::sqrt(var / static_cast<double>(n));
        CHECK(std_dev > 0.049);
        CHECK(std_dev < 0.051);
        CHECK(std::abs(mean) < 0.001);
    }
}

TEST_CASE("sequence batching") {
    Mat x(130, 9);
    std::vector<int> y(130);
    for (int r = 0; r < 130; ++r) {
        y[r] = r % 8;
        for (int c = 0; c < 9; ++c) x(r, c) = r * 10 + c;
    }
    const auto batches = make_sequences(x, y, 64);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].x.rows == 64);
    CHECK(batches[1].x.rows == 64);
    CHECK(batches[2].x.rows == 2);

    // row becomes its own sequence of scalar timesteps, labels aligned
    CHECK(batches[1].x(0, 0) == doctest::Approx(64 * 10 + 0));
    CHECK(batches[1].x(0, 8) == doctest::Approx(64 * 10 + 8));
    CHECK(batches[1].y[0] == 64 % 8);
    CHECK(batches[2].y[1] == 129 % 8);
}

TEST_CASE("pipeline determinism end to end") {
    const auto table = table_with_all_labels();
    const auto codec = LabelCodec::standard();
    auto run = [&] {
        const auto sel = select_features(table, codec);
        // duplicate rows so each class has two samples to stratify
        Mat x(sel.x.rows * 2, sel.x.cols);
        std::vector<int> y;
        for (int r = 0; r < sel.x.rows * 2; ++r) {
            for (int c = 0; c < sel.x.cols; ++c) x(r, c) = sel.x(r % sel.x.rows, c) + 0.01 * r;
            y.push_back(sel.y[r % sel.x.rows]);
        }
        auto split = stratified_split(x, y, 0.5, 11);
        const auto scaler = fit_scaler(split.train_x);
        const auto train_scaled = inject_noise(scaler.transform(split.train_x), 0.05, 13);
        return make_sequences(train_scaled, split.train_y, 4);
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x.a == b[i].x.a);
        CHECK(a[i].y == b[i].y);
    }
}

TEST_CASE("stratified subsampling for the reduced profile") {
    Mat x(800, 2);
    std::vector<int> y;
    for (int r = 0; r < 800; ++r) {
        x(r, 0) = r;
        y.push_back(r % 8);
    }
    const auto split = stratified_split(x, y, 0.8, 3);
    const auto reduced = subsample_train(split, 160, 5);
    CHECK(reduced.train_x.rows == 160);
    CHECK(reduced.test_x.rows == split.test_x.rows);
    for (int c = 0; c < 8; ++c)
        CHECK(std::count(reduced.train_y.begin(), reduced.train_y.end(), c) == 20);

    const auto untouched = subsample_train(split, 0, 5);
    CHECK(untouched.train_x.rows == split.train_x.rows);
}
