#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "qkd/rng.hpp"
#include "qkd/train.hpp"

using namespace qkd;
using namespace qkd::train;

TEST_CASE("cross entropy closed forms") {
    SUBCASE("uniform logits over 8 classes give ln 8") {
        Mat logits(1, 8);
        const auto ce = cross_entropy(logits, {3});
        CHECK(ce.loss == doctest::Approx(std::log(8.0)));
    }
    SUBCASE("a dominant target logit drives the loss to zero") {
        Mat logits(1, 8);
        logits(0, 2) = 100.0;
        const auto ce = cross_entropy(logits, {2});
        CHECK(ce.loss >= 0.0);
        CHECK(ce.loss < 1e-40);
    }
    SUBCASE("gradient matches finite differences") {
        RandomStream rng(1);
        Mat logits(3, 8);
        for (double& v : logits.a) v = rng.normal(0.0, 2.0);
        const std::vector<int> targets{1, 7, 4};
        const auto ce = cross_entropy(logits, targets);

        // five-point stencil: O(h^4) truncation keeps the comparison at
        // the 1e-8 relative level even for small gradient entries
        const double h = 1e-3;
        auto loss_at = [&](int r, int c, double delta) {
            Mat shifted = logits;
            shifted(r, c) += delta;
            return cross_entropy(shifted, targets).loss;
        };
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 8; ++c) {
                const double fd = (-loss_at(r, c, 2 * h) + 8 * loss_at(r, c, h) -
                                   8 * loss_at(r, c, -h) + loss_at(r, c, -2 * h)) /
                                  (12 * h);
                const double an = ce.d_logits(r, c);
                CHECK(std::abs(fd - an) / std::max(1e-12, std::abs(an)) < 1e-8);
            }
    }
    SUBCASE("bad target index throws") {
        Mat logits(1, 3);
        CHECK_THROWS_AS(cross_entropy(logits, {3}), std::invalid_argument);
    }
}

TEST_CASE("adamw single-parameter oracles") {
    nn::ModelHyper hy;
    hy.kind = nn::ModelKind::ClassicalLstm;
    hy.x_dim = 1;
    hy.lstm_hidden = 1;
    hy.n_classes = 1;
    hy.seq_len = 1;
    nn::ModelParams p = nn::ModelParams::init(hy, 0);

    SUBCASE("zero gradient and zero decay leave parameters untouched") {
        const auto before = p;
        auto st = OptimState::like(p);
        adamw_step(p, nn::ModelParams::zeros_like(p), st, 0.1, 0.0);
        const auto a = before.tensors();
        const auto b = p.tensors();
        for (std::size_t k = 0; k < a.size(); ++k)
            for (std::size_t j = 0; j < a[k].size(); ++j) CHECK(a[k][j] == b[k][j]);
    }
    SUBCASE("first step matches the hand-derived closed form") {
        p.fill(1.0);
        auto grads = nn::ModelParams::zeros_like(p);
        grads.fill(1.0);
        auto st = OptimState::like(p);
        adamw_step(p, grads, st, 0.1, 0.0);
        // m_hat = 1, v_hat = 1 -> p' = 1 - 0.1 * 1 / (1 + 1e-8)
        const double expect = 1.0 - 0.1 / (1.0 + 1e-8);
        for (const auto t : p.tensors())
            for (double v : t) CHECK(std::abs(v - expect) < 1e-10);
    }
    SUBCASE("decoupled decay with zero gradient shrinks parameters by lr*wd") {
        p.fill(2.0);
        auto st = OptimState::like(p);
        adamw_step(p, nn::ModelParams::zeros_like(p), st, 0.1, 0.1);
        for (const auto t : p.tensors())
            for (double v : t) CHECK(v == doctest::Approx(2.0 * (1.0 - 0.01)));
    }
}

TEST_CASE("cosine annealing warm restarts") {
    SchedulerState st{5e-4, 0.0, 50, 0};
    CHECK(lr_at(st, 0) == doctest::Approx(5e-4));
    CHECK(lr_at(st, 25) == doctest::Approx(2.5e-4));
    CHECK(lr_at(st, 49) < 1e-5);
    CHECK(lr_at(st, 50) == doctest::Approx(0.0));

    // min just before the boundary, back to max right after the restart
    for (int e = 0; e < 49; ++e) scheduler_advance(st);
    CHECK(st.t_cur == 49);
    scheduler_advance(st);
    CHECK(st.t_cur == 0);
    CHECK(lr_at(st, st.t_cur) == doctest::Approx(5e-4));

    // periodic: a full period later the value repeats
    SchedulerState a{1e-3, 1e-5, 10, 0};
    for (int e = 0; e < 10; ++e) scheduler_advance(a);
    CHECK(a.t_cur == 0);

    SchedulerState with_min{1e-3, 1e-5, 10, 0};
    CHECK(lr_at(with_min, 5) == doctest::Approx((1e-3 + 1e-5) / 2));
    CHECK_THROWS_AS(lr_at(st, -1), std::invalid_argument);
}

TEST_CASE("early stopping rule") {
    SUBCASE("patience 1 stops on the first non-improvement") {
        EarlyStopper stop{1};
        CHECK(!stop.observe(1, 0.5));
        CHECK(stop.observe(2, 0.6));
        CHECK(stop.best_epoch == 1);
        CHECK(stop.best == doctest::Approx(0.5));
    }
    SUBCASE("a new best resets the stale counter") {
        EarlyStopper stop{2};
        CHECK(!stop.observe(1, 0.5));
        CHECK(!stop.observe(2, 0.55));
        CHECK(!stop.observe(3, 0.4));
        CHECK(!stop.observe(4, 0.45));
        CHECK(stop.observe(5, 0.41));
        CHECK(stop.best_epoch == 3);
    }
}

TEST_CASE("evaluation metrics") {
    SUBCASE("perfect predictor") {
        Mat confusion(3, 3);
        confusion(0, 0) = 4;
        confusion(1, 1) = 5;
        confusion(2, 2) = 6;
        const auto rep = report_from_confusion(confusion);
        CHECK(rep.accuracy == doctest::Approx(1.0));
        CHECK(rep.precision == doctest::Approx(1.0));
        CHECK(rep.recall == doctest::Approx(1.0));
        CHECK(rep.f1 == doctest::Approx(1.0));
    }
    SUBCASE("constant predictor on 8 balanced classes sits at chance") {
        Mat confusion(8, 8);
        for (int r = 0; r < 8; ++r) confusion(r, 0) = 10;
        const auto rep = report_from_confusion(confusion);
        CHECK(rep.accuracy == doctest::Approx(0.125));
        CHECK(rep.recall == doctest::Approx(0.125));
    }
    SUBCASE("three-class toy case") {
        Mat confusion(3, 3);
        confusion(0, 0) = 2;
        confusion(1, 0) = 1;
        confusion(1, 1) = 1;
        confusion(2, 2) = 2;
        const auto rep = report_from_confusion(confusion);
        CHECK(rep.accuracy == doctest::Approx(5.0 / 6.0));
        CHECK(rep.recall == doctest::Approx(5.0 / 6.0));
        CHECK(rep.precision == doctest::Approx(8.0 / 9.0));
        CHECK(rep.tp[0] == 2);
        CHECK(rep.fp[0] == 1);
        CHECK(rep.fn[1] == 1);
    }
    SUBCASE("weighted recall equals accuracy on random confusions") {
        RandomStream rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            Mat confusion(4, 4);
            for (double& v : confusion.a) v = static_cast<double>(rng.pick(20));
            confusion(0, 0) += 1;  // keep the matrix nonempty
            const auto rep = report_from_confusion(confusion);
            CHECK(rep.recall == doctest::Approx(rep.accuracy).epsilon(1e-12));
            double total = 0;
            for (double v : confusion.a) total += v;
            CHECK(rep.total == static_cast<long>(total));
        }
    }
    SUBCASE("empty test set is an error") {
        CHECK_THROWS_AS(report_from_confusion(Mat(3, 3)), std::invalid_argument);
    }
}

namespace {

// Two linearly separable classes as length-4 scalar sequences.
void separable_data(int n_per_class, std::uint64_t seed, Mat& x, std::vector<int>& y) {
    RandomStream rng(seed);
    x = Mat(2 * n_per_class, 4);
    y.clear();
    for (int i = 0; i < 2 * n_per_class; ++i) {
        const int cls = i % 2;
        const double center = cls == 0 ? -1.5 : 1.5;
        for (int c = 0; c < 4; ++c) x(i, c) = center + rng.normal(0.0, 0.3);
        y.push_back(cls);
    }
}

nn::ModelParams small_classical(std::uint64_t seed) {
    nn::ModelHyper hy;
    hy.kind = nn::ModelKind::ClassicalLstm;
    hy.x_dim = 1;
    hy.lstm_hidden = 8;
    hy.n_classes = 2;
    hy.seq_len = 4;
    return nn::ModelParams::init(hy, seed);
}

}  // namespace

TEST_CASE("training loop behaviour") {
    Mat train_x, eval_x;
    std::vector<int> train_y, eval_y;
    separable_data(40, 11, train_x, train_y);
    separable_data(10, 12, eval_x, eval_y);

    SUBCASE("max_epochs 1 runs exactly one epoch") {
        TrainConfig cfg;
        cfg.max_epochs = 1;
        cfg.patience = 1;
        cfg.seed = 5;
        const auto result = qkd::train::train(small_classical(5), train_x, train_y, eval_x, eval_y, cfg);
        CHECK(result.history.size() == 1);
        CHECK(result.best_epoch == 1);
    }
    SUBCASE("separable two-class problem reaches perfect training accuracy") {
        TrainConfig cfg;
        cfg.max_epochs = 20;
        cfg.patience = 20;
        cfg.lr_init = 0.02;
        cfg.t_0 = 20;
        cfg.seed = 6;
        const auto result = qkd::train::train(small_classical(6), train_x, train_y, eval_x, eval_y, cfg);
        const auto rep = evaluate(result.best, train_x, train_y, 1);
        CHECK(rep.accuracy == doctest::Approx(1.0));
        // early stopping never hands back a model worse than the best epoch
        double best_seen = 1e9;
        for (const auto& s : result.history) best_seen = std::min(best_seen, s.eval_loss);
        CHECK(result.best_eval_loss == doctest::Approx(best_seen));
    }
    SUBCASE("training is bit-reproducible for a fixed seed") {
        TrainConfig cfg;
        cfg.max_epochs = 3;
        cfg.patience = 3;
        cfg.seed = 7;
        const auto a = qkd::train::train(small_classical(7), train_x, train_y, eval_x, eval_y, cfg);
        const auto b = qkd::train::train(small_classical(7), train_x, train_y, eval_x, eval_y, cfg);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].train_loss == b.history[i].train_loss);
            CHECK(a.history[i].eval_loss == b.history[i].eval_loss);
            CHECK(a.history[i].accuracy == b.history[i].accuracy);
        }
    }
    SUBCASE("confusion matrix totals equal the test-set size") {
        TrainConfig cfg;
        cfg.max_epochs = 2;
        cfg.patience = 2;
        cfg.seed = 8;
        const auto result = qkd::train::train(small_classical(8), train_x, train_y, eval_x, eval_y, cfg);
        const auto rep = evaluate(result.best, eval_x, eval_y, 1);
        CHECK(rep.total == eval_x.rows);
        CHECK(rep.recall == doctest::Approx(rep.accuracy));
        double trace = 0, total = 0;
        for (int r = 0; r < rep.confusion.rows; ++r) {
            trace += rep.confusion(r, r);
            for (int c = 0; c < rep.confusion.cols; ++c) total += rep.confusion(r, c);
        }
        CHECK(rep.accuracy == doctest::Approx(trace / total));
    }
}

TEST_CASE("history csv round trip") {
    std::vector<EpochStats> history{{1, 1.5, 1.2, 0.4}, {2, 0.9, 0.8, 0.7}};
    const std::string path = "/tmp/qkd_test_history.csv";
    write_history_csv(path, history);
    const auto back = read_history_csv(path);
    std::remove(path.c_str());
    REQUIRE(back.size() == 2);
    CHECK(back[0].epoch == 1);
    CHECK(back[1].accuracy == doctest::Approx(0.7));
}
