#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkd/metrics.hpp"
#include "qkd/scenarios.hpp"

using namespace qkd;

namespace {

// Transcript with hand-set counters and flight times.
Transcript make_transcript(long sifted, long mismatches, const std::vector<double>& times) {
    Transcript t;
    t.scenario = ScenarioKind::Normal;
    t.sifted_bits = sifted;
    t.mismatches = mismatches;
    t.sent_signal = static_cast<long>(times.size());
    t.detected_signal = static_cast<long>(times.size());
    for (double v : times) {
        PhotonRecord r;
        r.flight_time = v;
        t.records.push_back(r);
    }
    return t;
}

}  // namespace

TEST_CASE("binary entropy values") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);

    // reference anchor pairs from the published dataset sample
    CHECK(std::abs(binary_entropy(0.3927) - 0.9661) < 0.001);
    CHECK(std::abs(binary_entropy(0.0129) - 0.0990) < 0.001);
    CHECK(std::abs(binary_entropy(0.2542) - 0.8169) < 0.0015);

    for (double p : {0.1, 0.23, 0.42})
        CHECK(binary_entropy(p) == doctest::Approx(binary_entropy(1.0 - p)));

    CHECK_THROWS_AS(binary_entropy(-0.01), std::invalid_argument);
    CHECK_THROWS_AS(binary_entropy(1.01), std::invalid_argument);
}

TEST_CASE("compute_metrics hand cases") {
    SUBCASE("4 sifted bits with 1 mismatch") {
        const auto row = compute_metrics(make_transcript(4, 1, {0.06}));
        CHECK(row.qber == doctest::Approx(0.25));
        CHECK(std::abs(row.measurement_entropy - 0.8113) < 1e-4);
        CHECK(row.key_length == 4);
    }
    SUBCASE("constant flight times have zero spread") {
        const auto row = compute_metrics(make_transcript(3, 0, {0.06, 0.06, 0.06}));
        CHECK(row.arrival_var == doctest::Approx(0.0));
        CHECK(row.arrival_dev == doctest::Approx(0.0));
        CHECK(row.avg_photon_time == doctest::Approx(0.06));
    }
    SUBCASE("two-point closed form") {
        const auto row = compute_metrics(make_transcript(2, 0, {0.05, 0.07}));
        CHECK(row.avg_photon_time == doctest::Approx(0.06));
        CHECK(row.whole_key_time == doctest::Approx(0.12));
        CHECK(row.arrival_var == doctest::Approx(1e-4));
        CHECK(row.arrival_dev == doctest::Approx(0.01));
    }
    SUBCASE("degenerate transcript yields zeros with the validity flag down") {
        Transcript t;
        t.sent_signal = 5;
        t.lost_signal = 5;
        const auto row = compute_metrics(t);
        CHECK(!row.valid);
        CHECK(row.qber == 0.0);
        CHECK(row.measurement_entropy == 0.0);
        CHECK(row.signal_loss_rate == doctest::Approx(1.0));
    }
}

TEST_CASE("metric identities on simulated transcripts") {
    RandomStream rng(99);
    SimConfig cfg;
    for (int it = 0; it < 20; ++it) {
        const auto t = run_iteration(ScenarioKind::Normal, cfg, std::monostate{}, rng);
        const auto row = compute_metrics(t);

        CHECK(row.measurement_entropy == doctest::Approx(binary_entropy(row.qber)));
        CHECK(row.signal_detection_rate + row.signal_loss_rate == doctest::Approx(1.0));
        CHECK(row.decoy_detection_rate + row.decoy_loss_rate == doctest::Approx(1.0));
        CHECK(row.arrival_dev <= std::sqrt(row.arrival_var) + 1e-12);

        const long timed = t.detected_signal + t.detected_decoy;
        CHECK(row.whole_key_time ==
              doctest::Approx(row.avg_photon_time * static_cast<double>(timed)).epsilon(1e-9));
    }
}
