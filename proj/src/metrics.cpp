#include "qkd/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qkd/scenarios.hpp"

namespace qkd {

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("binary_entropy: p must be in [0,1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

MetricsRow compute_metrics(const Transcript& t) {
    MetricsRow row;
    row.label = scenario_label(t.scenario);

    row.key_length = t.sifted_bits;
    row.qber = t.sifted_bits > 0 ? static_cast<double>(t.mismatches) / t.sifted_bits : 0.0;
    row.measurement_entropy = binary_entropy(row.qber);

    auto rate = [](long num, long den) { return den > 0 ? static_cast<double>(num) / den : 0.0; };
    row.signal_detection_rate = rate(t.detected_signal, t.sent_signal);
    row.decoy_detection_rate = rate(t.detected_decoy, t.sent_decoy);
    row.signal_loss_rate = rate(t.lost_signal, t.sent_signal);
    row.decoy_loss_rate = rate(t.lost_decoy, t.sent_decoy);

    std::vector<double> times;
    times.reserve(t.records.size());
    for (const auto& r : t.records)
        if (r.flight_time) times.push_back(*r.flight_time);

    if (!times.empty()) {
        double sum = 0.0;
        for (double v : times) sum += v;
        const double mean = sum / static_cast<double>(times.size());
        double var = 0.0, dev = 0.0;
        for (double v : times) {
            var += (v - mean) * (v - mean);
            dev += std::abs(v - mean);
        }
        row.avg_photon_time = mean;
        row.whole_key_time = sum;
        row.arrival_var = var / static_cast<double>(times.size());
        row.arrival_dev = dev / static_cast<double>(times.size());
    }

    row.valid = t.sifted_bits > 0 && !times.empty();
    return row;
}

}  // namespace qkd
