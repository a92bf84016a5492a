#pragma once

#include <string>

namespace qkd {

struct Transcript;

// One dataset row: the 11 channel metrics plus the scenario label.
// `valid` flags degenerate transcripts (nothing detected or sifted);
// such rows carry zeros and are not an error.
struct MetricsRow {
    long key_length = 0;
    double qber = 0.0;
    double measurement_entropy = 0.0;
    double signal_detection_rate = 0.0;
    double decoy_detection_rate = 0.0;
    double signal_loss_rate = 0.0;
    double decoy_loss_rate = 0.0;
    double avg_photon_time = 0.0;
    double whole_key_time = 0.0;
    double arrival_var = 0.0;
    double arrival_dev = 0.0;
    std::string label;
    bool valid = true;
};

// Shannon entropy of the {p, 1-p} distribution, in bits. H(0) = H(1) = 0.
double binary_entropy(double p);

// Detection/loss rates use sent pulses of the class as denominator; the
// timing statistics run over detected photons only, with population
// variance and mean absolute deviation.
MetricsRow compute_metrics(const Transcript& transcript);

}  // namespace qkd
