#pragma once

#include <optional>
#include <stdexcept>

#include "qkd/rng.hpp"

namespace qkd {

// A single key bit, kept distinct from plain int so bit/basis arguments
// cannot be swapped silently.
struct Bit {
    int value = 0;

    Bit() = default;
    explicit Bit(int v) : value(v) {
        if (v != 0 && v != 1) throw std::invalid_argument("Bit must be 0 or 1");
    }
    Bit flipped() const { return Bit(1 - value); }
    bool operator==(const Bit&) const = default;
};

enum class Basis { Rectilinear, Diagonal };

// Pulse as it leaves Alice: bit/basis encoding plus the physical tags the
// attack models act on (wavelength, photon multiplicity).
struct PhotonState {
    Bit bit;
    Basis basis = Basis::Rectilinear;
    double wavelength_nm = 1550.0;
    int photon_count = 1;
};

struct NoiseParams {
    double p_loss = 0.0;
    double p_flip = 0.0;
    double p_depol = 0.0;
    double mean_photon_number = 3.0;
    double flight_time_mean = 0.065;
    double flight_time_std = 0.01;

    void validate() const;
};

struct ChannelOutcome {
    bool lost = false;
    int detected_count = 0;         // Poisson draw k
    double flight_time = 0.0;
    std::optional<Bit> bit_after_noise;
};

PhotonState encode(Bit bit, Basis basis, double wavelength_nm, int photon_count);

// Deterministic when bases match, fair coin otherwise.
Bit measure(const PhotonState& state, Basis basis, RandomStream& rng);

// Bit-level noise stage: flip with p_flip, then replace with a uniform bit
// with p_depol. Shared by the channel and by Eve's measurement noise.
Bit apply_bit_noise(Bit bit, double p_flip, double p_depol, RandomStream& rng);

double sample_flight_time(const NoiseParams& noise, RandomStream& rng);

// Full channel pass: loss draw, Poisson shot noise, bit flip,
// depolarization, flight-time sampling. The pulse is lost when the loss
// draw fires or when the detector sees zero photons (k = 0).
ChannelOutcome transmit(const PhotonState& state, const NoiseParams& noise, RandomStream& rng);

}  // namespace qkd
