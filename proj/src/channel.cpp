#include "qkd/channel.hpp"

namespace qkd {

void NoiseParams::validate() const {
    auto check_prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument(std::string(name) + " must be in [0,1]");
    };
    check_prob(p_loss, "p_loss");
    check_prob(p_flip, "p_flip");
    check_prob(p_depol, "p_depol");
    if (mean_photon_number < 0.0)
        throw std::invalid_argument("mean_photon_number must be >= 0");
    if (flight_time_mean <= 0.0)
        throw std::invalid_argument("flight_time_mean must be > 0");
    if (flight_time_std < 0.0)
        throw std::invalid_argument("flight_time_std must be >= 0");
}

PhotonState encode(Bit bit, Basis basis, double wavelength_nm, int photon_count) {
    if (photon_count < 1) throw std::invalid_argument("photon_count must be >= 1");
    if (wavelength_nm <= 0.0) throw std::invalid_argument("wavelength_nm must be > 0");
    return PhotonState{bit, basis, wavelength_nm, photon_count};
}

Bit measure(const PhotonState& state, Basis basis, RandomStream& rng) {
    if (basis == state.basis) return state.bit;
    return Bit(rng.bit());
}

Bit apply_bit_noise(Bit bit, double p_flip, double p_depol, RandomStream& rng) {
    if (rng.bernoulli(p_flip)) bit = bit.flipped();
    if (rng.bernoulli(p_depol)) bit = Bit(rng.bit());
    return bit;
}

double sample_flight_time(const NoiseParams& noise, RandomStream& rng) {
    return rng.truncated_normal(noise.flight_time_mean, noise.flight_time_std, 0.0);
}

ChannelOutcome transmit(const PhotonState& state, const NoiseParams& noise, RandomStream& rng) {
    ChannelOutcome out;
    const bool channel_lost = rng.bernoulli(noise.p_loss);
    out.detected_count = rng.poisson(noise.mean_photon_number);
    out.lost = channel_lost || out.detected_count == 0;
    if (out.lost) return out;

    out.bit_after_noise = apply_bit_noise(state.bit, noise.p_flip, noise.p_depol, rng);
    out.flight_time = sample_flight_time(noise, rng);
    return out;
}

}  // namespace qkd
