#pragma once

#include <deque>
#include <utility>
#include <variant>
#include <vector>

#include "qkd/channel.hpp"

namespace qkd {

enum class ScenarioKind {
    Normal,
    InterceptResend,
    Pns,
    TrojanHorse,
    WavelengthTrojan,
    RngAttack,
    DetectorBlinding,
    Combined,
};
inline constexpr int kScenarioCount = 8;

// Dataset label string for a scenario.
const char* scenario_label(ScenarioKind kind);

enum class NoiseLevel { Low, Moderate, High };
NoiseParams noise_params_for(NoiseLevel level);

enum class PulseType { Signal, Decoy };

struct SimConfig {
    int n_trans = 700;
    double p_sig = 0.7;
    double p_dec = 0.3;
    NoiseLevel noise_level = NoiseLevel::Moderate;
    NoiseParams noise = noise_params_for(NoiseLevel::Moderate);
    double wavelength_legit_nm = 1550.0;

    void validate() const;
};

struct PhotonRecord {
    int index = 0;
    PulseType pulse = PulseType::Signal;
    Bit alice_bit;
    Basis alice_basis = Basis::Rectilinear;
    Basis bob_basis = Basis::Rectilinear;
    std::optional<Bit> bob_bit;
    bool lost = false;
    bool sifted = false;
    std::optional<bool> matched;
    std::optional<double> flight_time;
    bool eve_touched = false;
};

struct Transcript {
    ScenarioKind scenario = ScenarioKind::Normal;
    std::vector<PhotonRecord> records;
    long sent_signal = 0, sent_decoy = 0;
    long lost_signal = 0, lost_decoy = 0;
    long detected_signal = 0, detected_decoy = 0;
    long sifted_bits = 0;
    long mismatches = 0;

    long eve_touched_count() const;
};

// ---- attack parameter blocks (defaults are the calibrated values) ----

struct InterceptResendParams {
    double p_err_eve = 0.05;
    double p_depol_eve = 0.10;
    double eve_delay_mean = 0.12;
    double eve_delay_std = 0.03;
};

// Eve forwards split multi-photon pulses over her lossless line and blocks
// a fraction of single-photon pulses; decoy pulses are weaker and are
// multi-photon far less often, so their detection rate dips more. QBER is
// untouched (she never measures).
struct PnsParams {
    double p_multi = 0.2;          // signal pulses
    double p_multi_decoy = 0.05;   // decoy pulses
    double p_block_single = 0.10;
};

struct TrojanParams {
    double p_inject = 0.3;
    double p_detect_strong = 0.95;
    double p_detect_weak = 0.5;
    double p_mismatch_strong = 0.5;
    double p_mismatch_weak = 0.2;
};

struct WavelengthParams {
    std::vector<double> lambda_set_nm{1310.0, 1450.0, 1490.0, 1610.0};
    double eta_0 = 0.9;
    double sigma_lambda_nm = 120.0;
    double phase_scale = M_PI / 300.0;  // radians per nm
    double p_eavesdrop = 0.3;
    double p_error_scale = 5e-4;        // extra flip probability per nm
    double delay_per_nm = 1e-4;
    double p_inject = 0.3;
};

struct RngAttackParams {
    double b_bit = 0.6;    // P(bit = 0)
    double b_basis = 0.65; // P(basis = rectilinear)
    double p_pattern = 0.4;
    int window = 5;
    double p_intercept = 0.8;
};

struct BlindingParams {
    double p_blind = 0.1;
    int d_blind = 20;
    double p_inject = 0.9;
    double eta_normal = 0.75;
    double eta_blinded = 0.30;
};

struct CombinedParams {
    double p_wavelength_active = 0.3;
    double p_blinding_active = 0.3;
    double p_rng_active = 0.3;
    WavelengthParams wavelength;
    BlindingParams blinding;
    RngAttackParams rng_attack;
};

enum class DetectorMode { NormalMode, Blinded };

// Eve's mutable book-keeping across photons: RNG-attack pattern history
// and the detector-blinding countdown.
struct EveState {
    std::deque<int> bit_history;
    std::deque<int> basis_history;
    int blinding_countdown = 0;
    DetectorMode detector_mode = DetectorMode::NormalMode;
};

// ---- attack primitives ----

// Eve measures in a uniformly random basis, applies her own flip and
// depolarization noise, and re-encodes in her basis. Returns the
// re-encoded state and the added transit delay.
std::pair<PhotonState, double> eve_intercept_resend(const PhotonState& state,
                                                    const InterceptResendParams& params,
                                                    RandomStream& rng);

// Pulse-intensity draw: a single-photon pulse becomes multi-photon
// (count 2) with the class-dependent multi-photon probability.
PhotonState pns_prepare_pulse(const PhotonState& state, PulseType pulse,
                              const PnsParams& params, RandomStream& rng);

// Eve's splitting step: from a multi-photon pulse she stores one photon
// and lets the rest pass untouched; single-photon pulses pass unchanged.
std::pair<PhotonState, bool> pns_split(const PhotonState& state);

struct InjectionOutcome {
    bool injected = false;
    bool strong = false;
    double detect_prob = 1.0;
    bool force_mismatch = false;
};
InjectionOutcome trojan_inject(const TrojanParams& params, RandomStream& rng);

struct WavelengthOutcome {
    bool injected = false;
    double delta_lambda = 0.0;
    double eta = 1.0;
    double extra_phase = 0.0;
    bool eavesdropped = false;
    double extra_error_prob = 0.0;
    double extra_delay = 0.0;
};
WavelengthOutcome wavelength_attack(const WavelengthParams& params, double lambda_legit_nm,
                                    RandomStream& rng);

struct RngDraw {
    Bit bit;
    Basis basis = Basis::Rectilinear;
    bool eve_predicts = false;
};
// Biased bit/basis generation with pattern memory. Eve predicts when both
// history windows show a strict majority, the fresh draws equal those
// majorities, and her exploitation roll (p_pattern) succeeds.
RngDraw compromised_rng_next(const RngAttackParams& params, EveState& state, RandomStream& rng);

struct BlindStep {
    DetectorMode mode = DetectorMode::NormalMode;
    double eta_now = 1.0;
    bool eve_injects = false;
};
BlindStep blinding_step(const BlindingParams& params, EveState& state, RandomStream& rng);

struct ActiveAttacks {
    bool wavelength = false;
    bool blinding = false;
    bool rng = false;
};
ActiveAttacks combined_dispatch(const CombinedParams& params, RandomStream& rng);

// ---- scenario driver ----

using AttackParams = std::variant<std::monostate, InterceptResendParams, PnsParams,
                                  TrojanParams, WavelengthParams, RngAttackParams,
                                  BlindingParams, CombinedParams>;

// One full key-exchange iteration. Throws std::invalid_argument when the
// params variant does not match the scenario kind or the config is bad.
Transcript run_iteration(ScenarioKind kind, const SimConfig& cfg, const AttackParams& params,
                         RandomStream& rng);

// All simulation defaults in one place; what the dataset generator and the
// CLI configure.
struct ScenarioSuite {
    SimConfig sim;
    InterceptResendParams intercept;
    PnsParams pns;
    TrojanParams trojan;
    WavelengthParams wavelength;
    RngAttackParams rng_attack;
    BlindingParams blinding;
    CombinedParams combined;
    bool draw_noise_level = true;  // one of {Low, Moderate, High} per iteration
};

AttackParams params_for(const ScenarioSuite& suite, ScenarioKind kind);

// Draws the per-iteration noise level (when enabled), then runs the
// scenario. This is the exact per-row procedure of dataset generation.
Transcript run_suite_iteration(const ScenarioSuite& suite, ScenarioKind kind, RandomStream& rng);

}  // namespace qkd
