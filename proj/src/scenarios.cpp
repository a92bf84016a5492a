#include "qkd/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkd {

const char* scenario_label(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Normal: return "normal";
        case ScenarioKind::InterceptResend: return "mitm_attack";
        case ScenarioKind::Pns: return "pns_attack";
        case ScenarioKind::TrojanHorse: return "trojan_horse_attack";
        case ScenarioKind::WavelengthTrojan: return "wavelength_dependent_trojan_attack";
        case ScenarioKind::RngAttack: return "rng_attack";
        case ScenarioKind::DetectorBlinding: return "detector_blinding_attack";
        case ScenarioKind::Combined: return "combined_attack";
    }
    throw std::invalid_argument("unknown scenario kind");
}

NoiseParams noise_params_for(NoiseLevel level) {
    NoiseParams n;
    switch (level) {
        case NoiseLevel::Low:      n.p_loss = 0.10; n.p_flip = 0.01; n.p_depol = 0.01; break;
        case NoiseLevel::Moderate: n.p_loss = 0.25; n.p_flip = 0.03; n.p_depol = 0.03; break;
        case NoiseLevel::High:     n.p_loss = 0.35; n.p_flip = 0.05; n.p_depol = 0.06; break;
    }
    return n;
}

void SimConfig::validate() const {
    if (n_trans < 1) throw std::invalid_argument("n_trans must be >= 1");
    if (std::abs(p_sig + p_dec - 1.0) > 1e-12)
        throw std::invalid_argument("p_sig + p_dec must equal 1");
    if (p_sig < 0.0 || p_sig > 1.0) throw std::invalid_argument("p_sig must be in [0,1]");
    if (wavelength_legit_nm <= 0.0)
        throw std::invalid_argument("wavelength_legit_nm must be > 0");
    noise.validate();
}

long Transcript::eve_touched_count() const {
    return std::count_if(records.begin(), records.end(),
                         [](const PhotonRecord& r) { return r.eve_touched; });
}

std::pair<PhotonState, double> eve_intercept_resend(const PhotonState& state,
                                                    const InterceptResendParams& p,
                                                    RandomStream& rng) {
    const Basis eve_basis = rng.bit() ? Basis::Diagonal : Basis::Rectilinear;
    Bit e = measure(state, eve_basis, rng);
    e = apply_bit_noise(e, p.p_err_eve, p.p_depol_eve, rng);
    const double delay = rng.truncated_normal(p.eve_delay_mean, p.eve_delay_std, 0.0);
    return {encode(e, eve_basis, state.wavelength_nm, state.photon_count), delay};
}

PhotonState pns_prepare_pulse(const PhotonState& state, PulseType pulse, const PnsParams& p,
                              RandomStream& rng) {
    PhotonState out = state;
    const double p_multi = pulse == PulseType::Signal ? p.p_multi : p.p_multi_decoy;
    if (out.photon_count == 1 && rng.bernoulli(p_multi)) out.photon_count = 2;
    return out;
}

std::pair<PhotonState, bool> pns_split(const PhotonState& state) {
    if (state.photon_count < 2) return {state, false};
    PhotonState out = state;
    out.photon_count -= 1;
    return {out, true};
}

InjectionOutcome trojan_inject(const TrojanParams& p, RandomStream& rng) {
    InjectionOutcome out;
    if (!rng.bernoulli(p.p_inject)) return out;
    out.injected = true;
    out.strong = rng.bernoulli(0.5);
    if (out.strong) {
        out.detect_prob = p.p_detect_strong;
        out.force_mismatch = rng.bernoulli(p.p_mismatch_strong);
    } else {
        out.detect_prob = p.p_detect_weak;
        out.force_mismatch = rng.bernoulli(p.p_mismatch_weak);
    }
    return out;
}

WavelengthOutcome wavelength_attack(const WavelengthParams& p, double lambda_legit_nm,
                                    RandomStream& rng) {
    if (p.lambda_set_nm.empty())
        throw std::invalid_argument("wavelength attack requires a nonempty lambda set");
    WavelengthOutcome out;
    if (!rng.bernoulli(p.p_inject)) return out;
    out.injected = true;
    const double lambda_attack = p.lambda_set_nm[rng.pick(p.lambda_set_nm.size())];
    out.delta_lambda = std::abs(lambda_attack - lambda_legit_nm);
    const double rel = out.delta_lambda / p.sigma_lambda_nm;
    out.eta = p.eta_0 * std::exp(-rel * rel);
    out.extra_phase = p.phase_scale * out.delta_lambda;
    out.eavesdropped = rng.bernoulli(p.p_eavesdrop);
    out.extra_error_prob = std::min(1.0, p.p_error_scale * out.delta_lambda);
    out.extra_delay = p.delay_per_nm * out.delta_lambda;
    return out;
}

namespace {

// Strict majority over a full window; -1 when the window is not full or tied.
int window_majority(const std::deque<int>& history, int window) {
    if (static_cast<int>(history.size()) < window) return -1;
    int ones = 0;
    for (int v : history) ones += v;
    const int zeros = window - ones;
    if (ones > zeros) return 1;
    if (zeros > ones) return 0;
    return -1;
}

void push_window(std::deque<int>& history, int window, int value) {
    history.push_back(value);
    while (static_cast<int>(history.size()) > window) history.pop_front();
}

}  // namespace

RngDraw compromised_rng_next(const RngAttackParams& p, EveState& st, RandomStream& rng) {
    RngDraw out;
    const int bit = rng.bernoulli(p.b_bit) ? 0 : 1;
    const int basis = rng.bernoulli(p.b_basis) ? 0 : 1;
    out.bit = Bit(bit);
    out.basis = basis == 0 ? Basis::Rectilinear : Basis::Diagonal;

    const int bit_major = window_majority(st.bit_history, p.window);
    const int basis_major = window_majority(st.basis_history, p.window);
    if (bit_major == bit && basis_major == basis && bit_major >= 0 && basis_major >= 0)
        out.eve_predicts = rng.bernoulli(p.p_pattern);

    push_window(st.bit_history, p.window, bit);
    push_window(st.basis_history, p.window, basis);
    return out;
}

BlindStep blinding_step(const BlindingParams& p, EveState& st, RandomStream& rng) {
    if (st.blinding_countdown == 0 && rng.bernoulli(p.p_blind))
        st.blinding_countdown = p.d_blind;

    BlindStep out;
    if (st.blinding_countdown > 0) {
        out.mode = DetectorMode::Blinded;
        out.eta_now = p.eta_blinded;
        out.eve_injects = rng.bernoulli(p.p_inject);
        st.blinding_countdown -= 1;
    } else {
        out.mode = DetectorMode::NormalMode;
        out.eta_now = p.eta_normal;
    }
    st.detector_mode =
        st.blinding_countdown > 0 ? DetectorMode::Blinded : DetectorMode::NormalMode;
    return out;
}

ActiveAttacks combined_dispatch(const CombinedParams& p, RandomStream& rng) {
    ActiveAttacks out;
    out.wavelength = rng.bernoulli(p.p_wavelength_active);
    out.blinding = rng.bernoulli(p.p_blinding_active);
    out.rng = rng.bernoulli(p.p_rng_active);
    return out;
}

namespace {

// How the detection stage of one photon is resolved. Attacks that take
// over the detector (blinding) or the injection channel (trojan,
// wavelength) replace the plain channel-loss draw.
struct DetectionPlan {
    enum class Kind { Channel, Efficiency, BlindedDetector } kind = Kind::Channel;
    double eta = 1.0;  // Efficiency / BlindedDetector survival probability
};

struct PhotonEffects {
    DetectionPlan plan;
    double extra_delay = 0.0;
    double extra_error_prob = 0.0;
    bool force_mismatch = false;
    bool eve_touched = false;
    // Detector-blinding fake-state injection: Bob's click reproduces Eve's
    // measurement instead of the legitimate photon.
    bool eve_fake_state = false;
    Bit eve_bit;
    Basis eve_basis = Basis::Rectilinear;
};

template <class T>
const T& expect_params(const AttackParams& params, const char* what) {
    const T* p = std::get_if<T>(&params);
    if (!p) throw std::invalid_argument(std::string("attack params do not match scenario: ") + what);
    return *p;
}

}  // namespace

Transcript run_iteration(ScenarioKind kind, const SimConfig& cfg, const AttackParams& params,
                         RandomStream& rng) {
    cfg.validate();
    switch (kind) {
        case ScenarioKind::Normal:
            expect_params<std::monostate>(params, "normal");
            break;
        case ScenarioKind::InterceptResend:
            expect_params<InterceptResendParams>(params, "intercept-resend");
            break;
        case ScenarioKind::Pns:
            expect_params<PnsParams>(params, "pns");
            break;
        case ScenarioKind::TrojanHorse:
            expect_params<TrojanParams>(params, "trojan");
            break;
        case ScenarioKind::WavelengthTrojan:
            expect_params<WavelengthParams>(params, "wavelength");
            break;
        case ScenarioKind::RngAttack:
            expect_params<RngAttackParams>(params, "rng");
            break;
        case ScenarioKind::DetectorBlinding:
            expect_params<BlindingParams>(params, "blinding");
            break;
        case ScenarioKind::Combined:
            expect_params<CombinedParams>(params, "combined");
            break;
    }

    Transcript t;
    t.scenario = kind;
    t.records.reserve(cfg.n_trans);
    EveState eve;

    for (int i = 0; i < cfg.n_trans; ++i) {
        PhotonRecord rec;
        rec.index = i;
        rec.pulse = rng.bernoulli(cfg.p_sig) ? PulseType::Signal : PulseType::Decoy;
        (rec.pulse == PulseType::Signal ? t.sent_signal : t.sent_decoy)++;

        // Alice's choices; the RNG attack biases them.
        ActiveAttacks active;
        bool rng_attack_on = kind == ScenarioKind::RngAttack;
        const RngAttackParams* rng_params =
            rng_attack_on ? &std::get<RngAttackParams>(params) : nullptr;
        if (kind == ScenarioKind::Combined) {
            const auto& cp = std::get<CombinedParams>(params);
            active = combined_dispatch(cp, rng);
            if (active.rng) {
                rng_attack_on = true;
                rng_params = &cp.rng_attack;
            }
        }

        bool eve_predicts = false;
        if (rng_attack_on) {
            const RngDraw draw = compromised_rng_next(*rng_params, eve, rng);
            rec.alice_bit = draw.bit;
            rec.alice_basis = draw.basis;
            eve_predicts = draw.eve_predicts;
        } else {
            rec.alice_bit = Bit(rng.bit());
            rec.alice_basis = rng.bit() ? Basis::Diagonal : Basis::Rectilinear;
        }

        PhotonState state =
            encode(rec.alice_bit, rec.alice_basis, cfg.wavelength_legit_nm, 1);
        PhotonEffects fx;

        switch (kind) {
            case ScenarioKind::Normal:
                break;
            case ScenarioKind::InterceptResend: {
                const auto& p = std::get<InterceptResendParams>(params);
                auto [resent, delay] = eve_intercept_resend(state, p, rng);
                state = resent;
                fx.extra_delay += delay;
                fx.eve_touched = true;
                break;
            }
            case ScenarioKind::Pns: {
                const auto& p = std::get<PnsParams>(params);
                state = pns_prepare_pulse(state, rec.pulse, p, rng);
                auto [passed, stored] = pns_split(state);
                state = passed;
                if (stored) {
                    // Eve forwards the surviving photon over her own line.
                    fx.eve_touched = true;
                    fx.plan = {DetectionPlan::Kind::Efficiency, 1.0};
                } else if (rng.bernoulli(p.p_block_single)) {
                    // She suppresses part of the single-photon pulses.
                    fx.eve_touched = true;
                    fx.plan = {DetectionPlan::Kind::Efficiency, 0.0};
                }
                break;
            }
            case ScenarioKind::TrojanHorse: {
                const auto& p = std::get<TrojanParams>(params);
                const InjectionOutcome out = trojan_inject(p, rng);
                if (out.injected) {
                    fx.eve_touched = true;
                    fx.plan = {DetectionPlan::Kind::Efficiency, out.detect_prob};
                    fx.force_mismatch = out.force_mismatch;
                }
                break;
            }
            case ScenarioKind::WavelengthTrojan: {
                const auto& p = std::get<WavelengthParams>(params);
                const WavelengthOutcome out = wavelength_attack(p, cfg.wavelength_legit_nm, rng);
                if (out.injected) {
                    fx.eve_touched = true;
                    fx.plan = {DetectionPlan::Kind::Efficiency, out.eta};
                    fx.extra_error_prob = out.extra_error_prob;
                    fx.extra_delay += out.extra_delay;
                }
                break;
            }
            case ScenarioKind::RngAttack:
                break;  // interception handled below, shared with Combined
            case ScenarioKind::DetectorBlinding: {
                const auto& p = std::get<BlindingParams>(params);
                const BlindStep step = blinding_step(p, eve, rng);
                if (step.mode == DetectorMode::Blinded) {
                    fx.eve_touched = true;
                    fx.plan = {DetectionPlan::Kind::BlindedDetector, step.eta_now};
                    if (step.eve_injects) fx.eve_fake_state = true;
                }
                break;
            }
            case ScenarioKind::Combined: {
                const auto& cp = std::get<CombinedParams>(params);
                if (active.wavelength) {
                    const WavelengthOutcome out =
                        wavelength_attack(cp.wavelength, cfg.wavelength_legit_nm, rng);
                    if (out.injected) {
                        fx.eve_touched = true;
                        fx.plan = {DetectionPlan::Kind::Efficiency, out.eta};
                        fx.extra_error_prob = out.extra_error_prob;
                        fx.extra_delay += out.extra_delay;
                    }
                }
                if (active.blinding) {
                    const BlindStep step = blinding_step(cp.blinding, eve, rng);
                    if (step.mode == DetectorMode::Blinded) {
                        fx.eve_touched = true;
                        // Blinded detector takes precedence over upstream efficiency.
                        fx.plan = {DetectionPlan::Kind::BlindedDetector, step.eta_now};
                        if (step.eve_injects) fx.eve_fake_state = true;
                    }
                }
                break;
            }
        }

        // RNG-attack interception: Eve predicted bit and basis, so she
        // measures in the right basis and resends faithfully; her resend
        // bypasses the channel loss she can compensate for.
        if (rng_attack_on && eve_predicts && rng.bernoulli(rng_params->p_intercept)) {
            fx.eve_touched = true;
            if (fx.plan.kind == DetectionPlan::Kind::Channel)
                fx.plan = {DetectionPlan::Kind::Efficiency, 1.0};
        }

        // Blinding fake state: Eve's own measurement of the photon.
        if (fx.eve_fake_state) {
            fx.eve_basis = rng.bit() ? Basis::Diagonal : Basis::Rectilinear;
            fx.eve_bit = measure(state, fx.eve_basis, rng);
        }

        // Detection stage.
        bool lost;
        if (fx.plan.kind == DetectionPlan::Kind::BlindedDetector) {
            lost = !rng.bernoulli(fx.plan.eta);
        } else if (fx.plan.kind == DetectionPlan::Kind::Efficiency) {
            lost = !rng.bernoulli(fx.plan.eta) || rng.poisson(cfg.noise.mean_photon_number) == 0;
        } else {
            lost = rng.bernoulli(cfg.noise.p_loss) ||
                   rng.poisson(cfg.noise.mean_photon_number) == 0;
        }

        // Bob's basis; biased under the RNG attack.
        rec.bob_basis = rng_attack_on
                            ? (rng.bernoulli(rng_params->b_basis) ? Basis::Rectilinear
                                                                  : Basis::Diagonal)
                            : (rng.bit() ? Basis::Diagonal : Basis::Rectilinear);

        if (lost) {
            rec.lost = true;
            (rec.pulse == PulseType::Signal ? t.lost_signal : t.lost_decoy)++;
            t.records.push_back(rec);
            continue;
        }
        (rec.pulse == PulseType::Signal ? t.detected_signal : t.detected_decoy)++;

        // Measurement stage.
        Bit bob_bit;
        if (fx.eve_fake_state) {
            bob_bit = rec.bob_basis == fx.eve_basis ? fx.eve_bit : Bit(rng.bit());
        } else {
            bob_bit = measure(state, rec.bob_basis, rng);
            bob_bit = apply_bit_noise(bob_bit, cfg.noise.p_flip, cfg.noise.p_depol, rng);
            if (fx.extra_error_prob > 0.0 && rng.bernoulli(fx.extra_error_prob))
                bob_bit = bob_bit.flipped();
        }
        if (fx.force_mismatch) bob_bit = rec.alice_bit.flipped();
        rec.bob_bit = bob_bit;
        rec.flight_time = sample_flight_time(cfg.noise, rng) + fx.extra_delay;

        rec.sifted = rec.alice_basis == rec.bob_basis;
        if (rec.sifted) {
            t.sifted_bits++;
            rec.matched = (bob_bit == rec.alice_bit);
            if (!*rec.matched) t.mismatches++;
        }
        rec.eve_touched = fx.eve_touched;
        t.records.push_back(rec);
    }
    return t;
}

AttackParams params_for(const ScenarioSuite& suite, ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Normal: return std::monostate{};
        case ScenarioKind::InterceptResend: return suite.intercept;
        case ScenarioKind::Pns: return suite.pns;
        case ScenarioKind::TrojanHorse: return suite.trojan;
        case ScenarioKind::WavelengthTrojan: return suite.wavelength;
        case ScenarioKind::RngAttack: return suite.rng_attack;
        case ScenarioKind::DetectorBlinding: return suite.blinding;
        case ScenarioKind::Combined: return suite.combined;
    }
    throw std::invalid_argument("unknown scenario kind");
}

Transcript run_suite_iteration(const ScenarioSuite& suite, ScenarioKind kind,
                               RandomStream& rng) {
    SimConfig cfg = suite.sim;
    if (suite.draw_noise_level) {
        const NoiseLevel level = static_cast<NoiseLevel>(rng.pick(3));
        const NoiseParams base = cfg.noise;
        cfg.noise_level = level;
        cfg.noise = noise_params_for(level);
        // Keep the shared (non-level) noise fields from the configured base.
        cfg.noise.mean_photon_number = base.mean_photon_number;
        cfg.noise.flight_time_mean = base.flight_time_mean;
        cfg.noise.flight_time_std = base.flight_time_std;
    }
    return run_iteration(kind, cfg, params_for(suite, kind), rng);
}

}  // namespace qkd
