#include "qkd/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qkd {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    double v = 0.0;
    const char* b = value.data();
    const auto res = std::from_chars(b, b + value.size(), v);
    if (res.ec != std::errc{} || res.ptr != b + value.size())
        throw std::runtime_error("config: bad numeric value for " + key + ": '" + value + "'");
    return v;
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    Config cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        cfg.set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw std::runtime_error("config: empty key");
    values_[key] = value;
    consumed_[key] = false;
}

void Config::apply_overrides(const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("override must be key=value: '" + kv + "'");
        set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    return parse_number(key, it->second);
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    const double v = parse_number(key, it->second);
    return static_cast<int>(v);
}

std::vector<double> Config::get_list(const std::string& key,
                                     std::vector<double> fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    consumed_[key] = true;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_number(key, item));
    }
    if (out.empty())
        throw std::runtime_error("config: empty list for " + key);
    return out;
}

std::vector<std::string> Config::unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, used] : consumed_)
        if (!used) out.push_back(key);
    return out;
}

void configure_suite(const Config& cfg, ScenarioSuite& suite) {
    auto& sim = suite.sim;
    sim.n_trans = cfg.get_int("sim.n_trans", sim.n_trans);
    sim.p_sig = cfg.get_double("sim.p_sig", sim.p_sig);
    sim.p_dec = 1.0 - sim.p_sig;
    sim.wavelength_legit_nm = cfg.get_double("sim.wavelength_legit_nm", sim.wavelength_legit_nm);

    auto& noise = sim.noise;
    noise.mean_photon_number = cfg.get_double("noise.mean_photon_number", noise.mean_photon_number);
    noise.flight_time_mean = cfg.get_double("noise.flight_time_mean", noise.flight_time_mean);
    noise.flight_time_std = cfg.get_double("noise.flight_time_std", noise.flight_time_std);
    suite.draw_noise_level = cfg.get_int("noise.draw_level", suite.draw_noise_level ? 1 : 0) != 0;

    auto& ir = suite.intercept;
    ir.p_err_eve = cfg.get_double("intercept.p_err_eve", ir.p_err_eve);
    ir.p_depol_eve = cfg.get_double("intercept.p_depol_eve", ir.p_depol_eve);
    ir.eve_delay_mean = cfg.get_double("intercept.eve_delay_mean", ir.eve_delay_mean);
    ir.eve_delay_std = cfg.get_double("intercept.eve_delay_std", ir.eve_delay_std);

    suite.pns.p_multi = cfg.get_double("pns.p_multi", suite.pns.p_multi);
    suite.pns.p_multi_decoy = cfg.get_double("pns.p_multi_decoy", suite.pns.p_multi_decoy);
    suite.pns.p_block_single = cfg.get_double("pns.p_block_single", suite.pns.p_block_single);

    auto& tj = suite.trojan;
    tj.p_inject = cfg.get_double("trojan.p_inject", tj.p_inject);
    tj.p_detect_strong = cfg.get_double("trojan.p_detect_strong", tj.p_detect_strong);
    tj.p_detect_weak = cfg.get_double("trojan.p_detect_weak", tj.p_detect_weak);
    tj.p_mismatch_strong = cfg.get_double("trojan.p_mismatch_strong", tj.p_mismatch_strong);
    tj.p_mismatch_weak = cfg.get_double("trojan.p_mismatch_weak", tj.p_mismatch_weak);

    auto& wl = suite.wavelength;
    wl.lambda_set_nm = cfg.get_list("wavelength.lambda_set_nm", wl.lambda_set_nm);
    wl.eta_0 = cfg.get_double("wavelength.eta_0", wl.eta_0);
    wl.sigma_lambda_nm = cfg.get_double("wavelength.sigma_lambda_nm", wl.sigma_lambda_nm);
    wl.phase_scale = cfg.get_double("wavelength.phase_scale", wl.phase_scale);
    wl.p_eavesdrop = cfg.get_double("wavelength.p_eavesdrop", wl.p_eavesdrop);
    wl.p_error_scale = cfg.get_double("wavelength.p_error_scale", wl.p_error_scale);
    wl.delay_per_nm = cfg.get_double("wavelength.delay_per_nm", wl.delay_per_nm);
    wl.p_inject = cfg.get_double("wavelength.p_inject", wl.p_inject);

    auto& ra = suite.rng_attack;
    ra.b_bit = cfg.get_double("rng_attack.b_bit", ra.b_bit);
    ra.b_basis = cfg.get_double("rng_attack.b_basis", ra.b_basis);
    ra.p_pattern = cfg.get_double("rng_attack.p_pattern", ra.p_pattern);
    ra.window = cfg.get_int("rng_attack.window", ra.window);
    ra.p_intercept = cfg.get_double("rng_attack.p_intercept", ra.p_intercept);

    auto& bl = suite.blinding;
    bl.p_blind = cfg.get_double("blinding.p_blind", bl.p_blind);
    bl.d_blind = cfg.get_int("blinding.d_blind", bl.d_blind);
    bl.p_inject = cfg.get_double("blinding.p_inject", bl.p_inject);
    bl.eta_normal = cfg.get_double("blinding.eta_normal", bl.eta_normal);
    bl.eta_blinded = cfg.get_double("blinding.eta_blinded", bl.eta_blinded);

    auto& cb = suite.combined;
    cb.p_wavelength_active = cfg.get_double("combined.p_wavelength", cb.p_wavelength_active);
    cb.p_blinding_active = cfg.get_double("combined.p_blinding", cb.p_blinding_active);
    cb.p_rng_active = cfg.get_double("combined.p_rng", cb.p_rng_active);
    cb.wavelength = wl;
    cb.blinding = bl;
    cb.rng_attack = ra;
}

void configure_dataset(const Config& cfg, DatasetConfig& dataset) {
    configure_suite(cfg, dataset.suite);
    static const char* names[kScenarioCount] = {
        "normal", "mitm", "pns", "trojan", "wavelength", "rng", "blinding", "combined"};
    for (int s = 0; s < kScenarioCount; ++s)
        dataset.iterations_per_scenario[s] = cfg.get_int(
            std::string("dataset.count.") + names[s], dataset.iterations_per_scenario[s]);
}

void configure_training(const Config& cfg, train::TrainConfig& t) {
    t.max_epochs = cfg.get_int("train.max_epochs", t.max_epochs);
    t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
    t.lr_init = cfg.get_double("train.lr", t.lr_init);
    t.lr_min = cfg.get_double("train.lr_min", t.lr_min);
    t.weight_decay = cfg.get_double("train.weight_decay", t.weight_decay);
    t.t_0 = cfg.get_int("train.t0", t.t_0);
    t.patience = cfg.get_int("train.patience", t.patience);
}

void reject_unused(const Config& cfg) {
    const auto unused = cfg.unused_keys();
    if (unused.empty()) return;
    std::string message = "unrecognized config keys:";
    for (const auto& key : unused) message += " " + key;
    throw std::runtime_error(message);
}

}  // namespace qkd
