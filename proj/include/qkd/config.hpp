#pragma once

#include <map>
#include <string>
#include <vector>

#include "qkd/dataset.hpp"
#include "qkd/train.hpp"

namespace qkd {

// Flat key=value configuration with dotted section prefixes
// (e.g. "intercept.p_err_eve = 0.05"). '#' starts a comment.
class Config {
public:
    static Config from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);

    // "key=value" strings from the command line; these win over the file.
    void apply_overrides(const std::vector<std::string>& overrides);

    bool has(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

    // Keys that were set but never consumed indicate typos; surfaced as
    // an error after wiring.
    std::vector<std::string> unused_keys() const;

private:
    std::map<std::string, std::string> values_;
    mutable std::map<std::string, bool> consumed_;
};

// Applies every recognized simulation/dataset key onto the defaults.
void configure_suite(const Config& cfg, ScenarioSuite& suite);
void configure_dataset(const Config& cfg, DatasetConfig& dataset);
void configure_training(const Config& cfg, train::TrainConfig& train_cfg);

// Throws std::runtime_error listing any unrecognized keys.
void reject_unused(const Config& cfg);

}  // namespace qkd
