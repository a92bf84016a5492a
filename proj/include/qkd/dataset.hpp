#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qkd/metrics.hpp"
#include "qkd/scenarios.hpp"

namespace qkd {

// Default per-scenario iteration counts (normal plus seven attacks,
// 10,329 rows in total).
std::array<int, kScenarioCount> default_scenario_counts();

struct DatasetConfig {
    std::array<int, kScenarioCount> iterations_per_scenario = default_scenario_counts();
    std::uint64_t master_seed = 42;
    ScenarioSuite suite;
    std::string output_path;
};

struct DatasetTable {
    std::vector<MetricsRow> rows;
    int schema_version = 1;
};

inline constexpr const char* kCsvHeader =
    "Key_Length,QBER,Measurement_entropy,Signal_detection_rate,Decoy_detection_rate,"
    "Signal_loss_rate,Decoy_loss_rate,Avg_Photon_time,Whole_key_time,Arrival_var,"
    "Arrival_dev,Label";

// Rows come out grouped by scenario in declaration order; row (s, i) uses
// the substream seed mix(master_seed, s, i), so the table is a pure
// function of the config.
DatasetTable generate_dataset(const DatasetConfig& cfg);

// Fixed 6-decimal formatting, '.' separator, LF endings. Returns the row
// count written.
std::size_t write_csv(const DatasetTable& table, const std::string& path);

// Throws std::runtime_error naming the offending row on malformed input,
// wrong column counts, or unknown labels.
DatasetTable read_csv(const std::string& path);

std::string format_csv_row(const MetricsRow& row);

}  // namespace qkd
