#include "qkd/dataset.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qkd {

std::array<int, kScenarioCount> default_scenario_counts() {
    return {1292, 1291, 1291, 1291, 1291, 1291, 1291, 1291};
}

DatasetTable generate_dataset(const DatasetConfig& cfg) {
    for (int c : cfg.iterations_per_scenario)
        if (c < 0) throw std::invalid_argument("iteration counts must be >= 0");

    DatasetTable table;
    for (int s = 0; s < kScenarioCount; ++s) {
        const auto kind = static_cast<ScenarioKind>(s);
        for (int i = 0; i < cfg.iterations_per_scenario[s]; ++i) {
            RandomStream rng = RandomStream::derive(cfg.master_seed, static_cast<std::uint64_t>(s),
                                                    static_cast<std::uint64_t>(i));
            table.rows.push_back(compute_metrics(run_suite_iteration(cfg.suite, kind, rng)));
        }
    }
    return table;
}

namespace {

// Locale-independent fixed formatting; the CSV must hash identically
// across runs.
void append_fixed(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 6);
    out.append(buf, res.ptr);
}

double parse_double(const std::string& field, std::size_t row_index) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw std::runtime_error("csv parse error at row " + std::to_string(row_index) +
                                 ": bad numeric field '" + field + "'");
    return v;
}

const std::set<std::string>& known_labels() {
    static const std::set<std::string> labels = [] {
        std::set<std::string> s;
        for (int i = 0; i < kScenarioCount; ++i)
            s.insert(scenario_label(static_cast<ScenarioKind>(i)));
        return s;
    }();
    return labels;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

}  // namespace

std::string format_csv_row(const MetricsRow& row) {
    std::string out;
    out += std::to_string(row.key_length);
    const double fields[] = {row.qber,
                             row.measurement_entropy,
                             row.signal_detection_rate,
                             row.decoy_detection_rate,
                             row.signal_loss_rate,
                             row.decoy_loss_rate,
                             row.avg_photon_time,
                             row.whole_key_time,
                             row.arrival_var,
                             row.arrival_dev};
    for (double v : fields) {
        out += ',';
        append_fixed(out, v);
    }
    out += ',';
    out += row.label;
    return out;
}

std::size_t write_csv(const DatasetTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << kCsvHeader << '\n';
    for (const auto& row : table.rows) out << format_csv_row(row) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
    return table.rows.size();
}

DatasetTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader)
        throw std::runtime_error("unexpected csv header in " + path);

    DatasetTable table;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_index;
        const auto fields = split_fields(line);
        if (fields.size() != 12)
            throw std::runtime_error("csv parse error at row " + std::to_string(row_index) +
                                     ": expected 12 columns, got " +
                                     std::to_string(fields.size()));
        MetricsRow row;
        row.key_length = static_cast<long>(parse_double(fields[0], row_index));
        row.qber = parse_double(fields[1], row_index);
        row.measurement_entropy = parse_double(fields[2], row_index);
        row.signal_detection_rate = parse_double(fields[3], row_index);
        row.decoy_detection_rate = parse_double(fields[4], row_index);
        row.signal_loss_rate = parse_double(fields[5], row_index);
        row.decoy_loss_rate = parse_double(fields[6], row_index);
        row.avg_photon_time = parse_double(fields[7], row_index);
        row.whole_key_time = parse_double(fields[8], row_index);
        row.arrival_var = parse_double(fields[9], row_index);
        row.arrival_dev = parse_double(fields[10], row_index);
        row.label = fields[11];
        if (!known_labels().count(row.label))
            throw std::runtime_error("csv parse error at row " + std::to_string(row_index) +
                                     ": unknown label '" + row.label + "'");
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace qkd
