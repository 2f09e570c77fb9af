#include "tcsim/io.hpp"
#include "tcsim/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace tcsim {

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> standard_metadata(const std::string& config_hash, std::uint64_t seed) {
    return {std::string("tool = ") + tool_version, "config_hash = " + config_hash,
            "seed = " + std::to_string(seed)};
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_csv(const std::string& path, const CsvTable& table,
               const std::vector<std::string>& metadata) {
    for (const auto& row : table.rows)
        if (row.size() != table.columns.size())
            throw ValidationError("CSV row width does not match column count");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ValidationError("cannot write file: " + path);
    for (const auto& m : metadata) out << "# " << m << "\n";
    for (size_t c = 0; c < table.columns.size(); ++c)
        out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "\n");
    for (const auto& row : table.rows)
        for (size_t c = 0; c < row.size(); ++c)
            out << format_double(row[c]) << (c + 1 < row.size() ? "," : "\n");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string item;
        if (!header_seen) {
            while (std::getline(ss, item, ',')) table.columns.push_back(item);
            header_seen = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, item, ',')) {
            try {
                size_t used = 0;
                row.push_back(std::stod(item, &used));
                if (used != item.size())
                    throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw ParseError(path, line_no, "not a number: '" + item + "'");
            }
        }
        if (row.size() != table.columns.size())
            throw ParseError(path, line_no, "row width does not match header");
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_waveform_csv(const std::string& path, const PulseWaveform& waveform,
                        const std::vector<std::string>& metadata) {
    waveform.validate();
    std::vector<std::string> meta = metadata;
    const char* kind = waveform.kind == WaveformKind::coupler_frequency ? "coupler_frequency"
                       : waveform.kind == WaveformKind::qubit_frequency ? "qubit_frequency"
                                                                        : "flux_amplitude";
    meta.push_back(std::string("kind = ") + kind);
    meta.push_back("dt_ns = " + format_double(waveform.dt_ns));
    meta.push_back(std::string("units = ") +
                   (waveform.kind == WaveformKind::flux_amplitude ? "flux_quanta" : "GHz"));
    CsvTable table;
    table.columns = {"sample"};
    for (double s : waveform.samples) table.rows.push_back({s});
    write_csv(path, table, meta);
}

PulseWaveform read_waveform_csv(const std::string& path) {
    PulseWaveform w;
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open file: " + path);
    std::string line;
    bool header_seen = false;
    auto meta_value = [](const std::string& l, const std::string& key) -> std::string {
        const std::string prefix = "# " + key + " = ";
        if (l.rfind(prefix, 0) == 0) return l.substr(prefix.size());
        return {};
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') {
            if (auto v = meta_value(line, "kind"); !v.empty()) {
                if (v == "coupler_frequency") w.kind = WaveformKind::coupler_frequency;
                else if (v == "qubit_frequency") w.kind = WaveformKind::qubit_frequency;
                else if (v == "flux_amplitude") w.kind = WaveformKind::flux_amplitude;
                else throw ValidationError(path + ": unknown waveform kind " + v);
            }
            if (auto v = meta_value(line, "dt_ns"); !v.empty()) w.dt_ns = std::stod(v);
            continue;
        }
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true; // column header
            continue;
        }
        w.samples.push_back(std::stod(line));
    }
    w.validate();
    return w;
}

std::string csv_body(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

} // namespace tcsim
