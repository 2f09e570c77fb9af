#pragma once

#include "tcsim/pulses.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tcsim {

inline constexpr const char* tool_version = "tcsim 0.1.0";

// FNV-1a 64-bit hash, hex-encoded; used to fingerprint config files in
// output metadata.
std::string fnv1a_hex(const std::string& bytes);

std::string read_text_file(const std::string& path); // throws ValidationError

// Standard '#'-prefixed metadata header: tool version, config hash, seed.
// Deliberately timestamp-free so repeated runs are byte-identical.
std::vector<std::string> standard_metadata(const std::string& config_hash, std::uint64_t seed);

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Writes metadata lines ('# ...'), a column-name header row, then one data
// row per entry with %.17g formatting (doubles survive a round trip
// exactly).
void write_csv(const std::string& path, const CsvTable& table,
               const std::vector<std::string>& metadata);

// Reads a CSV written by write_csv; '#' lines are skipped.
CsvTable read_csv(const std::string& path);

// Waveform CSV: metadata carries kind/dt/units; one sample per row.
void write_waveform_csv(const std::string& path, const PulseWaveform& waveform,
                        const std::vector<std::string>& metadata);
PulseWaveform read_waveform_csv(const std::string& path);

// The body of an output file with '#' metadata lines stripped, for
// determinism comparisons.
std::string csv_body(const std::string& path);

} // namespace tcsim
