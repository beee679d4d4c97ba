#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wavefreeze/field.hpp"

namespace wavefreeze {

// Raw little-endian float64 values plus a JSON sidecar at path + ".json"
// holding {grid, components, time, seed}.
void write_snapshot(const std::string& path, const Field& field, double time, std::uint64_t seed);
Field read_snapshot(const std::string& path, double* time = nullptr, std::uint64_t* seed = nullptr);

// Hex SHA-256 of a file's contents.
std::string sha256_file(const std::string& path);

// Writes rows of numbers under a header line.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace wavefreeze
