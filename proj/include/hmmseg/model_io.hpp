#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "hmmseg/model.hpp"

namespace hmmseg {

// Model files are JSON:
//
//   {
//     "states": 2,
//     "transition": [[0.9, 0.1], [0.1, 0.9]],        // row-major, K rows
//     "initial": [0.5, 0.5],
//     "emission": {"kind": "gaussian", "means": [0, 0.5], "variances": [1, 1]}
//   }
//
// Table kinds ("categorical", "abstract") carry "symbols" (alphabet names)
// and "table" (K rows, one column per symbol). Doubles are written with
// shortest round-trip formatting, so store/load is lossless.
ModelSpec parse_model(const std::string& text);
std::string format_model(const ModelSpec& spec);
ModelSpec load_model(const std::filesystem::path& path);
void store_model(const ModelSpec& spec, const std::filesystem::path& path);

// FNV-1a over the canonical JSON form; used in CSV metadata headers.
std::string model_hash(const ModelSpec& spec);

// One observation per line: a symbol name for table emissions, a decimal
// real for gaussian emissions. Blank lines and lines starting with '#' are
// skipped.
ObservationSequence read_observations(std::istream& in, const ModelSpec& spec);
ObservationSequence load_observations(const std::filesystem::path& path, const ModelSpec& spec);
void write_observations(std::ostream& out, const ObservationSequence& obs, const ModelSpec& spec);

// One 1-based state label per line.
StatePath read_state_path(std::istream& in, std::size_t num_states);
StatePath load_state_path(const std::filesystem::path& path, std::size_t num_states);
void write_state_path(std::ostream& out, const StatePath& path);

}  // namespace hmmseg
