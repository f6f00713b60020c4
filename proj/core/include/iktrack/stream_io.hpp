#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/targets.hpp"

namespace iktrack {

/// One JSON record per line:
///   {"t": s, "p": [[x,y,z],…], "R": [[9 floats row-major],…], "v": [[…],…], "w": [[…],…]}
/// Numbers are written with 17 significant digits, so a save/load round trip
/// is exact.
std::string format_sample(const TargetSample& sample);
void write_stream(std::ostream& out, const std::vector<TargetSample>& samples);
void save_stream(const std::filesystem::path& path, const std::vector<TargetSample>& samples);

/// Throws ParseError with the 1-based line number on malformed records.
/// Blank lines are skipped.
std::vector<TargetSample> read_stream(std::istream& in);
std::vector<TargetSample> load_stream(const std::filesystem::path& path);

/// load_stream plus check_sample on every record (SchemaMismatch).
std::vector<TargetSample> load_stream(const std::filesystem::path& path,
                                      const KinematicModel& model);

}  // namespace iktrack
