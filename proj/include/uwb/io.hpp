#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwb/evaluation.hpp"
#include "uwb/localization.hpp"
#include "uwb/sim.hpp"

namespace uwb::io {

/// Nine significant digits, shortest of fixed/scientific (printf "%.9g").
std::string format_float(double v);

/// Rounds to nine significant digits so JSON output matches the CSV precision.
double round_sig9(double v);

void write_measurements_csv(std::ostream& os, std::span<const sim::Measurement> ms);
void write_fixes_csv(std::ostream& os, std::span<const loc::PositionFix> fixes);
void write_truth_csv(std::ostream& os, const eval::GroundTruthTrack& truth);
/// `bin_lo,bin_hi,count,pdf_fit`, the last column being the fitted Gaussian
/// density at the bin centre.
void write_histogram_csv(std::ostream& os, const eval::ErrorStats& stats);

nlohmann::json stats_to_json(const eval::ErrorStats& stats);

/// Column-checked readers. A missing or unexpected column raises a
/// ValidationError whose key() is the column name.
std::vector<loc::PositionFix> read_fixes_csv(std::istream& is);
eval::GroundTruthTrack read_truth_csv(std::istream& is);
std::vector<sim::Measurement> read_measurements_csv(std::istream& is);

/// Writes a file with `\n` line endings; throws IoError on failure.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace uwb::io
