#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scenmine/metrics/scores.hpp"

namespace scenmine::metrics {

struct ResultsFile {
  std::vector<LogScores> logs;
  Summary summary;
};

// One {"kind":"log",...} line per log, then one {"kind":"summary",...} line
// with keys "HOTA-T", "HOTA", "TS-F1", "Log-F1".
void write_results(std::ostream& out, std::span<const LogScores> logs, const Summary& summary);
void write_results(const std::filesystem::path& path, std::span<const LogScores> logs,
                   const Summary& summary);

// Throws FormatError on a malformed line or a missing summary record.
ResultsFile read_results(std::istream& in);
ResultsFile read_results(const std::filesystem::path& path);

// Fixed-width table, scores as percentages with two decimals:
//   HOTA-T     HOTA    TS-F1   Log-F1
//    53.12    51.70    70.05    73.91
std::string format_table(const Summary& summary);

}  // namespace scenmine::metrics
