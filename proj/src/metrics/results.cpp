#include "scenmine/metrics/results.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "scenmine/errors.hpp"

namespace scenmine::metrics {

using nlohmann::json;

namespace {

json log_record(const LogScores& l) {
  return {{"kind", "log"},
          {"log_id", l.log_id},
          {"hota_temporal", l.hota_temporal},
          {"hota", l.hota},
          {"ts_tp", l.timestamp.tp},
          {"ts_fp", l.timestamp.fp},
          {"ts_fn", l.timestamp.fn},
          {"ts_precision", l.timestamp_prf.precision},
          {"ts_recall", l.timestamp_prf.recall},
          {"ts_f1", l.timestamp_prf.f1},
          {"pred_positive", l.pred_positive},
          {"gt_positive", l.gt_positive},
          {"pred_entries", l.pred_entries},
          {"gt_entries", l.gt_entries}};
}

LogScores log_from(const json& j) {
  LogScores l;
  l.log_id = j.at("log_id").get<std::string>();
  l.hota_temporal = j.at("hota_temporal").get<double>();
  l.hota = j.at("hota").get<double>();
  l.timestamp.tp = j.at("ts_tp").get<std::size_t>();
  l.timestamp.fp = j.at("ts_fp").get<std::size_t>();
  l.timestamp.fn = j.at("ts_fn").get<std::size_t>();
  l.timestamp_prf = {j.at("ts_precision").get<double>(), j.at("ts_recall").get<double>(),
                     j.at("ts_f1").get<double>()};
  l.pred_positive = j.at("pred_positive").get<bool>();
  l.gt_positive = j.at("gt_positive").get<bool>();
  l.pred_entries = j.at("pred_entries").get<std::size_t>();
  l.gt_entries = j.at("gt_entries").get<std::size_t>();
  return l;
}

}  // namespace

void write_results(std::ostream& out, std::span<const LogScores> logs, const Summary& summary) {
  for (const auto& l : logs) out << log_record(l).dump() << '\n';
  const json s = {{"kind", "summary"},
                  {"logs", summary.logs},
                  {"HOTA-T", summary.hota_temporal},
                  {"HOTA", summary.hota},
                  {"TS-F1", summary.timestamp_f1},
                  {"Log-F1", summary.log_f1}};
  out << s.dump() << '\n';
}

void write_results(const std::filesystem::path& path, std::span<const LogScores> logs,
                   const Summary& summary) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write results to " + path.string());
  write_results(out, logs, summary);
}

ResultsFile read_results(std::istream& in) {
  ResultsFile rf;
  bool have_summary = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "log") {
        rf.logs.push_back(log_from(j));
      } else if (kind == "summary") {
        rf.summary.logs = j.at("logs").get<std::size_t>();
        rf.summary.hota_temporal = j.at("HOTA-T").get<double>();
        rf.summary.hota = j.at("HOTA").get<double>();
        rf.summary.timestamp_f1 = j.at("TS-F1").get<double>();
        rf.summary.log_f1 = j.at("Log-F1").get<double>();
        have_summary = true;
      } else {
        throw FormatError("unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw FormatError("results line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_summary) throw FormatError("results file has no summary record");
  return rf;
}

ResultsFile read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open results file " + path.string());
  return read_results(in);
}

std::string format_table(const Summary& s) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "%8s %8s %8s %8s\n", "HOTA-T", "HOTA", "TS-F1", "Log-F1");
  out += buf;
  std::snprintf(buf, sizeof buf, "%8.2f %8.2f %8.2f %8.2f\n", 100.0 * s.hota_temporal,
                100.0 * s.hota, 100.0 * s.timestamp_f1, 100.0 * s.log_f1);
  out += buf;
  return out;
}

}  // namespace scenmine::metrics
