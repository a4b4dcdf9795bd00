#include "shiftsel/report_io.hpp"

#include "shiftsel/errors.hpp"
#include "shiftsel/matrix_io.hpp"

namespace shiftsel {

using nlohmann::json;

json report_to_json(const NoiseReport& report) {
  json doc;
  doc["n"] = report.size();
  doc["select_ratio"] = report.select_ratio;
  doc["penalty_mode"] = std::string(to_string(report.penalty_mode));
  doc["lambda_grid"] = {{"max", report.lambda_grid.max},
                        {"min_ratio", report.lambda_grid.min_ratio},
                        {"count", report.lambda_grid.count}};
  doc["seed"] = report.seed;
  doc["selecting_times"] = report.selecting_times;
  doc["ranking"] = report.ranking;
  doc["noisy_set"] = report.noisy_set;
  return doc;
}

NoiseReport report_from_json(const json& doc) {
  NoiseReport report;
  try {
    report.select_ratio = doc.at("select_ratio").get<double>();
    report.penalty_mode = parse_penalty_mode(doc.at("penalty_mode").get<std::string>());
    const json& grid = doc.at("lambda_grid");
    report.lambda_grid.max = grid.at("max").get<double>();
    report.lambda_grid.min_ratio = grid.at("min_ratio").get<double>();
    report.lambda_grid.count = grid.at("count").get<std::size_t>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.selecting_times = doc.at("selecting_times").get<std::vector<double>>();
    report.ranking = doc.at("ranking").get<IndexList>();
    report.noisy_set = doc.at("noisy_set").get<IndexList>();
    if (doc.at("n").get<std::size_t>() != report.selecting_times.size()) {
      throw DomainError("report field n disagrees with selecting_times length");
    }
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::kHeader, std::string("malformed report: ") + e.what(), 0, 0);
  }
  return report;
}

std::string dump_json(const json& doc) { return doc.dump(2) + "\n"; }

void save_report(const NoiseReport& report, const std::filesystem::path& path) {
  write_file(path, dump_json(report_to_json(report)));
}

NoiseReport load_report(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::kHeader, std::string("invalid JSON: ") + e.what(), 0,
                     e.byte);
  }
  return report_from_json(doc);
}

}  // namespace shiftsel
