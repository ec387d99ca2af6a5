#include "ooc/stats.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ooc {

namespace {

double mean_of(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

CellStats cell_from(const std::vector<double>& values) {
  CellStats cell;
  cell.count = values.size();
  if (values.empty()) return cell;
  cell.mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - cell.mean) * (v - cell.mean);
  cell.std = std::sqrt(ss / static_cast<double>(values.size()));
  return cell;
}

}  // namespace

SrsSummary summarize_srs(const std::vector<ClaimInstance>& dataset, const SrsConfig& config) {
  std::array<std::array<std::vector<double>, 2>, 5> buckets;
  SrsSummary summary;
  for (const ClaimInstance& inst : dataset) {
    if (inst.textual_evidence.empty()) {
      ++summary.skipped_no_textual;
      continue;
    }
    std::vector<EntitySet> docs;
    docs.reserve(inst.textual_evidence.size());
    for (const TextualEvidence& t : inst.textual_evidence) docs.push_back(t.entities);
    const double stat = mean_of(srs_vector(docs, inst.caption_entities, config));
    const std::size_t col = inst.label == Label::kPristine ? 0 : 1;
    if (inst.scenario != Scenario::kNone)
      buckets[static_cast<std::size_t>(inst.scenario)][col].push_back(stat);
    buckets[SrsSummary::kMergedRow][col].push_back(stat);
  }
  for (std::size_t row = 0; row < summary.cells.size(); ++row)
    for (std::size_t col = 0; col < 2; ++col)
      summary.cells[row][col] = cell_from(buckets[row][col]);
  return summary;
}

ZTestResult ztest_from_stats(double mean_pristine, double std_pristine, std::size_t n_pristine,
                             double mean_falsified, double std_falsified,
                             std::size_t n_falsified, double gamma) {
  if (n_pristine < 2 || n_falsified < 2)
    throw std::invalid_argument("ztest: both samples need at least 2 values");
  if (std_pristine < 0.0 || std_falsified < 0.0)
    throw std::invalid_argument("ztest: negative standard deviation");

  const double diff = mean_pristine - mean_falsified - gamma;
  const double variance = std_pristine * std_pristine / static_cast<double>(n_pristine) +
                          std_falsified * std_falsified / static_cast<double>(n_falsified);
  if (variance == 0.0 && diff == 0.0)
    throw std::invalid_argument(
        "ztest: z undefined (zero pooled variance and means exactly on the margin)");

  ZTestResult result;
  result.gamma = gamma;
  result.n_pristine = n_pristine;
  result.n_falsified = n_falsified;
  result.z = diff / std::sqrt(variance);
  result.p = 0.5 * std::erfc(result.z / std::sqrt(2.0));  // 1 - Phi(z)
  return result;
}

ZTestResult ztest(const std::vector<double>& pristine_sample,
                  const std::vector<double>& falsified_sample, double gamma) {
  if (pristine_sample.size() < 2 || falsified_sample.size() < 2)
    throw std::invalid_argument("ztest: both samples need at least 2 values");
  auto sample_std = [](const std::vector<double>& values, double mean) {
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
  };
  const double mean_p = mean_of(pristine_sample);
  const double mean_f = mean_of(falsified_sample);
  return ztest_from_stats(mean_p, sample_std(pristine_sample, mean_p), pristine_sample.size(),
                          mean_f, sample_std(falsified_sample, mean_f), falsified_sample.size(),
                          gamma);
}

namespace {

constexpr const char* kHeatmapHeader = "scenario,label,mean,std,count";
constexpr const char* kRowNames[5] = {"a", "b", "c", "d", "merged"};

}  // namespace

void export_heatmap(const SrsSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write heatmap file: " + path);
  out << kHeatmapHeader << '\n';
  out << std::fixed << std::setprecision(6);
  for (std::size_t row = 0; row < summary.cells.size(); ++row)
    for (std::size_t col = 0; col < 2; ++col) {
      const CellStats& cell = summary.cells[row][col];
      if (cell.count == 0) continue;
      out << kRowNames[row] << ',' << (col == 0 ? "pristine" : "falsified") << ','
          << cell.mean << ',' << cell.std << ',' << cell.count << '\n';
    }
  if (!out) throw std::runtime_error("heatmap write failed: " + path);
}

SrsSummary parse_heatmap(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open heatmap file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kHeatmapHeader)
    throw std::runtime_error(path + ": missing heatmap header");

  SrsSummary summary;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string scenario, label, mean, std_text, count;
    if (!std::getline(fields, scenario, ',') || !std::getline(fields, label, ',') ||
        !std::getline(fields, mean, ',') || !std::getline(fields, std_text, ',') ||
        !std::getline(fields, count))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed heatmap row");

    std::size_t row = summary.cells.size();
    for (std::size_t r = 0; r < summary.cells.size(); ++r)
      if (scenario == kRowNames[r]) row = r;
    if (row == summary.cells.size())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown scenario '" +
                               scenario + "'");
    std::size_t col;
    if (label == "pristine")
      col = 0;
    else if (label == "falsified")
      col = 1;
    else
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown label '" +
                               label + "'");

    CellStats& cell = summary.cells[row][col];
    try {
      cell.mean = std::stod(mean);
      cell.std = std::stod(std_text);
      cell.count = std::stoul(count);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed heatmap row");
    }
  }
  return summary;
}

}  // namespace ooc
