#pragma once

// SRS distribution summaries over (scenario, label) cells, heatmap-data
// export, and the two-sample one-tail z-test used to separate pristine from
// falsified score distributions.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ooc/dataset.hpp"
#include "ooc/srs.hpp"

namespace ooc {

struct CellStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation (n denominator)
  std::size_t count = 0;

  bool operator==(const CellStats&) const = default;
};

// Row 0..3 = scenarios a..d, row 4 = merged (every instance regardless of
// scenario). Column 0 = pristine, column 1 = falsified.
struct SrsSummary {
  static constexpr std::size_t kMergedRow = 4;
  std::array<std::array<CellStats, 2>, 5> cells{};
  std::size_t skipped_no_textual = 0;  // instances carrying no textual evidence

  const CellStats& cell(std::size_t row, Label label) const {
    return cells[row][label == Label::kPristine ? 0 : 1];
  }

  bool operator==(const SrsSummary&) const = default;
};

// Per-instance statistic = mean SRS over the instance's textual evidence;
// instances without textual evidence are excluded (and counted).
SrsSummary summarize_srs(const std::vector<ClaimInstance>& dataset, const SrsConfig& config);

struct ZTestResult {
  double z = 0.0;
  double p = 0.0;  // one-tail, P(Z > z)
  double gamma = 0.0;
  std::size_t n_pristine = 0;
  std::size_t n_falsified = 0;
};

// Tests H0: mean_p - mean_f <= gamma against H1: mean_p - mean_f > gamma,
// from summary statistics (stds use the n-1 denominator). A zero pooled
// variance is an error when the means sit exactly on the margin; otherwise
// z is +-infinity and p collapses to 0 or 1.
ZTestResult ztest_from_stats(double mean_pristine, double std_pristine, std::size_t n_pristine,
                             double mean_falsified, double std_falsified,
                             std::size_t n_falsified, double gamma);

// Same test from raw samples; both need at least 2 values.
ZTestResult ztest(const std::vector<double>& pristine_sample,
                  const std::vector<double>& falsified_sample, double gamma);

// Writes "scenario,label,mean,std,count" plus one row per populated cell,
// scenarios a,b,c,d,merged in order, pristine before falsified, means and
// stds at 6 decimals.
void export_heatmap(const SrsSummary& summary, const std::string& path);

// Reads a file produced by export_heatmap. Unlisted cells stay empty; the
// skipped-instance count is not part of the file and comes back as 0.
SrsSummary parse_heatmap(const std::string& path);

}  // namespace ooc
