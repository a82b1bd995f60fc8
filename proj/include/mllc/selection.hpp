#pragma once

#include "mllc/coding.hpp"
#include "mllc/dataset.hpp"
#include "mllc/mllc.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mllc {

/// -2 loglik + n_params ln(n).
double bic(double loglik, int n_params, double n);

enum class BicSampleSize { level1_units, level2_groups };

const char* to_string(BicSampleSize n);

/// Worker count: hardware concurrency, capped by MLLC_THREADS when set.
int worker_threads();

/// Seed for start `start` of a multi-start run rooted at `seed`.
std::uint64_t start_seed(std::uint64_t seed, int start);

struct MultiStartResult {
  MllcFit best;
  int best_start = -1;
  std::vector<double> start_logliks;  // NaN for failed starts
  std::vector<std::string> start_errors;
  int converged_starts = 0;
  int successful_starts = 0;
};

/// Runs `starts` EM fits with seeds start_seed(seed, s) and keeps the highest
/// log-likelihood, ties going to the lowest start index. Throws only when
/// every start fails.
MultiStartResult multi_start_fit(const TwoLevelDataset& data, int clusters, int classes, int starts,
                                 std::uint64_t seed, const CodedDesign* design = nullptr, EmConfig em = {});

struct GridSpec {
  int clusters_min = 1, clusters_max = 8;
  int classes_min = 1, classes_max = 6;
  int starts = 16;
  std::uint64_t seed = 1;
  BicSampleSize bic_n = BicSampleSize::level1_units;
  EmConfig em;

  void validate() const;
};

struct GridRow {
  int clusters = 0;
  int classes = 0;
  bool ok = false;
  double loglik = 0.0;
  int n_params = 0;
  double bic = 0.0;
  double converged_share = 0.0;
  std::string error;
};

struct GridResult {
  std::vector<GridRow> rows;  // ordered by (L, H)
  std::vector<int> ranking;   // successful row indices by ascending BIC, stable
  int selected = -1;
  double bic_sample_size = 0.0;
  BicSampleSize bic_n = BicSampleSize::level1_units;
  MllcFit selected_fit;
};

/// Fits every (L, H) cell with multi_start_fit and selects the minimum BIC.
/// Cells whose classes exceed the number of groups are recorded as failed.
GridResult grid_search(const TwoLevelDataset& data, const GridSpec& grid, const CodedDesign* design = nullptr);

}  // namespace mllc
