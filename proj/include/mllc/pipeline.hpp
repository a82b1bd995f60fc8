#pragma once

#include "mllc/dataset.hpp"
#include "mllc/regression.hpp"
#include "mllc/selection.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mllc {

inline constexpr const char* kVersion = "0.3.0";

enum class ExitCode : int { ok = 0, input_error = 2, numerical_failure = 3, not_converged = 4 };

struct IntRange {
  int lo = 1;
  int hi = 1;
};

/// Parses "A" or "A..B".
IntRange parse_range(const std::string& text);

struct RunConfig {
  std::string command;
  std::string input;
  std::string schema;
  IntRange clusters{1, 1};
  IntRange classes{1, 1};
  std::vector<std::string> covariates;
  std::string outcome;
  int starts = 16;
  std::uint64_t seed = 1;
  int quadrature = 20;
  WeightMode weights = WeightMode::per_group;
  double tol = 1e-8;
  int max_iter = 500;
  std::string out_dir = "out";
  std::string format = "both";  // text, json or both
  bool hard_assignment = false;
  IccScale icc_scale = IccScale::unit;
  BicSampleSize bic_n = BicSampleSize::level1_units;
  std::string scenario = "reference-profiles";  // simulate: reference-profiles | ri-logit
  int groups = 28;
  int group_size = 450;
  int instances = 100;

  /// Range and path checks performed before any computation.
  void validate() const;
};

/// Executes one command, writing artifacts under out_dir. Progress goes to
/// `log`; failures are reported as a JSON object on `err` and in error.json.
ExitCode run_pipeline(const RunConfig& config, std::ostream& log, std::ostream& err);

}  // namespace mllc
