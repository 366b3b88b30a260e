#pragma once

// The invariant suite run by `kmsq verify`: every structural identity of the
// quasi-free state and its thermal process, checked on random probes of one
// model.

#include <cstdint>
#include <map>
#include <string>

#include "kmsq/models.hpp"
#include "kmsq/report.hpp"

namespace kmsq {

class Tolerances {
 public:
  /// Defaults for every named check.
  Tolerances();

  double get(const std::string& name) const;
  /// Throws InvalidArgument for unknown names or negative values.
  void set(const std::string& name, double value);
  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

struct SuiteOptions {
  Tolerances tolerances;
  std::uint64_t seed = 20240601;
  int pairs = 10;           // random (f, g) pairs for reflection and quadrature checks
  int grid = 64;            // s-grid for reflection
  int gram_trials = 20;
  int words = 50;
  int markov_configs = 50;
  int quadrature_points = 3;
  long fourier_modes = 10000;
  int image_terms = 20;
};

VerificationReport run_suite(const BuiltModel& model, const SuiteOptions& options);

}  // namespace kmsq
