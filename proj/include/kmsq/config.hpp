#pragma once

// Sectioned key = value run configuration:
//
//   [model]    variant = minkowski | bose | crystal | rindler | matrix, plus its parameters
//   [thermal]  beta = <float> | inf,  b_operator = kms | corrupted
//   [sampler]  grid, samples, modes, seed, threads, coords
//   [checks]   seed, trial counts, and per-check tolerances by name
//   [green]    word, sweep, sweep_to, kind = euclid | real
//   [vectors]  named test vectors used by [green] and [sampler]
//
// Unknown sections or keys are rejected so typos cannot silently fall back to
// defaults.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kmsq/models.hpp"
#include "kmsq/suite.hpp"

namespace kmsq {

struct SamplerSection {
  std::size_t grid = 64;
  std::size_t samples = 1000;
  long modes = 512;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::vector<std::string> coords;  // vector specs; empty means the first two sites
};

struct GreenSection {
  std::string word;  // "f@s;g@t;..."
  std::size_t sweep = 0;
  std::optional<double> sweep_to;
  std::string kind = "euclid";
};

struct RunConfig {
  std::filesystem::path base_dir;
  std::string variant;
  std::map<std::string, std::string> model;
  std::optional<double> beta;
  BOperator b_operator = BOperator::Kms;
  SamplerSection sampler;
  SuiteOptions checks;
  GreenSection green;
  std::map<std::string, std::string> vectors;
};

/// Accepts decimal reals and "inf".
double parse_real(const std::string& text, const std::string& what);
std::uint64_t parse_u64(const std::string& text, const std::string& what);

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Builds the configured model. A missing beta takes the variant default
/// (2 pi for rindler, 1 otherwise).
BuiltModel build_model(const RunConfig& config);

/// Resolves a vector spec against a model:
///   <name>            an entry of [vectors]
///   site:J            standard basis vector (matrix models)
///   mode:K            K-th spectral basis vector
///   gauss:AMP:A       Gaussian profile amp * exp(-A |x|^2) (quadrature models)
///   values:x0 x1 ...  explicit real components (matrix models)
///   -<spec>           negation
/// The model's index weight is applied to site/values/gauss specs.
TestVector resolve_vector(const BuiltModel& model, const RunConfig& config, const std::string& spec);

}  // namespace kmsq
