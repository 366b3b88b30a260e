#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace kmsq {

struct CheckRecord {
  std::string check_name;
  std::string identity;  // the relation being tested, in words
  std::string model_id;
  double beta = 0.0;
  double residual = 0.0;  // passes iff residual <= tolerance
  double tolerance = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string note;
  nlohmann::json measured = nlohmann::json::object();
};

struct VerificationReport {
  std::string model_id;
  std::string variant;
  std::string model_hash;
  double beta = 0.0;
  std::vector<CheckRecord> checks;

  bool all_pass() const;
  const CheckRecord* find(const std::string& name) const;
};

/// "{:.17g}", with inf/-inf/nan spelled out.
std::string format_double(double x);

nlohmann::json to_json(const CheckRecord& r);
nlohmann::json to_json(const VerificationReport& r);

/// JSON text with every floating-point number written to 17 significant
/// digits; non-finite numbers become the strings "inf", "-inf", "nan".
std::string dump_json(const nlohmann::json& j, int indent = 2);

}  // namespace kmsq
