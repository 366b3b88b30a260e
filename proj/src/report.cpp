#include "kmsq/report.hpp"

#include <cmath>

#include <fmt/format.h>

namespace kmsq {

bool VerificationReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.skipped && !c.pass) return false;
  }
  return true;
}

const CheckRecord* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.check_name == name) return &c;
  }
  return nullptr;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", x);
}

nlohmann::json to_json(const CheckRecord& r) {
  nlohmann::json j;
  j["check_name"] = r.check_name;
  j["identity"] = r.identity;
  j["model_id"] = r.model_id;
  j["beta"] = r.beta;
  j["residual"] = r.residual;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["skipped"] = r.skipped;
  if (!r.note.empty()) j["note"] = r.note;
  if (!r.measured.empty()) j["measured"] = r.measured;
  return j;
}

nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j;
  j["model_id"] = r.model_id;
  j["variant"] = r.variant;
  j["model_hash"] = r.model_hash;
  j["beta"] = r.beta;
  j["all_pass"] = r.all_pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  return j;
}

namespace {

void write(std::string& out, const nlohmann::json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad + nlohmann::json(it.key()).dump() + (indent > 0 ? ": " : ":");
        write(out, it.value(), indent, depth + 1);
      }
      out += nl + close_pad + "}";
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      out += nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad;
        write(out, v, indent, depth + 1);
      }
      out += nl + close_pad + "]";
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j, int indent) {
  std::string out;
  write(out, j, indent, 0);
  out += "\n";
  return out;
}

}  // namespace kmsq
