#include "kmsq/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "kmsq/error.hpp"

namespace kmsq {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::ConfigParse, msg); }

long parse_long(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  long v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) bad(fmt::format("{}: expected an integer, got '{}'", what, text));
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  const long v = parse_long(text, what);
  if (v < 0) bad(fmt::format("{}: must be >= 0", what));
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& what) {
  const std::string t = boost::algorithm::to_lower_copy(trim(text));
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  bad(fmt::format("{}: expected true/false, got '{}'", what, text));
}

const std::set<std::string> kSections{"model", "thermal", "sampler", "checks", "green", "vectors"};

const std::set<std::string> kModelKeys{"variant", "space_dim", "mass", "nodes", "width_max", "weight", "dispersion",
                                       "mu", "condensate", "critical", "side", "kappa", "coupling", "half_width",
                                       "grid", "matrix_file"};

std::string get(const std::map<std::string, std::string>& m, const std::string& key, const std::string& fallback) {
  const auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  if (t == "inf" || t == "+inf" || t == "infinity") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty() || std::isnan(v)) {
    bad(fmt::format("{}: expected a real number, got '{}'", what, text));
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
    bad(fmt::format("{}: expected an unsigned 64-bit integer, got '{}'", what, text));
  }
  return v;
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  const std::string text(std::istreambuf_iterator<char>(in), {});
  // The ini reader drops sections without keys, so headers are checked here.
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      line = trim(line);
      if (line.size() < 2 || line.front() != '[' || line.back() != ']') continue;
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (!kSections.count(name)) bad(fmt::format("unknown section [{}]", name));
    }
  }
  pt::ptree tree;
  try {
    std::istringstream body(text);
    pt::ini_parser::read_ini(body, tree);
  } catch (const pt::ini_parser_error& e) {
    bad(fmt::format("line {}: {}", e.line(), e.message()));
  }
  if (tree.empty()) bad("configuration is empty");

  RunConfig cfg;
  cfg.base_dir = base_dir;
  bool have_model = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) bad(fmt::format("key '{}' outside any section", section));
    std::map<std::string, std::string> kv;
    for (const auto& [key, value] : body) kv[key] = trim(value.data());
    const std::string where = "[" + section + "]";

    if (section == "model") {
      have_model = true;
      for (const auto& [k, v] : kv) {
        if (!kModelKeys.count(k)) bad(fmt::format("{}: unknown key '{}'", where, k));
      }
      cfg.variant = get(kv, "variant", "");
      if (cfg.variant.empty()) bad("[model]: 'variant' is required");
      kv.erase("variant");
      cfg.model = kv;
    } else if (section == "thermal") {
      for (const auto& [k, v] : kv) {
        if (k == "beta") {
          cfg.beta = parse_real(v, "[thermal] beta");
          if (!(*cfg.beta > 0.0)) bad("[thermal] beta must be > 0 or inf");
        } else if (k == "b_operator") {
          if (v == "kms") cfg.b_operator = BOperator::Kms;
          else if (v == "corrupted") cfg.b_operator = BOperator::CorruptedNegativeControl;
          else bad(fmt::format("[thermal] b_operator must be kms or corrupted, got '{}'", v));
        } else {
          bad(fmt::format("{}: unknown key '{}'", where, k));
        }
      }
    } else if (section == "sampler") {
      for (const auto& [k, v] : kv) {
        const std::string what = where + " " + k;
        if (k == "grid") cfg.sampler.grid = parse_count(v, what);
        else if (k == "samples") cfg.sampler.samples = parse_count(v, what);
        else if (k == "modes") cfg.sampler.modes = static_cast<long>(parse_count(v, what));
        else if (k == "seed") cfg.sampler.seed = parse_u64(v, what);
        else if (k == "threads") cfg.sampler.threads = static_cast<unsigned>(parse_count(v, what));
        else if (k == "coords") {
          std::vector<std::string> parts;
          boost::algorithm::split(parts, v, boost::is_any_of(","));
          for (auto& p : parts) {
            p = trim(p);
            if (!p.empty()) cfg.sampler.coords.push_back(p);
          }
        } else {
          bad(fmt::format("{}: unknown key '{}'", where, k));
        }
      }
    } else if (section == "checks") {
      for (const auto& [k, v] : kv) {
        const std::string what = where + " " + k;
        SuiteOptions& o = cfg.checks;
        if (k == "seed") o.seed = parse_u64(v, what);
        else if (k == "pairs") o.pairs = static_cast<int>(parse_count(v, what));
        else if (k == "grid") o.grid = static_cast<int>(parse_count(v, what));
        else if (k == "gram_trials") o.gram_trials = static_cast<int>(parse_count(v, what));
        else if (k == "words") o.words = static_cast<int>(parse_count(v, what));
        else if (k == "markov_configs") o.markov_configs = static_cast<int>(parse_count(v, what));
        else if (k == "quadrature_points") o.quadrature_points = static_cast<int>(parse_count(v, what));
        else if (k == "fourier_modes") o.fourier_modes = static_cast<long>(parse_count(v, what));
        else if (k == "image_terms") o.image_terms = static_cast<int>(parse_count(v, what));
        else {
          try {
            o.tolerances.set(k, parse_real(v, what));
          } catch (const Error& e) {
            if (e.code() == ErrorCode::ConfigParse) throw;
            bad(fmt::format("{}: {}", where, e.what()));
          }
        }
      }
      if (cfg.checks.grid < 2) bad("[checks] grid must be >= 2");
    } else if (section == "green") {
      for (const auto& [k, v] : kv) {
        const std::string what = where + " " + k;
        if (k == "word") cfg.green.word = v;
        else if (k == "sweep") cfg.green.sweep = parse_count(v, what);
        else if (k == "sweep_to") cfg.green.sweep_to = parse_real(v, what);
        else if (k == "kind") {
          if (v != "euclid" && v != "real") bad("[green] kind must be euclid or real");
          cfg.green.kind = v;
        } else {
          bad(fmt::format("{}: unknown key '{}'", where, k));
        }
      }
    } else if (section == "vectors") {
      cfg.vectors = kv;
    } else {
      bad(fmt::format("unknown section [{}]", section));
    }
  }
  if (!have_model) bad("missing [model] section");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad(fmt::format("cannot open config '{}'", path.string()));
  return parse_config(in, path.parent_path());
}

BuiltModel build_model(const RunConfig& cfg) {
  const auto& m = cfg.model;
  auto allowed = [&](std::initializer_list<const char*> keys) {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : m) {
      if (!ok.count(k)) bad(fmt::format("[model]: key '{}' does not apply to variant '{}'", k, cfg.variant));
    }
  };
  auto real = [&](const char* key, double fallback) {
    const auto it = m.find(key);
    return it == m.end() ? fallback : parse_real(it->second, std::string("[model] ") + key);
  };
  auto integer = [&](const char* key, long fallback) {
    const auto it = m.find(key);
    return it == m.end() ? fallback : parse_long(it->second, std::string("[model] ") + key);
  };
  const double beta = cfg.beta.value_or(cfg.variant == "rindler" ? 2.0 * std::numbers::pi : 1.0);

  BuiltModel out = [&]() -> BuiltModel {
    if (cfg.variant == "minkowski") {
      allowed({"space_dim", "mass", "nodes", "width_max", "weight"});
      MinkowskiParams p;
      p.space_dim = static_cast<int>(integer("space_dim", p.space_dim));
      p.mass = real("mass", p.mass);
      p.nodes = static_cast<std::size_t>(integer("nodes", static_cast<long>(p.nodes)));
      p.width_max = real("width_max", p.width_max);
      p.weight = parse_index_weight(get(m, "weight", "field"));
      return build_minkowski(p, beta);
    }
    if (cfg.variant == "bose") {
      allowed({"dispersion", "space_dim", "mu", "mass", "condensate", "critical", "nodes", "width_max"});
      BoseParams p;
      const std::string disp = get(m, "dispersion", "standard");
      if (disp == "standard") p.dispersion = BoseDispersion::Standard;
      else if (disp == "semirelativistic") p.dispersion = BoseDispersion::Semirelativistic;
      else bad(fmt::format("[model] dispersion must be standard or semirelativistic, got '{}'", disp));
      p.space_dim = static_cast<int>(integer("space_dim", p.space_dim));
      p.mu = real("mu", p.mu);
      p.mass = real("mass", p.mass);
      p.condensate = real("condensate", p.condensate);
      p.critical = m.count("critical") ? parse_bool(m.at("critical"), "[model] critical") : false;
      p.nodes = static_cast<std::size_t>(integer("nodes", static_cast<long>(p.nodes)));
      p.width_max = real("width_max", p.width_max);
      return build_bose_gas(p, beta);
    }
    if (cfg.variant == "crystal") {
      allowed({"side", "space_dim", "kappa", "coupling"});
      CrystalParams p;
      p.side = static_cast<int>(integer("side", p.side));
      p.space_dim = static_cast<int>(integer("space_dim", p.space_dim));
      p.kappa = real("kappa", p.kappa);
      if (m.count("coupling")) {
        const auto toks = split_ws(m.at("coupling"));
        const auto n = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(toks.size()))));
        if (n * n != static_cast<Index>(toks.size()) || n == 0) bad("[model] coupling must list n*n entries");
        Matrix a(n, n);
        for (Index i = 0; i < n * n; ++i) a(i / n, i % n) = parse_real(toks[static_cast<std::size_t>(i)], "[model] coupling");
        p.coupling = a;
      }
      return build_crystal(p, beta);
    }
    if (cfg.variant == "rindler") {
      allowed({"mass", "half_width", "grid", "weight"});
      RindlerParams p;
      p.mass = real("mass", p.mass);
      p.half_width = real("half_width", p.half_width);
      p.grid = static_cast<int>(integer("grid", p.grid));
      p.weight = parse_index_weight(get(m, "weight", "field"));
      return build_rindler(p, beta);
    }
    if (cfg.variant == "matrix") {
      allowed({"matrix_file"});
      const std::string file = get(m, "matrix_file", "");
      if (file.empty()) bad("[model] matrix variant needs 'matrix_file'");
      std::filesystem::path path(file);
      if (path.is_relative()) path = cfg.base_dir / path;
      std::ifstream in(path);
      if (!in) bad(fmt::format("[model] cannot open matrix file '{}'", path.string()));
      return build_matrix_model(read_matrix(in), beta, path.string());
    }
    bad(fmt::format("[model] unknown variant '{}'", cfg.variant));
  }();

  if (cfg.b_operator != BOperator::Kms) {
    out.ctx = ThermalContext(out.ctx.model(), out.ctx.beta(), out.ctx.condensate(), cfg.b_operator);
    out.hash = model_hash(out.variant, out.parameters, out.ctx.beta(), cfg.b_operator);
  }
  return out;
}

TestVector resolve_vector(const BuiltModel& built, const RunConfig& cfg, const std::string& raw) {
  const std::string spec = trim(raw);
  const GeneratorModel& model = built.ctx.model();
  if (spec.empty()) throw Error(ErrorCode::InvalidArgument, "empty vector spec");
  if (spec[0] == '-') return -resolve_vector(built, cfg, spec.substr(1));
  if (const auto it = cfg.vectors.find(spec); it != cfg.vectors.end()) {
    if (it->second == spec) throw Error(ErrorCode::InvalidArgument, "vector refers to itself");
    return resolve_vector(built, cfg, it->second);
  }
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto weighted = [&](const TestVector& f) { return apply_index_weight(model, built.weight, f); };
  if (head == "site") {
    if (model.kind() != ModelKind::Matrix) throw Error(ErrorCode::InvalidArgument, "site vectors need a matrix model");
    const long j = parse_long(rest, "site index");
    if (j < 0 || j >= model.dim()) throw Error(ErrorCode::DimensionMismatch, fmt::format("site {} out of range", j));
    Vector v = Vector::Zero(model.dim());
    v[j] = 1.0;
    return weighted(TestVector::real(v));
  }
  if (head == "mode") {
    const long k = parse_long(rest, "mode index");
    return model.basis_vector(k);
  }
  if (head == "gauss") {
    std::vector<std::string> parts;
    boost::algorithm::split(parts, rest, boost::is_any_of(":"));
    if (parts.size() != 2) throw Error(ErrorCode::InvalidArgument, "gauss spec is gauss:AMP:A");
    return weighted(gaussian_profile(model, parse_real(parts[0], "gauss amplitude"), parse_real(parts[1], "gauss width")));
  }
  if (head == "values") {
    const auto toks = split_ws(rest);
    if (static_cast<Index>(toks.size()) != model.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  fmt::format("values spec has {} entries, model expects {}", toks.size(), model.dim()));
    }
    Vector v(model.dim());
    for (Index i = 0; i < v.size(); ++i) v[i] = parse_real(toks[static_cast<std::size_t>(i)], "vector value");
    return weighted(TestVector::real(v));
  }
  throw Error(ErrorCode::InvalidArgument, fmt::format("cannot resolve vector '{}'", spec));
}

}  // namespace kmsq
