#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include <fmt/format.h>

#include "kmsq/config.hpp"
#include "kmsq/digest.hpp"
#include "kmsq/error.hpp"
#include "kmsq/process.hpp"
#include "kmsq/report.hpp"
#include "kmsq/sampler.hpp"
#include "kmsq/simd/kernels.hpp"

namespace kmsq::cli {
namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string beta;
  std::optional<long> modes;
  std::optional<std::size_t> samples;
  std::vector<std::string> tolerances;
  std::string word;
  std::optional<std::size_t> sweep;
  std::string coords;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Context {
  std::string command;
  Flags flags;
  RunConfig config;
  std::optional<BuiltModel> model;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "run configuration (INI sections [model] [thermal] [sampler] [checks])")
      ->required();
  sub->add_option("--out", f.out, "output path");
  sub->add_option("--seed", f.seed, "random seed (checks or sampler)");
  sub->add_option("--beta", f.beta, "inverse temperature, FLOAT or inf");
  sub->add_option("--modes", f.modes, "Fourier mode count N");
  sub->add_option("--samples", f.samples, "number of sampled paths");
  sub->add_option("--tolerance", f.tolerances, "override a check tolerance, NAME=VALUE (repeatable)");
}

void apply_flags(Context& c) {
  const Flags& f = c.flags;
  RunConfig& cfg = c.config;
  if (!f.beta.empty()) {
    cfg.beta = parse_real(f.beta, "--beta");
    if (!(*cfg.beta > 0.0)) throw UsageError("--beta must be > 0 or inf");
  }
  if (f.seed) {
    cfg.sampler.seed = *f.seed;
    cfg.checks.seed = *f.seed;
  }
  if (f.modes) {
    if (*f.modes < 0) throw UsageError("--modes must be >= 0");
    cfg.sampler.modes = *f.modes;
    cfg.checks.fourier_modes = *f.modes;
  }
  if (f.samples) cfg.sampler.samples = *f.samples;
  for (const auto& t : f.tolerances) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("--tolerance expects NAME=VALUE, got '{}'", t));
    try {
      cfg.checks.tolerances.set(t.substr(0, eq), parse_real(t.substr(eq + 1), "--tolerance " + t.substr(0, eq)));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (!f.word.empty()) cfg.green.word = f.word;
  if (f.sweep) cfg.green.sweep = *f.sweep;
  if (!f.coords.empty()) {
    cfg.sampler.coords.clear();
    std::stringstream in(f.coords);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      if (!tok.empty()) cfg.sampler.coords.push_back(tok);
    }
  }
}

std::string beta_text(double beta) { return std::isfinite(beta) ? format_double(beta) : "inf"; }

nlohmann::json manifest(const Context& c, const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["tool"] = "kmsq";
  m["version"] = KMSQ_VERSION;
  m["command"] = c.command;
  m["config"] = c.flags.config;
  m["outputs"] = outputs;
  m["model_hash"] = c.model ? c.model->hash : "";
  m["beta"] = c.model ? beta_text(c.model->ctx.beta()) : "";
  if (c.command == "sample") {
    m["seed"] = c.config.sampler.seed;
    m["modes"] = c.config.sampler.modes;
    m["samples"] = c.config.sampler.samples;
    m["grid"] = c.config.sampler.grid;
  } else {
    m["seed"] = c.config.checks.seed;
  }
  nlohmann::json tol = nlohmann::json::object();
  for (const auto& [k, v] : c.config.checks.tolerances.values()) tol[k] = v;
  m["tolerances"] = tol;
  return m;
}

std::string manifest_digest(const nlohmann::json& m) { return sha256_hex(dump_json(m, 0)); }

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError(fmt::format("cannot write '{}'", path));
  f << text;
  if (!f) throw UsageError(fmt::format("failed writing '{}'", path));
}

nlohmann::json model_summary(const BuiltModel& m) {
  const GeneratorModel& g = m.ctx.model();
  nlohmann::json j;
  j["name"] = m.name;
  j["variant"] = m.variant;
  j["model_hash"] = m.hash;
  j["beta"] = beta_text(m.ctx.beta());
  j["ground_state"] = m.ctx.is_ground_state();
  j["b_operator"] = m.ctx.b_operator() == BOperator::Kms ? "kms" : "corrupted";
  j["index_weight"] = std::string(to_string(m.weight));
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : m.parameters) params[k] = v;
  j["parameters"] = params;
  j["kind"] = g.kind() == ModelKind::Matrix ? "matrix" : "quadrature";
  j["spectral_size"] = g.spectral_size();
  j["lambda_min"] = g.spectrum().minCoeff();
  j["lambda_max"] = g.spectrum().maxCoeff();
  j["B_max"] = m.ctx.b_values().maxCoeff();
  j["B_min"] = m.ctx.b_values().minCoeff();
  if (m.variant == "rindler") {
    j["beta_default"] = 2.0 * std::numbers::pi;
    j["beta_is_default"] = m.ctx.beta() == 2.0 * std::numbers::pi;
  }
  if (m.ctx.condensate() > 0.0) j["condensate"] = m.ctx.condensate();
  if (g.kind() == ModelKind::Matrix && g.spectral_size() <= 64) {
    j["spectrum"] = std::vector<double>(g.spectrum().begin(), g.spectrum().end());
  }
  return j;
}

// ---------------------------------------------------------------------------

int cmd_verify(Context& c, std::ostream& out, std::ostream& err) {
  const VerificationReport report = run_suite(*c.model, c.config.checks);
  const std::vector<std::string> outputs = c.flags.out.empty() ? std::vector<std::string>{"-"} : std::vector{c.flags.out};
  nlohmann::json man = manifest(c, outputs);
  const std::string digest = manifest_digest(man);
  nlohmann::json doc;
  doc["manifest"] = man;
  doc["manifest_digest"] = digest;
  doc["model"] = model_summary(*c.model);
  doc["report"] = to_json(report);
  const std::string text = dump_json(doc);
  std::ostream& summary = c.flags.out.empty() ? err : out;
  for (const auto& r : report.checks) {
    summary << fmt::format("{:<5} {:<18} residual={} tolerance={}{}\n",
                           r.skipped ? "SKIP" : (r.pass ? "PASS" : "FAIL"), r.check_name, format_double(r.residual),
                           format_double(r.tolerance), r.note.empty() || r.pass ? "" : "  (" + r.note + ")");
  }
  if (c.flags.out.empty()) {
    out << text;
  } else {
    write_file(c.flags.out, text);
  }
  summary << (report.all_pass() ? "verify: all checks passed\n" : "verify: at least one check failed\n");
  return report.all_pass() ? kPass : kCheckFailed;
}

struct Letter {
  std::string spec;
  double s = 0.0;
};

std::vector<Letter> parse_word(const std::string& text) {
  std::vector<Letter> out;
  std::stringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ';')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    const auto at = tok.rfind('@');
    if (at == std::string::npos) throw UsageError(fmt::format("word letter '{}' is not of the form VECTOR@TIME", tok));
    out.push_back({tok.substr(0, at), parse_real(tok.substr(at + 1), "word time")});
  }
  if (out.empty()) throw UsageError("green needs a non-empty word (--word or [green] word)");
  return out;
}

int cmd_green(Context& c, std::ostream& out, std::ostream& err) {
  const BuiltModel& m = *c.model;
  const auto letters = parse_word(c.config.green.word);
  std::vector<TestVector> vecs;
  bool all_real = true;
  for (const auto& l : letters) {
    vecs.push_back(resolve_vector(m, c.config, l.spec));
    all_real = all_real && vecs.back().is_real();
  }
  const bool real_time = c.config.green.kind == "real";
  if (real_time && letters.size() != 2) throw UsageError("real-time Green functions take exactly two letters");

  const std::size_t n = letters.size();
  std::vector<std::vector<double>> rows;
  std::vector<double> base;
  for (const auto& l : letters) base.push_back(l.s);
  const std::size_t sweep = c.config.green.sweep;
  if (sweep == 0) {
    rows.push_back(base);
  } else {
    const double lo = n >= 2 ? base[n - 2] : 0.0;
    const double beta = m.ctx.beta();
    const double hi = c.config.green.sweep_to.value_or(std::isfinite(beta) ? lo + beta : lo + 4.0);
    for (std::size_t i = 0; i < sweep; ++i) {
      auto t = base;
      t[n - 1] = sweep == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(sweep - 1);
      rows.push_back(t);
    }
  }

  const CovarianceSpec spec(m.ctx);
  std::string csv;
  for (std::size_t k = 0; k < n; ++k) csv += fmt::format("s_{},", k + 1);
  csv += "re,im,charfn_abs_diff,error\n";
  double worst = 0.0;
  std::size_t errors = 0;
  for (const auto& t : rows) {
    std::string line;
    for (double x : t) line += format_double(x) + ",";
    try {
      Complex value;
      std::string diff;
      if (real_time) {
        value = green2_real(m.ctx, vecs[0], vecs[1], t[1] - t[0]);
      } else {
        EuclideanWord w;
        for (std::size_t k = 0; k < n; ++k) w.push_back({vecs[k], t[k]});
        value = multi_green_euclid(m.ctx, w);
        if (all_real) {
          const double d = std::abs(char_functional(spec, w) - value);
          worst = std::max(worst, d);
          diff = format_double(d);
        }
      }
      line += format_double(value.real()) + "," + format_double(value.imag()) + "," + diff + ",";
    } catch (const Error& e) {
      ++errors;
      std::string msg = e.what();
      for (char& ch : msg) {
        if (ch == ',' || ch == '\n') ch = ';';
      }
      line += ",,," + msg;
    }
    csv += line + "\n";
  }
  const double tol = c.config.checks.tolerances.get("central_identity");
  const std::vector<std::string> outputs = c.flags.out.empty() ? std::vector<std::string>{"-"} : std::vector{c.flags.out};
  const std::string digest = manifest_digest(manifest(c, outputs));
  csv += fmt::format("# max_charfn_abs_diff {}\n", format_double(worst));
  csv += fmt::format("# manifest {}\n", digest);
  if (c.flags.out.empty()) {
    out << csv;
  } else {
    write_file(c.flags.out, csv);
    out << fmt::format("green: {} rows, {} row errors, max char-functional difference {}\n", rows.size(), errors,
                       format_double(worst));
  }
  if (worst > tol) {
    err << fmt::format("green: char-functional cross-check {} exceeds {}\n", format_double(worst), format_double(tol));
    return kCheckFailed;
  }
  return kPass;
}

int cmd_sample(Context& c, std::ostream& out, std::ostream& err) {
  const BuiltModel& m = *c.model;
  const GeneratorModel& g = m.ctx.model();
  if (g.kind() != ModelKind::Matrix) {
    throw Error(ErrorCode::QuadratureModelUnsupported, "path sampling needs a matrix model");
  }
  std::vector<std::string> specs = c.config.sampler.coords;
  if (specs.empty()) {
    specs.push_back("site:0");
    if (g.dim() > 1) specs.push_back("site:1");
  }
  std::vector<TestVector> coords;
  for (const auto& s : specs) coords.push_back(resolve_vector(m, c.config, s));

  SamplerOptions opt;
  opt.grid = c.config.sampler.grid;
  opt.n_samples = c.config.sampler.samples;
  opt.n_modes = c.config.sampler.modes;
  opt.seed = c.config.sampler.seed;
  opt.threads = c.config.sampler.threads;
  const CovarianceSpec spec(m.ctx);
  const PathEnsemble ens = sample_paths(spec, coords, opt);

  const std::string path = c.flags.out.empty() ? "paths.csv" : c.flags.out;
  const std::string sidecar = path + ".json";
  nlohmann::json man = manifest(c, {path, sidecar});
  const std::string digest = manifest_digest(man);

  std::ostringstream csv;
  write_paths_csv(csv, ens);
  csv << "# manifest " << digest << "\n";
  write_file(path, csv.str());

  nlohmann::json meta;
  meta["manifest"] = man;
  meta["manifest_digest"] = digest;
  meta["seed"] = opt.seed;
  meta["n_modes"] = opt.n_modes;
  meta["grid"] = opt.grid;
  meta["n_samples"] = opt.n_samples;
  meta["beta"] = beta_text(m.ctx.beta());
  meta["model_hash"] = m.hash;
  meta["coords"] = specs;
  meta["simd"] = std::string(simd::to_string(simd::active_isa()));
  nlohmann::json table = nlohmann::json::array();
  bool ok = true;
  if (ens.n_samples > 1) {
    const std::size_t lags = std::min<std::size_t>(opt.grid, 8);
    for (std::size_t j = 0; j < coords.size(); ++j) {
      for (std::size_t k = j; k < coords.size(); ++k) {
        const double bound = truncation_bound(spec, coords[j], coords[k], opt.n_modes);
        for (std::size_t lag = 0; lag < lags; ++lag) {
          const double d = ens.time(lag);
          const Estimate e = empirical_covariance(ens, j, k, lag);
          const double exact = cov_pair(spec, coords[j], coords[k], 0.0, d);
          const double target = truncated_cov_pair(spec, coords[j], coords[k], d, opt.n_modes);
          const double z = e.standard_error > 0.0 ? (e.value - target) / e.standard_error : 0.0;
          const bool within = std::abs(z) <= 4.0;
          ok = ok && within;
          table.push_back({{"coord_j", j},
                           {"coord_k", k},
                           {"lag", lag},
                           {"d", d},
                           {"empirical", e.value},
                           {"standard_error", e.standard_error},
                           {"exact", exact},
                           {"exact_truncated", target},
                           {"truncation_bound", bound},
                           {"z", z},
                           {"within_4se", within}});
        }
      }
    }
  }
  meta["covariance_table"] = table;
  nlohmann::json trunc = nlohmann::json::array();
  for (std::size_t j = 0; j < coords.size(); ++j) {
    trunc.push_back({{"coord", j},
                     {"bound", truncation_bound(spec, coords[j], coords[j], opt.n_modes)},
                     {"bias_lag0", cov_pair(spec, coords[j], coords[j], 0.0, 0.0) -
                                       truncated_cov_pair(spec, coords[j], coords[j], 0.0, opt.n_modes)}});
  }
  meta["truncation"] = trunc;
  meta["all_within_4se"] = ok;
  write_file(sidecar, dump_json(meta));
  out << fmt::format("sample: {} samples x {} grid points x {} coords -> {} (+ {})\n", ens.n_samples, ens.grid,
                     coords.size(), path, sidecar);
  if (!ok) {
    err << "sample: an empirical covariance is more than 4 standard errors from its target\n";
    return kCheckFailed;
  }
  return kPass;
}

int cmd_report(Context& c, std::ostream& out, std::ostream&) {
  const BuiltModel& m = *c.model;
  const GeneratorModel& g = m.ctx.model();
  std::vector<std::string> outputs;
  std::string csv_path;
  if (!c.flags.out.empty()) {
    csv_path = c.flags.out + ".cov.csv";
    outputs = {c.flags.out, csv_path};
  } else {
    outputs = {"-"};
  }
  nlohmann::json man = manifest(c, outputs);
  const std::string digest = manifest_digest(man);
  nlohmann::json doc;
  doc["manifest"] = man;
  doc["manifest_digest"] = digest;
  doc["model"] = model_summary(m);

  if (!csv_path.empty()) {
    std::string csv = "d,i,j,cov\n";
    const CovarianceSpec spec(m.ctx);
    const double beta = m.ctx.beta();
    const double span = std::isfinite(beta) ? beta : 4.0;
    const int points = 33;
    if (g.kind() == ModelKind::Matrix && g.dim() <= 64) {
      for (int p = 0; p < points; ++p) {
        const double d = span * p / (points - 1);
        const Matrix r = 0.5 * covariance(spec, d);
        for (Index i = 0; i < r.rows(); ++i) {
          for (Index j = 0; j < r.cols(); ++j) {
            csv += fmt::format("{},{},{},{}\n", format_double(d), i, j, format_double(r(i, j)));
          }
        }
      }
    } else {
      // Quadrature models: covariance of the first two Gaussian probes.
      std::vector<TestVector> probes;
      if (g.kind() == ModelKind::Quadrature) {
        probes = {apply_index_weight(g, m.weight, gaussian_profile(g, 1.0, 1.0)),
                  apply_index_weight(g, m.weight, gaussian_profile(g, 1.0, 0.5))};
      } else {
        probes = {apply_index_weight(g, m.weight, g.basis_vector(0)), apply_index_weight(g, m.weight, g.basis_vector(1))};
      }
      for (int p = 0; p < points; ++p) {
        const double d = span * p / (points - 1);
        for (std::size_t i = 0; i < probes.size(); ++i) {
          for (std::size_t j = 0; j < probes.size(); ++j) {
            csv += fmt::format("{},{},{},{}\n", format_double(d), i, j,
                               format_double(cov_pair(spec, probes[i], probes[j], 0.0, d)));
          }
        }
      }
    }
    csv += "# manifest " + digest + "\n";
    write_file(csv_path, csv);
  }
  if (c.flags.out.empty()) {
    out << dump_json(doc);
  } else {
    write_file(c.flags.out, dump_json(doc));
    out << fmt::format("report: {} (+ {})\n", c.flags.out, csv_path);
  }
  return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kmsq: quasi-free KMS states, Euclidean Green functions and thermal processes"};
  app.set_version_flag("--version", std::string(KMSQ_VERSION));
  app.require_subcommand(1);
  Context c;
  auto* verify = app.add_subcommand("verify", "run the invariant suite on the configured model");
  auto* green = app.add_subcommand("green", "evaluate Green functions of a word");
  auto* sample = app.add_subcommand("sample", "sample paths of the thermal process");
  auto* report = app.add_subcommand("report", "model summary and exact covariance table");
  for (auto* s : {verify, green, sample, report}) add_common(s, c.flags);
  green->add_option("--word", c.flags.word, "word, e.g. \"f@0;g@0.25\" with vector specs or [vectors] names");
  green->add_option("--sweep", c.flags.sweep, "vary the last letter's time over N points");
  sample->add_option("--coords", c.flags.coords, "comma-separated vector specs to record");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForVersion&) {
    out << KMSQ_VERSION << "\n";
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "kmsq: " << e.what() << "\n";
    return kUsage;
  }

  for (auto* s : {verify, green, sample, report}) {
    if (s->parsed()) c.command = s->get_name();
  }
  try {
    c.config = load_config(c.flags.config);
    apply_flags(c);
    c.model = build_model(c.config);
  } catch (const Error& e) {
    err << "kmsq: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "kmsq: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (c.command == "verify") return cmd_verify(c, out, err);
    if (c.command == "green") return cmd_green(c, out, err);
    if (c.command == "sample") return cmd_sample(c, out, err);
    return cmd_report(c, out, err);
  } catch (const UsageError& e) {
    err << "kmsq: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "kmsq: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace kmsq::cli
