// Command-line front end: capacity bounds, profile domination, equivalence
// simulations, policy lower bounds, and randomized precoding checks.
//
// Exit codes: 0 success, 2 configuration error, 3 negative decision
// (not dominated / violations found), 4 solver non-convergence.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "molcap/harness.hpp"
#include "molcap/serialization.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace molcap;

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr int kSchemaVersion = 1;

struct Output {
  fs::path dir;
  bool write_json = true;
  bool write_csv = true;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void emit(const Output& out, const std::string& stem, const json* doc,
          const std::string* csv) {
  if (out.write_json && doc) {
    const fs::path p = out.dir / (stem + ".json");
    write_file_atomic(p, doc->dump(2) + "\n");
    std::cout << "wrote " << p.string() << "\n";
  }
  if (out.write_csv && csv) {
    const fs::path p = out.dir / (stem + ".csv");
    write_file_atomic(p, *csv);
    std::cout << "wrote " << p.string() << "\n";
  }
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
      j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("config must declare schema_version = 1");
  return j;
}

double get_number(const json& j, const char* key, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("missing numeric field '") + key + "'");
  }
  if (!j.at(key).is_number()) throw ConfigError(std::string("field '") + key + "' must be numeric");
  return j.at(key).get<double>();
}

std::int64_t get_int(const json& j, const char* key, std::optional<std::int64_t> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("missing integer field '") + key + "'");
  }
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string("field '") + key + "' must be an integer");
  return j.at(key).get<std::int64_t>();
}

SolverOptions solver_options(const json& cfg) {
  SolverOptions opts;
  if (!cfg.contains("solver")) return opts;
  const json& s = cfg.at("solver");
  require_keys(s, {"grid_size", "tol", "max_iter", "x_max", "tail_mass"}, "solver");
  opts.grid_size = static_cast<int>(get_int(s, "grid_size", opts.grid_size));
  opts.tol = get_number(s, "tol", opts.tol);
  opts.max_iter = get_int(s, "max_iter", opts.max_iter);
  opts.x_max = get_number(s, "x_max", opts.x_max);
  opts.tail_mass = get_number(s, "tail_mass", opts.tail_mass);
  return opts;
}

struct TimedReport {
  BoundReport report;
  double runtime_ms = 0;
};

std::string bounds_csv(const std::vector<TimedReport>& rows) {
  std::ostringstream csv;
  csv << "c_or_delta,bound_kind,value_bits,value_nats,iterations,gap,runtime_ms\n";
  for (const auto& row : rows) {
    const BoundReport& r = row.report;
    csv << fmt(r.constraint_c) << ',' << to_string(r.kind) << ',' << fmt(r.value_nats / kLn2)
        << ',' << fmt(r.value_nats) << ',' << r.iterations << ',' << fmt(r.final_gap) << ','
        << fmt(row.runtime_ms) << "\n";
  }
  return csv.str();
}

template <typename Fn>
TimedReport timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  TimedReport out{fn(), 0};
  out.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

int cmd_bounds(const json& cfg, const Output& out) {
  require_keys(cfg, {"schema_version", "production", "p0", "bounds", "c_sweep", "solver"},
               "bounds config");
  const ProductionFunction f = production_from_json(cfg.at("production"));
  const double p0 = get_number(cfg, "p0");
  if (!(p0 > 0)) throw ConfigError("p0 must be > 0");
  const SolverOptions opts = solver_options(cfg);

  std::vector<std::string> which = {"thm1"};
  if (cfg.contains("bounds")) {
    which.clear();
    for (const auto& b : cfg.at("bounds")) {
      if (!b.is_string()) throw ConfigError("'bounds' must be a list of strings");
      which.push_back(b.get<std::string>());
    }
  }

  std::vector<TimedReport> rows;
  for (const std::string& b : which) {
    if (b == "thm1") {
      const double phi = compute_phi(f);
      const double du = delta_u(f, phi);
      if (!std::isfinite(du)) throw ConfigError("per-slot production is unbounded");
      rows.push_back(timed([&] {
        BoundReport r = ba_peak(du, p0, opts);
        r.kind = BoundKind::thm1_lower;
        return r;
      }));
      rows.push_back(timed([&] {
        BoundReport r = ba_avg(du, p0, opts);
        r.kind = BoundKind::thm1_upper;
        return r;
      }));
    } else if (b == "thm2") {
      rows.push_back(timed([&] {
        try {
          return unbounded_lower_bound(f, p0, opts);
        } catch (const PreconditionError& e) {
          throw ConfigError(e.what());
        }
      }));
    } else {
      throw ConfigError("unknown bound request '" + b + "' (use thm1 or thm2)");
    }
  }
  if (cfg.contains("c_sweep")) {
    for (const auto& cv : cfg.at("c_sweep")) {
      if (!cv.is_number()) throw ConfigError("'c_sweep' must hold numbers");
      const double c = cv.get<double>();
      rows.push_back(timed([&] { return ba_peak(c, p0, opts); }));
      rows.push_back(timed([&] { return ba_avg(c, p0, opts); }));
    }
  }

  json doc{{"schema_version", kSchemaVersion},
           {"command", "bounds"},
           {"config_hash", hex64(config_hash(cfg))},
           {"reports", json::array()}};
  for (const auto& row : rows) doc["reports"].push_back(to_json(row.report));
  const std::string csv = bounds_csv(rows);
  emit(out, "bounds", &doc, &csv);
  return 0;
}

int cmd_dominate(const json& cfg, const Output& out) {
  require_keys(cfg, {"schema_version", "p", "p_tilde", "tol_q"}, "dominate config");
  const ChannelProfile p = profile_from_json(cfg.at("p"));
  const ChannelProfile pt = profile_from_json(cfg.at("p_tilde"));
  const double tol_q = get_number(cfg, "tol_q", kDominationTol);
  std::optional<DominationCertificate> cert;
  try {
    cert = solve_domination(p, pt, tol_q);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  json doc{{"schema_version", kSchemaVersion},
           {"command", "dominate"},
           {"config_hash", hex64(config_hash(cfg))},
           {"dominated", static_cast<bool>(cert)}};
  std::ostringstream csv;
  csv << "dominated,mass,residual\n";
  if (cert) {
    doc["certificate"] = to_json(*cert);
    csv << "true," << fmt(cert->mass) << ',' << fmt(cert->residual) << "\n";
  } else {
    csv << "false,,\n";
  }
  const std::string csv_str = csv.str();
  emit(out, "dominate", &doc, &csv_str);
  return cert ? 0 : 3;
}

int cmd_simulate(const json& cfg, const Output& out) {
  require_keys(cfg,
               {"schema_version", "seed", "mode", "production", "p", "p_tilde", "codebook",
                "trials", "threads"},
               "simulate config");
  const std::uint64_t seed = static_cast<std::uint64_t>(get_int(cfg, "seed"));
  if (!cfg.contains("mode") || !cfg.at("mode").is_string())
    throw ConfigError("simulate: missing 'mode'");
  const std::string mode = cfg.at("mode").get<std::string>();
  const ProductionFunction f = production_from_json(cfg.at("production"));
  const ChannelProfile p = profile_from_json(cfg.at("p"));
  const std::int64_t trials = get_int(cfg, "trials");
  if (trials < 1) throw ConfigError("simulate: trials must be >= 1");
  const int threads = static_cast<int>(get_int(cfg, "threads", 1));
  if (threads < 1) throw ConfigError("simulate: threads must be >= 1");

  if (!cfg.contains("codebook")) throw ConfigError("simulate: missing 'codebook'");
  const json& cb = cfg.at("codebook");
  require_keys(cb, {"n", "M", "level"}, "codebook");
  const int n = static_cast<int>(get_int(cb, "n"));
  const int m_messages = static_cast<int>(get_int(cb, "M"));
  const double level = get_number(cb, "level");

  // Stream layout: substream 0 builds the codebook, substream 1 feeds trials.
  const Rng root(seed);
  Rng book_rng = root.stream(0);
  const Rng trial_rng = root.stream(1);

  Codebook book;
  try {
    book = build_onoff_codebook(f, n, m_messages, level, book_rng);
  } catch (const FeasibilityError& e) {
    throw ConfigError(e.what());
  }

  json doc{{"schema_version", kSchemaVersion},
           {"command", "simulate"},
           {"config_hash", hex64(config_hash(cfg))},
           {"seed", seed},
           {"mode", mode},
           {"codebook", json{{"n", n}, {"M", m_messages}, {"level", level},
                             {"warmup_slots", book.warmup_slots},
                             {"rate_nats", book.rate_nats},
                             {"rate_with_warmup", book.rate_with_warmup}}},
           {"trials", trials}};
  std::ostringstream csv;
  csv << "mode,trials,n,M,level,warmup,error_rate_ref,error_rate_adapted,z,p_value_z,"
         "chi2,df,p_value_chi2,verdict,runtime_ms\n";
  const auto t0 = std::chrono::steady_clock::now();

  if (mode == "error_rate") {
    const ErrorRateResult r = error_rate(f, p, book, trials, trial_rng, threads);
    doc["error_rate"] = r.rate;
    doc["errors"] = r.errors;
    doc["wilson95"] = json::array({r.wilson.lo, r.wilson.hi});
    doc["outcome_digest"] = hex64(r.outcome_digest);
    if (!r.outcomes.empty()) doc["outcomes"] = r.outcomes;
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    csv << mode << ',' << trials << ',' << n << ',' << m_messages << ',' << fmt(level) << ','
        << book.warmup_slots << ',' << fmt(r.rate) << ",,,,,,,," << fmt(ms) << "\n";
  } else if (mode == "precode" || mode == "thinning") {
    if (!cfg.contains("p_tilde")) throw ConfigError("simulate: mode '" + mode + "' needs p_tilde");
    const ChannelProfile pt = profile_from_json(cfg.at("p_tilde"));
    const EquivalenceMode em =
        mode == "precode" ? EquivalenceMode::precode : EquivalenceMode::thinning;
    EquivalenceReport r;
    try {
      r = precoded_equivalence_test(f, p, pt, book, trials, trial_rng, em, threads);
    } catch (const PreconditionError& e) {
      throw ConfigError(e.what());
    }
    doc["error_rate_ref"] = r.error_rate_ref;
    doc["error_rate_adapted"] = r.error_rate_adapted;
    doc["z"] = r.z.z;
    doc["p_value_z"] = r.z.p_value;
    doc["chi2"] = r.chi2_pooled;
    doc["df"] = r.df_pooled;
    doc["p_value_chi2"] = r.p_value_chi2;
    doc["verdict"] = r.pass ? "pass" : "fail";
    doc["outcome_digest"] = hex64(r.outcome_digest);
    json slots = json::array();
    for (const auto& c : r.per_slot)
      slots.push_back(json{{"chi2", c.stat}, {"df", c.df}, {"p_value", c.p_value}});
    doc["per_slot"] = slots;
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    csv << mode << ',' << trials << ',' << n << ',' << m_messages << ',' << fmt(level) << ','
        << book.warmup_slots << ',' << fmt(r.error_rate_ref) << ',' << fmt(r.error_rate_adapted)
        << ',' << fmt(r.z.z) << ',' << fmt(r.z.p_value) << ',' << fmt(r.chi2_pooled) << ','
        << r.df_pooled << ',' << fmt(r.p_value_chi2) << ',' << (r.pass ? "pass" : "fail") << ','
        << fmt(ms) << "\n";
  } else {
    throw ConfigError("simulate: unknown mode '" + mode +
                      "' (use error_rate, precode, or thinning)");
  }

  const std::string csv_str = csv.str();
  emit(out, "simulate", &doc, &csv_str);
  return 0;
}

int cmd_thm3(const json& cfg, const Output& out) {
  require_keys(cfg, {"schema_version", "production", "p0", "policy", "tol_tv", "max_iter"},
               "thm3 config");
  const ProductionFunction f = production_from_json(cfg.at("production"));
  const double p0 = get_number(cfg, "p0");
  if (!(p0 > 0)) throw ConfigError("p0 must be > 0");
  const double tol_tv = get_number(cfg, "tol_tv", 1e-10);
  const long max_iter = get_int(cfg, "max_iter", 1000000);

  if (!cfg.contains("policy")) throw ConfigError("thm3: missing 'policy'");
  const json& pj = cfg.at("policy");
  require_keys(pj, {"kind", "state_grid_size", "release_prob", "fraction_grid_size"}, "policy");
  if (!pj.contains("kind") || !pj.at("kind").is_string())
    throw ConfigError("policy: missing 'kind'");
  const std::string kind = pj.at("kind").get<std::string>();
  const int grid_size = static_cast<int>(get_int(pj, "state_grid_size", 33));

  std::vector<double> grid;
  try {
    grid = make_state_grid(f, grid_size);
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
  ReleasePolicy policy;
  if (kind == "full_release") {
    policy = ReleasePolicy::full_release(std::move(grid));
  } else if (kind == "on_off") {
    policy = ReleasePolicy::on_off(std::move(grid), get_number(pj, "release_prob", 0.5));
  } else if (kind == "uniform") {
    const int fcount = static_cast<int>(get_int(pj, "fraction_grid_size", 11));
    if (fcount < 2) throw ConfigError("policy: fraction_grid_size must be >= 2");
    std::vector<double> fr(static_cast<std::size_t>(fcount));
    for (int i = 0; i < fcount; ++i)
      fr[static_cast<std::size_t>(i)] = static_cast<double>(i) / (fcount - 1);
    policy = ReleasePolicy::uniform(std::move(grid), std::move(fr));
  } else {
    throw ConfigError("policy: unknown kind '" + kind +
                      "' (use full_release, on_off, or uniform)");
  }

  const TimedReport row = timed([&] {
    try {
      return policy_lower_bound(f, policy, p0, tol_tv, max_iter);
    } catch (const PreconditionError& e) {
      throw ConfigError(e.what());
    }
  });

  json doc{{"schema_version", kSchemaVersion},
           {"command", "thm3"},
           {"config_hash", hex64(config_hash(cfg))},
           {"report", to_json(row.report)}};
  const std::string csv = bounds_csv({row});
  emit(out, "thm3", &doc, &csv);
  return 0;
}

int cmd_lemma_check(const json& cfg, const Output& out) {
  require_keys(cfg, {"schema_version", "seed", "production", "trials", "xtilde_len", "q_len_max"},
               "lemma-check config");
  const std::uint64_t seed = static_cast<std::uint64_t>(get_int(cfg, "seed"));
  const ProductionFunction f = production_from_json(cfg.at("production"));
  const std::int64_t trials = get_int(cfg, "trials", 1000);
  const std::size_t xt_len = static_cast<std::size_t>(get_int(cfg, "xtilde_len", 50));
  const std::size_t q_len_max = static_cast<std::size_t>(get_int(cfg, "q_len_max", 8));

  const Rng rng(seed);
  const LemmaSweepResult r = lemma_random_sweep(f, trials, xt_len, q_len_max, rng);
  const bool clean = r.feasibility_violations == 0 && r.strengthened_violations == 0;

  json doc{{"schema_version", kSchemaVersion},
           {"command", "lemma-check"},
           {"config_hash", hex64(config_hash(cfg))},
           {"seed", seed},
           {"trials", r.trials},
           {"concave", r.concave},
           {"feasibility_violations", r.feasibility_violations},
           {"strengthened_violations", r.strengthened_violations},
           {"verdict", clean ? "pass" : "fail"}};
  if (r.first_violation_trial) doc["first_violation_trial"] = *r.first_violation_trial;
  std::ostringstream csv;
  csv << "trials,violations,strengthened_violations,verdict\n"
      << r.trials << ',' << r.feasibility_violations << ',' << r.strengthened_violations << ','
      << (clean ? "pass" : "fail") << "\n";
  const std::string csv_str = csv.str();
  emit(out, "lemma", &doc, &csv_str);
  return clean ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity bounds and channel-adaptation experiments for "
               "production-constrained molecular Poisson channels"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", format = "both";
  std::optional<std::uint64_t> seed_override;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--format", format, "csv | json | both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
  };

  CLI::App* bounds = app.add_subcommand("bounds", "capacity bound reports");
  CLI::App* dominate = app.add_subcommand("dominate", "profile domination certificate");
  CLI::App* simulate = app.add_subcommand("simulate", "codebook and equivalence experiments");
  CLI::App* thm3 = app.add_subcommand("thm3", "stationary-policy lower bound");
  CLI::App* lemma = app.add_subcommand("lemma-check", "randomized precoding feasibility sweep");
  for (CLI::App* sub : {bounds, dominate, simulate, thm3, lemma}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(config_path);
    if (seed_override) {
      if (cfg.contains("seed")) cfg["seed"] = *seed_override;
      else throw ConfigError("--seed given but this command's config has no seed field");
    }
    Output out;
    out.dir = out_dir;
    out.write_json = format != "csv";
    out.write_csv = format != "json";

    if (*bounds) return cmd_bounds(cfg, out);
    if (*dominate) return cmd_dominate(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*thm3) return cmd_thm3(cfg, out);
    if (*lemma) return cmd_lemma_check(cfg, out);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << " (last gap " << e.last_gap() << ")\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
