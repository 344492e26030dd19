// Apache License, Version 2.0, refer to LICENSE.txt
//
// Command-line front end: prior/posterior evenness estimates, species
// richness prediction, EPPF likelihood fitting, Monte Carlo simulation and
// the oracle cross-check suite, over CSV abundance data.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gibbsdiv/core.hpp"
#include "gibbsdiv/eppf.hpp"
#include "gibbsdiv/evenness.hpp"
#include "gibbsdiv/sim.hpp"

using nlohmann::json;
using namespace gibbsdiv;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;

struct ModelFlags {
  std::optional<double> alpha;
  std::optional<double> theta;
  std::optional<std::int64_t> xi;
  std::string variant;
};

struct McFlags {
  std::uint64_t draws = 100'000;
  double tol = 1e-8;
  std::optional<std::uint64_t> seed;
  std::uint32_t max_sticks = 1000;
  unsigned workers = 1;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// CSV rows of (species_label, count); labels unique; counts >= 1. Errors
// carry the offending line number.
SampleSummary ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::string line;
  int lineno = 0;

  if (!std::getline(in, line)) throw std::runtime_error(path + ":1: missing header");
  ++lineno;
  if (trim(line) != "species,count")
    throw std::runtime_error(path + ":1: header must be 'species,count'");

  std::set<std::string> seen;
  std::vector<std::int64_t> counts;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    std::ostringstream where;
    where << path << ":" << lineno << ": ";
    if (comma == std::string::npos)
      throw std::runtime_error(where.str() + "malformed row, expected 'label,count'");
    if (row.find(',', comma + 1) != std::string::npos)
      throw std::runtime_error(where.str() + "malformed row, expected exactly one comma");
    const std::string label = trim(row.substr(0, comma));
    const std::string value = trim(row.substr(comma + 1));
    if (label.empty()) throw std::runtime_error(where.str() + "empty species label");
    if (!seen.insert(label).second)
      throw std::runtime_error(where.str() + "duplicate species label '" + label + "'");
    std::int64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoll(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw std::runtime_error(where.str() + "count '" + value + "' is not an integer");
    }
    if (count < 1) throw std::runtime_error(where.str() + "count must be >= 1, got " + value);
    counts.push_back(count);
  }
  return summarize_sample(counts);
}

ModelSpec build_model(const ModelFlags& flags) {
  RawModel raw;
  raw.alpha = flags.alpha;
  raw.theta = flags.theta;
  raw.xi = flags.xi;
  if (!flags.variant.empty()) {
    const auto v = variant_from_name(flags.variant);
    if (!v) throw std::invalid_argument("unknown variant '" + flags.variant + "'");
    raw.variant = v;
  }
  return validate_model(raw);
}

std::uint64_t resolve_seed(const McFlags& mc) {
  if (mc.seed) return *mc.seed;
  if (const char* env = std::getenv("DIVERSITY_SEED")) {
    try {
      std::size_t used = 0;
      const std::string text(env);
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("DIVERSITY_SEED is not an unsigned integer");
    }
  }
  return 42;
}

McConfig build_mc_config(const McFlags& mc) {
  McConfig cfg;
  cfg.draws = mc.draws;
  cfg.truncation_tol = mc.tol;
  cfg.seed = resolve_seed(mc);
  cfg.max_sticks = mc.max_sticks;
  validate(cfg);
  return cfg;
}

json model_json(const ModelSpec& model) {
  json j{{"variant", variant_name(model.variant)},
         {"alpha", model.alpha},
         {"theta", model.theta}};
  if (model.xi) j["xi"] = *model.xi;
  return j;
}

json data_json(const SampleSummary& s) {
  return json{{"n", s.n}, {"k", s.k}, {"multiplicities", s.multiplicities}};
}

json estimate_json(const EvennessEstimate& e) {
  json j{{"mean", e.mean}, {"variance", e.variance}, {"method", method_name(e.method)}};
  if (e.std_error) j["std_error"] = *e.std_error;
  if (e.draws) j["draws"] = *e.draws;
  return j;
}

json mc_estimate_json(const McEstimate& e) {
  return json{{"value", e.value},
              {"std_error", e.std_error},
              {"draws", e.draws},
              {"residual_bound", e.residual_bound}};
}

json config_json(const McConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"draws", cfg.draws},
              {"truncation_tol", cfg.truncation_tol},
              {"max_sticks", cfg.max_sticks}};
}

void print_table(const json& j, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      print_table(value, name);
    } else {
      std::cout << name << ": " << value.dump() << "\n";
    }
  }
}

void emit(json report, bool as_json, std::chrono::steady_clock::time_point start) {
  const auto elapsed = std::chrono::steady_clock::now() - start;
  report["timing_ms"] =
      std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
  if (as_json) {
    std::cout << report.dump(2) << "\n";
  } else {
    print_table(report, "");
  }
}

json base_report(const std::string& command, const ModelSpec& model) {
  return json{{"schema_version", kSchemaVersion},
              {"tool", "diversity"},
              {"version", kToolVersion},
              {"command", command},
              {"model", model_json(model)}};
}

// ---- validate subcommand: the oracle cross-check suite ----

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

double rel_gap(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) / scale;
}

std::string gap_detail(double gap, double tol) {
  std::ostringstream os;
  os << "max gap " << gap << " (tol " << tol << ")";
  return os.str();
}

SampleSummary default_summary(const ModelSpec& model) {
  std::vector<std::int64_t> counts{3, 2, 1};
  if (model.is_fisher() && *model.xi < 3) counts.resize(static_cast<std::size_t>(*model.xi));
  return summarize_sample(counts);
}

std::vector<Check> run_validation(const ModelSpec& model, const SampleSummary& data,
                                  const McConfig& cfg, unsigned workers) {
  std::vector<Check> checks;
  const PdWeights w(model);
  const SampleSummary s = data.empty() ? default_summary(model) : data;

  {  // V-recursion on a grid
    double worst = 0.0;
    for (std::int64_t n = 1; n <= 40; ++n)
      for (std::int64_t k = 1; k <= n; ++k) {
        const double v = std::exp(w.log_v(n, k));
        if (v == 0.0) continue;
        const double rec = (static_cast<double>(n) - static_cast<double>(k) * model.alpha) *
                               std::exp(w.log_v(n + 1, k)) +
                           std::exp(w.log_v(n + 1, k + 1));
        worst = std::max(worst, rel_gap(v, rec));
      }
    checks.push_back({"v-recursion", worst <= 1e-12, gap_detail(worst, 1e-12)});
  }

  {  // EPPF addition rule and symmetry on the working summary
    const double base = eppf(w, s);
    double total = 0.0;
    for (std::size_t j = 0; j < s.multiplicities.size(); ++j) {
      SampleSummary grown = s;
      ++grown.multiplicities[j];
      ++grown.n;
      total += eppf(w, grown);
    }
    SampleSummary appended = s;
    appended.multiplicities.push_back(1);
    ++appended.k;
    ++appended.n;
    total += eppf(w, appended);
    const double add_gap = rel_gap(base, total);

    SampleSummary rev = s;
    std::reverse(rev.multiplicities.begin(), rev.multiplicities.end());
    const double sym_gap = rel_gap(base, eppf(w, rev));
    checks.push_back({"eppf-addition", add_gap <= 1e-12, gap_detail(add_gap, 1e-12)});
    checks.push_back({"eppf-symmetry", sym_gap <= 1e-12, gap_detail(sym_gap, 1e-12)});
  }

  {  // predictive normalization
    const PredictiveProbs p = predictive_probs(w, s);
    double total = p.p_new;
    for (double q : p.p_old) total += q;
    const double gap = std::fabs(total - 1.0);
    checks.push_back({"predictive-normalization", gap <= 1e-12, gap_detail(gap, 1e-12)});
  }

  {  // richness DP: normalization at m = 100 and the exact one-step cell
    const RichnessDistribution d = richness_predictive(w, s, 100);
    double total = 0.0;
    for (double p : d.probs) total += p;
    const double gap = std::fabs(total - 1.0);
    checks.push_back({"richness-normalization", gap <= 1e-12, gap_detail(gap, 1e-12)});
    const RichnessDistribution one = richness_predictive(w, s, 1);
    const bool exact = one.probs[1] == w.prob_new(s.n, s.k);
    checks.push_back({"richness-one-step-exact", exact, exact ? "bit-exact" : "cell mismatch"});
  }

  {  // composition-enumeration moments against the closed forms
    const double s1 = prior_s2_moment(model, 1);
    const double g1 = std::fabs(1.0 - s1 - prior_evenness_mean(model));
    const double g2 =
        std::fabs(prior_s2_moment(model, 2) - s1 * s1 - prior_evenness_variance(model));
    const double worst = std::max(g1, g2);
    checks.push_back({"prior-moment-consistency", worst <= 1e-12, gap_detail(worst, 1e-12)});
  }

  {  // a single observation is uninformative
    const SampleSummary one = summarize_sample({1});
    const double gm = std::fabs(posterior_evenness_mean(model, one) - prior_evenness_mean(model));
    const double gv =
        std::fabs(posterior_evenness_variance(model, one) - prior_evenness_variance(model));
    const double worst = std::max(gm, gv);
    checks.push_back({"posterior-prior-n1", worst <= 1e-12, gap_detail(worst, 1e-12)});
  }

  {  // martingale tower identity on the working summary
    const PredictiveProbs p = predictive_probs(w, s);
    double mixed = 0.0;
    for (std::size_t j = 0; j < s.multiplicities.size(); ++j) {
      SampleSummary grown = s;
      ++grown.multiplicities[j];
      ++grown.n;
      mixed += p.p_old[j] * posterior_evenness_mean(model, grown);
    }
    if (p.p_new > 0.0) {  // the new-species branch vanishes at the Fisher cap
      SampleSummary appended = s;
      appended.multiplicities.push_back(1);
      ++appended.k;
      ++appended.n;
      mixed += p.p_new * posterior_evenness_mean(model, appended);
    }
    const double gap = std::fabs(mixed - posterior_evenness_mean(model, s));
    checks.push_back({"tower-identity", gap <= 1e-12, gap_detail(gap, 1e-12)});
  }

  if (model.is_fisher()) {  // conjugate Dirichlet agreement
    const MeanVariance exact = fisher_conjugate_posterior(model, s);
    const double gm = std::fabs(exact.mean - posterior_evenness_mean(model, s));
    const double gv = std::fabs(exact.variance - posterior_evenness_variance(model, s));
    const double worst = std::max(gm, gv);
    checks.push_back({"fisher-conjugate", worst <= 1e-10, gap_detail(worst, 1e-10)});
  }

  {  // Monte Carlo concordance with the closed forms, 4 standard errors
    const McMoments prior = mc_prior_evenness(model, cfg, workers);
    const double gm = std::fabs(prior.mean.value - prior_evenness_mean(model));
    const double gv = std::fabs(prior.variance.value - prior_evenness_variance(model));
    const bool ok = gm <= 4.0 * prior.mean.std_error && gv <= 4.0 * prior.variance.std_error;
    std::ostringstream os;
    os << "mean gap " << gm << " (4se " << 4.0 * prior.mean.std_error << "), variance gap " << gv
       << " (4se " << 4.0 * prior.variance.std_error << ")";
    checks.push_back({"mc-prior-concordance", ok, os.str()});
  }

  if (!data.empty()) {
    const McMoments post = mc_posterior_evenness(model, data, cfg, workers);
    const double gm = std::fabs(post.mean.value - posterior_evenness_mean(model, data));
    const double gv = std::fabs(post.variance.value - posterior_evenness_variance(model, data));
    const bool ok = gm <= 4.0 * post.mean.std_error && gv <= 4.0 * post.variance.std_error;
    std::ostringstream os;
    os << "mean gap " << gm << " (4se " << 4.0 * post.mean.std_error << "), variance gap " << gv
       << " (4se " << 4.0 * post.variance.std_error << ")";
    checks.push_back({"mc-posterior-concordance", ok, os.str()});
  }

  return checks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric evenness and species richness estimation under\n"
               "Poisson-Dirichlet (Ewens / Stable / Fisher) priors"};
  app.require_subcommand(1);

  ModelFlags model_flags;
  McFlags mc_flags;
  std::string data_path;
  bool as_json = false;
  bool as_table = false;
  std::int64_t predict_m = 0;
  bool ewens_only = false;

  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", model_flags.alpha, "Gibbs type parameter alpha (< 1)");
    cmd->add_option("--theta", model_flags.theta, "concentration parameter theta");
    cmd->add_option("--xi", model_flags.xi, "species count xi (Fisher model, alpha < 0)");
    cmd->add_option("--variant", model_flags.variant,
                    "model variant: pd | ewens | stable | fisher");
  };
  auto add_output_flags = [&](CLI::App* cmd) {
    cmd->add_flag("--json", as_json, "machine-readable JSON report on stdout");
    cmd->add_flag("--table", as_table, "human-readable key: value lines (default)");
  };
  auto add_data_flag = [&](CLI::App* cmd) {
    cmd->add_option("--data", data_path, "abundance CSV (header 'species,count')");
  };
  auto add_mc_flags = [&](CLI::App* cmd) {
    cmd->add_option("--draws", mc_flags.draws, "Monte Carlo draws (default 100000)");
    cmd->add_option("--tol", mc_flags.tol,
                    "stick truncation tolerance on the realized residual (default 1e-8)");
    cmd->add_option("--seed", mc_flags.seed,
                    "RNG seed (default: DIVERSITY_SEED environment variable, else 42)");
    cmd->add_option("--max-sticks", mc_flags.max_sticks,
                    "per-draw stick cap; a capped remainder is moment-corrected (default 1000)");
    cmd->add_option("--workers", mc_flags.workers, "parallel workers (results identical)");
  };

  CLI::App* prior = app.add_subcommand("prior", "prior mean and variance of the evenness index");
  add_model_flags(prior);
  add_output_flags(prior);

  CLI::App* posterior =
      app.add_subcommand("posterior", "posterior mean and variance given abundance data");
  add_model_flags(posterior);
  add_data_flag(posterior);
  add_output_flags(posterior);

  CLI::App* predict =
      app.add_subcommand("predict", "distribution of the number of new species in m more draws");
  add_model_flags(predict);
  add_data_flag(predict);
  predict->add_option("--m", predict_m, "additional sample size")->required();
  add_output_flags(predict);

  CLI::App* fit = app.add_subcommand("fit", "maximum-likelihood (alpha, theta) from data");
  add_data_flag(fit);
  fit->add_flag("--ewens-only", ewens_only, "restrict the fit to alpha = 0");
  add_output_flags(fit);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Monte Carlo evenness estimate (posterior when --data is given)");
  add_model_flags(simulate);
  add_data_flag(simulate);
  add_mc_flags(simulate);
  add_output_flags(simulate);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the oracle cross-check suite (exit 2 on failure)");
  add_model_flags(validate_cmd);
  add_data_flag(validate_cmd);
  add_mc_flags(validate_cmd);
  add_output_flags(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  (void)as_table;

  const auto start = std::chrono::steady_clock::now();
  try {
    if (prior->parsed()) {
      const ModelSpec model = build_model(model_flags);
      json report = base_report("prior", model);
      report["results"] = json{{"evenness", estimate_json(prior_evenness(model))}};
      emit(std::move(report), as_json, start);
      return kExitOk;
    }

    if (posterior->parsed()) {
      const ModelSpec model = build_model(model_flags);
      if (data_path.empty()) throw std::invalid_argument("posterior requires --data");
      const SampleSummary s = ingest(data_path);
      if (s.empty())
        throw std::runtime_error(data_path + ": posterior requires at least one data row");
      json report = base_report("posterior", model);
      report["data"] = data_json(s);
      json results{{"evenness", estimate_json(posterior_evenness(model, s))}};
      if (model.is_fisher()) {
        // exact conjugate cross-check alongside the closed form
        const MeanVariance conj = fisher_conjugate_posterior(model, s);
        EvennessEstimate e;
        e.mean = conj.mean;
        e.variance = conj.variance;
        e.method = EstimateMethod::ConjugateExact;
        results["conjugate"] = estimate_json(e);
      }
      const PluginSimpson plugin = plugin_simpson(s);
      results["plugin"] = json{{"biased", plugin.biased},
                               {"unbiased", plugin.unbiased ? json(*plugin.unbiased) : json()}};
      report["results"] = results;
      emit(std::move(report), as_json, start);
      return kExitOk;
    }

    if (predict->parsed()) {
      const ModelSpec model = build_model(model_flags);
      const SampleSummary s = data_path.empty() ? SampleSummary{} : ingest(data_path);
      const PdWeights w(model);
      const RichnessDistribution d = richness_predictive(w, s, predict_m);
      json report = base_report("predict", model);
      report["data"] = data_json(s);
      report["results"] = json{
          {"richness",
           json{{"m", d.m}, {"probs", d.probs}, {"expected_new_species", d.mean()}}}};
      emit(std::move(report), as_json, start);
      return kExitOk;
    }

    if (fit->parsed()) {
      if (data_path.empty()) throw std::invalid_argument("fit requires --data");
      const SampleSummary s = ingest(data_path);
      FitOptions opts;
      opts.ewens_only = ewens_only;
      const FitResult f = fit_parameters(s, opts);
      json report{{"schema_version", kSchemaVersion},
                  {"tool", "diversity"},
                  {"version", kToolVersion},
                  {"command", "fit"},
                  {"model", model_json(f.model)},
                  {"data", data_json(s)}};
      report["results"] = json{{"fit", json{{"alpha", f.model.alpha},
                                            {"theta", f.model.theta},
                                            {"variant", variant_name(f.model.variant)},
                                            {"log_likelihood", f.log_likelihood},
                                            {"boundary", f.boundary}}}};
      emit(std::move(report), as_json, start);
      return kExitOk;
    }

    if (simulate->parsed()) {
      const ModelSpec model = build_model(model_flags);
      const SampleSummary s = data_path.empty() ? SampleSummary{} : ingest(data_path);
      const McConfig cfg = build_mc_config(mc_flags);
      const McMoments mc = s.empty() ? mc_prior_evenness(model, cfg, mc_flags.workers)
                                     : mc_posterior_evenness(model, s, cfg, mc_flags.workers);
      const double cf_mean =
          s.empty() ? prior_evenness_mean(model) : posterior_evenness_mean(model, s);
      const double cf_var =
          s.empty() ? prior_evenness_variance(model) : posterior_evenness_variance(model, s);
      json report = base_report("simulate", model);
      report["data"] = data_json(s);
      report["config"] = config_json(cfg);
      report["results"] =
          json{{"evenness", estimate_json(to_evenness_estimate(mc))},
               {"monte_carlo", json{{"mean", mc_estimate_json(mc.mean)},
                                    {"variance", mc_estimate_json(mc.variance)}}},
               {"closed_form", json{{"mean", cf_mean}, {"variance", cf_var}}}};
      emit(std::move(report), as_json, start);
      return kExitOk;
    }

    if (validate_cmd->parsed()) {
      const ModelSpec model = build_model(model_flags);
      const SampleSummary s = data_path.empty() ? SampleSummary{} : ingest(data_path);
      const McConfig cfg = build_mc_config(mc_flags);
      const std::vector<Check> checks = run_validation(model, s, cfg, mc_flags.workers);
      bool all = true;
      json items = json::array();
      for (const Check& c : checks) {
        all = all && c.passed;
        items.push_back(json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        if (!as_json)
          std::cerr << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
      }
      json report = base_report("validate", model);
      report["data"] = data_json(s);
      report["config"] = config_json(cfg);
      report["results"] = json{{"checks", items}, {"all_passed", all}};
      emit(std::move(report), as_json, start);
      return all ? kExitOk : kExitValidation;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
