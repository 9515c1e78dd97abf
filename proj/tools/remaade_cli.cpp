// Command-line harness: single runs, multi-trial comparisons, and the
// gradient-check oracle. Emits CSV trajectories and summaries; every output
// is reproducible byte-for-byte from (flags, seed) unless --timing is given.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "remaade/finite_diff.hpp"
#include "remaade/orders.hpp"
#include "remaade/reacts.hpp"
#include "remaade/specparse.hpp"
#include "remaade/trainer.hpp"

namespace {

using namespace remaade;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_string(const ActionString& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += '-';
    out += std::to_string(s[i]);
  }
  return out;
}

// Layered key=value resolution: command line > preset > config file > default.
class Resolver {
 public:
  void set_cli(const std::string& key, const std::string& value) { cli_[key] = value; }
  void set_preset(const std::string& key, const std::string& value) { preset_[key] = value; }
  void set_file(const std::string& key, const std::string& value) { file_[key] = value; }
  void set_default(const std::string& key, const std::string& value) {
    defaults_[key] = value;
    order_.push_back(key);
  }

  bool cli_has(const std::string& key) const { return cli_.count(key) > 0; }

  const std::string& get(const std::string& key) const {
    for (const auto* layer : {&cli_, &preset_, &file_}) {
      auto it = layer->find(key);
      if (it != layer->end()) return it->second;
    }
    auto it = defaults_.find(key);
    if (it == defaults_.end()) throw std::logic_error("Resolver: unknown key " + key);
    return it->second;
  }

  long get_long(const std::string& key) const {
    try {
      return std::stol(get(key));
    } catch (const std::exception&) {
      throw std::invalid_argument("option " + key + ": cannot parse '" + get(key) +
                                  "' as an integer");
    }
  }
  double get_double(const std::string& key) const {
    try {
      return std::stod(get(key));
    } catch (const std::exception&) {
      throw std::invalid_argument("option " + key + ": cannot parse '" + get(key) +
                                  "' as a number");
    }
  }
  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("option " + key + ": cannot parse '" + v + "' as a boolean");
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config file " + path + " line " + std::to_string(lineno) +
                                 ": expected key=value");
      const std::string key = line.substr(0, eq);
      if (!defaults_.count(key))
        throw std::runtime_error("config file " + path + " line " + std::to_string(lineno) +
                                 ": unknown key '" + key + "'");
      set_file(key, line.substr(eq + 1));
    }
  }

  // Full resolved configuration in declaration order.
  std::vector<std::pair<std::string, std::string>> resolved() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& key : order_) out.emplace_back(key, get(key));
    return out;
  }

 private:
  std::map<std::string, std::string> cli_, preset_, file_, defaults_;
  std::vector<std::string> order_;
};

struct CommonFlags {
  std::map<std::string, std::string> values;  // only flags the user actually passed
};

// Registers one --flag that lands in the CLI layer when provided.
void add_str_opt(CLI::App* sub, CommonFlags& flags, const std::string& flag,
                 const std::string& key, const std::string& help) {
  sub->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.values[key] = v; }, help);
}

void add_bool_opt(CLI::App* sub, CommonFlags& flags, const std::string& flag,
                  const std::string& key, const std::string& help) {
  sub->add_flag_callback(flag, [&flags, key] { flags.values[key] = "true"; }, help);
}

void register_run_options(CLI::App* sub, CommonFlags& flags) {
  add_str_opt(sub, flags, "--algo", "algo", "random | reinforce-iid | remaade | reacts");
  add_str_opt(sub, flags, "--space", "space", "nas101-cell or dims=D0,D1,...");
  add_str_opt(sub, flags, "--families", "families", "family id per hyperparameter");
  add_str_opt(sub, flags, "--validity", "validity", "none | nas-cell");
  add_str_opt(sub, flags, "--env", "env",
              "separable:... | xor:... | tabular:PATH | external:CMD");
  add_str_opt(sub, flags, "--budget", "budget", "exploration budget E");
  add_str_opt(sub, flags, "--batch", "batch", "batch size B");
  add_str_opt(sub, flags, "--alpha", "alpha", "learning rate");
  add_bool_opt(sub, flags, "--ppo", "ppo", "enable the clipped PPO objective");
  add_str_opt(sub, flags, "--eps", "eps", "PPO clip coefficient (requires --ppo)");
  add_str_opt(sub, flags, "--ppo-epochs", "ppo_epochs", "update passes per batch");
  add_str_opt(sub, flags, "--entropy", "entropy", "entropy bonus coefficient");
  add_str_opt(sub, flags, "--baseline", "baseline", "batch-mean | ema:GAMMA | none");
  add_str_opt(sub, flags, "--d", "d", "embedding dimension");
  add_str_opt(sub, flags, "--dff", "dff", "feed-forward width (0 = d)");
  add_str_opt(sub, flags, "--m", "m", "stacked block count M");
  add_str_opt(sub, flags, "--S", "S", "factorization-order set size");
  add_str_opt(sub, flags, "--L", "L", "critic rollouts per value estimate");
  add_str_opt(sub, flags, "--seed", "seed", "base RNG seed");
  add_str_opt(sub, flags, "--max-attempts", "max_attempts", "rejection sampling cap");
  add_str_opt(sub, flags, "--critic-hidden", "critic_hidden", "critic hidden width");
  add_str_opt(sub, flags, "--critic-alpha", "critic_alpha", "critic learning rate");
  add_str_opt(sub, flags, "--critic-epochs", "critic_epochs", "critic fit epochs");
  add_str_opt(sub, flags, "--wmax", "wmax", "importance weight clamp");
  add_bool_opt(sub, flags, "--exact-critic", "exact_critic",
               "use the true f as critic (deterministic tabular envs)");
  add_bool_opt(sub, flags, "--minimize", "minimize", "negate tabular rewards on load");
  add_bool_opt(sub, flags, "--memoize", "memoize", "cache deterministic evaluations");
  add_str_opt(sub, flags, "--external-timeout-ms", "external_timeout_ms",
              "external child reply timeout");
  add_bool_opt(sub, flags, "--timing", "timing",
               "record wall-clock seconds (breaks byte-reproducibility)");
}

void register_defaults(Resolver& r) {
  r.set_default("algo", "remaade");
  r.set_default("space", "");
  r.set_default("families", "");
  r.set_default("validity", "");
  r.set_default("env", "");
  r.set_default("budget", "150");
  r.set_default("batch", "30");
  r.set_default("alpha", "0.01");
  r.set_default("ppo", "false");
  r.set_default("eps", "0.1");
  r.set_default("ppo_epochs", "1");
  r.set_default("entropy", "0");
  r.set_default("baseline", "batch-mean");
  r.set_default("d", "36");
  r.set_default("dff", "0");
  r.set_default("m", "1");
  r.set_default("S", "1");
  r.set_default("L", "8");
  r.set_default("seed", "0");
  r.set_default("max_attempts", "1000");
  r.set_default("critic_hidden", "64");
  r.set_default("critic_alpha", "0.001");
  r.set_default("critic_epochs", "200");
  r.set_default("wmax", "10");
  r.set_default("exact_critic", "false");
  r.set_default("minimize", "false");
  r.set_default("memoize", "false");
  r.set_default("external_timeout_ms", "30000");
  r.set_default("timing", "false");
}

void apply_preset(Resolver& r, const std::string& preset) {
  if (preset.empty()) return;
  if (preset == "nas101-short") {
    r.set_preset("space", "nas101-cell");
    r.set_preset("d", "36");
    r.set_preset("batch", "30");
    r.set_preset("alpha", "0.01");
    r.set_preset("m", "1");
    r.set_preset("ppo", "true");
    r.set_preset("eps", "0.1");
    r.set_preset("S", "1");
    r.set_preset("budget", "150");
    return;
  }
  throw std::invalid_argument("unknown preset '" + preset + "'");
}

Algorithm parse_algo(const std::string& name) {
  if (name == "random") return Algorithm::kRandom;
  if (name == "reinforce-iid") return Algorithm::kReinforceIid;
  if (name == "remaade") return Algorithm::kRemaade;
  if (name == "reacts") return Algorithm::kReacts;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

struct ResolvedRun {
  RunConfig config;
  std::string space_spec, families_spec, validity_spec, env_spec;
  bool minimize = false, memoize = false, timing = false;
  int external_timeout_ms = 30000;
};

ResolvedRun resolve_run(const Resolver& r) {
  ResolvedRun out;
  out.config.algorithm = parse_algo(r.get("algo"));
  out.config.budget = r.get_long("budget");
  out.config.batch = static_cast<int>(r.get_long("batch"));
  out.config.alpha = r.get_double("alpha");
  out.config.ppo = r.get_bool("ppo");
  out.config.eps = r.get_double("eps");
  out.config.ppo_epochs = static_cast<int>(r.get_long("ppo_epochs"));
  out.config.entropy_coef = r.get_double("entropy");
  const std::string baseline = r.get("baseline");
  if (baseline == "batch-mean") {
    out.config.baseline = BaselineKind::kBatchMean;
  } else if (baseline == "none") {
    out.config.baseline = BaselineKind::kNone;
  } else if (baseline.rfind("ema", 0) == 0) {
    out.config.baseline = BaselineKind::kEma;
    if (baseline.size() > 4 && baseline[3] == ':')
      out.config.ema_gamma = std::stod(baseline.substr(4));
  } else {
    throw std::invalid_argument("unknown baseline '" + baseline + "'");
  }
  out.config.d = static_cast<int>(r.get_long("d"));
  out.config.d_ff = static_cast<int>(r.get_long("dff"));
  out.config.M = static_cast<int>(r.get_long("m"));
  out.config.S = static_cast<int>(r.get_long("S"));
  out.config.L = static_cast<int>(r.get_long("L"));
  out.config.seed = static_cast<std::uint64_t>(r.get_long("seed"));
  out.config.max_attempts = static_cast<int>(r.get_long("max_attempts"));
  out.config.critic_hidden = static_cast<int>(r.get_long("critic_hidden"));
  out.config.critic_alpha = r.get_double("critic_alpha");
  out.config.critic_epochs = static_cast<int>(r.get_long("critic_epochs"));
  out.config.weight_clamp = r.get_double("wmax");
  out.config.exact_critic = r.get_bool("exact_critic");
  out.space_spec = r.get("space");
  out.families_spec = r.get("families");
  out.validity_spec = r.get("validity");
  out.env_spec = r.get("env");
  out.minimize = r.get_bool("minimize");
  out.memoize = r.get_bool("memoize");
  out.timing = r.get_bool("timing");
  out.external_timeout_ms = static_cast<int>(r.get_long("external_timeout_ms"));
  // flag-combination errors, before any work
  if (r.cli_has("eps") && !out.config.ppo)
    throw std::invalid_argument("--eps requires --ppo");
  if (r.cli_has("ppo_epochs") && r.get_long("ppo_epochs") > 1 && !out.config.ppo)
    throw std::invalid_argument("--ppo-epochs > 1 requires --ppo");
  if (out.space_spec.empty()) throw std::invalid_argument("--space (or a preset) is required");
  out.config.validate();
  return out;
}

void write_config_txt(const std::string& path, const Resolver& r, const RunConfig& cfg,
                      const RunResult* result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const auto& [k, v] : r.resolved()) out << k << '=' << v << '\n';
  // constants the flags cannot change, so every run is self-describing
  out << "dff_resolved=" << cfg.resolved_d_ff() << '\n';
  out << "adam_beta1=0.9\nadam_beta2=0.999\nadam_eps=1e-08\n";
  out << "init=gaussian(0,1/sqrt(d))\n";
  out << "exhaustive_value_limit=" << cfg.exhaustive_value_limit << '\n';
  if (result)
    for (const auto& [k, v] : result->metadata) out << "meta." << k << '=' << v << '\n';
}

RunResult dispatch_run(const ResolvedRun& rr, const SearchSpace& space,
                       std::shared_ptr<Environment> env, std::uint64_t seed,
                       const ParamStore* init_params) {
  RunConfig cfg = rr.config;
  cfg.seed = seed;
  Rng rng(seed);
  switch (cfg.algorithm) {
    case Algorithm::kRandom:
      return run_random_search(cfg, space, *env, rng);
    case Algorithm::kReinforceIid:
    case Algorithm::kRemaade:
      return run_remaade(cfg, space, *env, rng, init_params);
    case Algorithm::kReacts: {
      std::shared_ptr<Environment> critic_env;
      if (cfg.exact_critic) {
        if (!env->deterministic())
          throw std::invalid_argument("--exact-critic requires a deterministic (tabular) env");
        critic_env = env;
      }
      return run_reacts(cfg, space, *env, rng, critic_env, init_params);
    }
  }
  throw std::logic_error("unreachable algorithm");
}

int cmd_run(const Resolver& r, const std::string& out_dir, bool dry_run,
            const std::string& save_params, const std::string& load_params) {
  ResolvedRun rr = resolve_run(r);
  if (rr.config.exact_critic && rr.config.algorithm != Algorithm::kReacts)
    throw std::invalid_argument("--exact-critic applies to --algo reacts only");
  std::filesystem::create_directories(out_dir);
  if (dry_run) {
    write_config_txt(out_dir + "/config.txt", r, rr.config, nullptr);
    std::cout << "dry run: resolved config written to " << out_dir << "/config.txt\n";
    return 0;
  }
  if (rr.env_spec.empty()) throw std::invalid_argument("--env is required");
  SearchSpace space = parse_space(rr.space_spec, rr.families_spec, rr.validity_spec);
  std::shared_ptr<Environment> env =
      parse_env(rr.env_spec, space, rr.minimize, rr.external_timeout_ms);
  if (rr.memoize) env = std::make_shared<MemoizedEnv>(env);
  std::optional<ParamStore> init;
  if (!load_params.empty()) {
    Rng tmp(rr.config.seed);
    PolicyConfig pc{rr.config.algorithm == Algorithm::kReinforceIid ? PolicyKind::kIid
                                                                    : PolicyKind::kMaade,
                    rr.config.d, rr.config.resolved_d_ff(), rr.config.M};
    Policy shape(space, pc, tmp);
    init = shape.params();
    init->load_text(load_params);
  }
  RunResult result = dispatch_run(rr, space, env, rr.config.seed, init ? &*init : nullptr);

  std::ofstream traj(out_dir + "/trajectory.csv");
  traj << "e,best_reward\n";
  for (const auto& [e, best] : result.trajectory) traj << e << ',' << fmt(best) << '\n';

  std::ofstream res(out_dir + "/result.csv");
  res << "algo,trial,seed,best_reward,best_string,explorations,seconds\n";
  res << algorithm_name(rr.config.algorithm) << ",0," << rr.config.seed << ','
      << fmt(result.best_reward) << ',' << join_string(result.best_string) << ','
      << result.explorations << ',' << fmt(rr.timing ? result.seconds : 0.0) << '\n';

  write_config_txt(out_dir + "/config.txt", r, rr.config, &result);
  if (!save_params.empty() && result.final_params.size() > 0)
    result.final_params.save_text(save_params);
  std::cout << "best_reward=" << fmt(result.best_reward)
            << " best_string=" << join_string(result.best_string)
            << " explorations=" << result.explorations << '\n';
  return 0;
}

// One-sided paired sign test: P(X >= wins) for X ~ Binomial(wins+losses, 1/2).
double sign_test_p(int wins, int losses) {
  const int m = wins + losses;
  if (m == 0) return 1.0;
  double p = 0.0;
  for (int i = wins; i <= m; ++i) {
    double logc = std::lgamma(m + 1.0) - std::lgamma(i + 1.0) - std::lgamma(m - i + 1.0);
    p += std::exp(logc - m * std::log(2.0));
  }
  return std::min(p, 1.0);
}

int cmd_compare(const Resolver& r, const std::string& out_dir, const std::string& algos_csv,
                int trials, int parallel) {
  if (trials < 1) throw std::invalid_argument("--trials must be >= 1");
  std::vector<std::string> algos = split(algos_csv, ',');
  if (algos.empty()) throw std::invalid_argument("--algos is required");
  for (const auto& a : algos) parse_algo(a);
  ResolvedRun base = resolve_run(r);
  if (base.env_spec.empty()) throw std::invalid_argument("--env is required");
  SearchSpace space = parse_space(base.space_spec, base.families_spec, base.validity_spec);

  struct TrialOut {
    RunResult result;
    std::string error;
  };
  std::vector<std::vector<TrialOut>> all(algos.size());
  std::shared_ptr<Environment> shared_env;
  {
    auto probe = parse_env(base.env_spec, space, base.minimize, base.external_timeout_ms);
    if (probe->concurrent_safe() || parallel <= 1) shared_env = probe;
  }
  auto run_one = [&](const std::string& algo, int trial) -> TrialOut {
    TrialOut out;
    try {
      ResolvedRun rr = base;
      rr.config.algorithm = parse_algo(algo);
      std::shared_ptr<Environment> env = shared_env;
      if (!env) env = parse_env(base.env_spec, space, base.minimize, base.external_timeout_ms);
      if (base.memoize) env = std::make_shared<MemoizedEnv>(env);
      out.result = dispatch_run(rr, space, env, base.config.seed + static_cast<std::uint64_t>(trial),
                                nullptr);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  };
  for (std::size_t ai = 0; ai < algos.size(); ++ai) {
    all[ai].resize(static_cast<std::size_t>(trials));
    if (parallel <= 1) {
      for (int t = 0; t < trials; ++t) all[ai][static_cast<std::size_t>(t)] = run_one(algos[ai], t);
    } else {
      for (int start = 0; start < trials; start += parallel) {
        std::vector<std::future<TrialOut>> futs;
        const int end = std::min(trials, start + parallel);
        for (int t = start; t < end; ++t)
          futs.push_back(std::async(std::launch::async, run_one, algos[ai], t));
        for (int t = start; t < end; ++t)
          all[ai][static_cast<std::size_t>(t)] = futs[static_cast<std::size_t>(t - start)].get();
      }
    }
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream trials_csv(out_dir + "/trials.csv");
  trials_csv << "algo,trial,seed,best_reward,best_string,explorations,seconds\n";
  for (std::size_t ai = 0; ai < algos.size(); ++ai)
    for (int t = 0; t < trials; ++t) {
      const TrialOut& to = all[ai][static_cast<std::size_t>(t)];
      if (!to.error.empty()) {
        trials_csv << algos[ai] << ',' << t << ',' << base.config.seed + t
                   << ",nan,ERROR:" << to.error << ",0,0\n";
        continue;
      }
      trials_csv << algos[ai] << ',' << t << ',' << base.config.seed + t << ','
                 << fmt(to.result.best_reward) << ',' << join_string(to.result.best_string)
                 << ',' << to.result.explorations << ','
                 << fmt(base.timing ? to.result.seconds : 0.0) << '\n';
    }

  std::ofstream summary(out_dir + "/summary.csv");
  summary << "algo,trials,mean_best,sd_best\n";
  for (std::size_t ai = 0; ai < algos.size(); ++ai) {
    std::vector<double> best;
    for (const auto& to : all[ai])
      if (to.error.empty()) best.push_back(to.result.best_reward);
    double mean = 0.0;
    for (double b : best) mean += b;
    mean /= static_cast<double>(best.size());
    double var = 0.0;
    for (double b : best) var += (b - mean) * (b - mean);
    const double sd = best.size() > 1 ? std::sqrt(var / (static_cast<double>(best.size()) - 1.0))
                                      : 0.0;
    summary << algos[ai] << ',' << best.size() << ',' << fmt(mean) << ',' << fmt(sd) << '\n';
  }

  // mean best-so-far per checkpoint, on each algorithm's own e-grid
  std::ofstream checkpoints(out_dir + "/checkpoints.csv");
  checkpoints << "algo,e,mean_best_so_far\n";
  for (std::size_t ai = 0; ai < algos.size(); ++ai) {
    const auto* first_ok =
        [&]() -> const TrialOut* {
      for (const auto& to : all[ai])
        if (to.error.empty()) return &to;
      return nullptr;
    }();
    if (!first_ok) continue;
    for (std::size_t ci = 0; ci < first_ok->result.trajectory.size(); ++ci) {
      double mean = 0.0;
      int n = 0;
      for (const auto& to : all[ai]) {
        if (!to.error.empty() || ci >= to.result.trajectory.size()) continue;
        mean += to.result.trajectory[ci].second;
        ++n;
      }
      checkpoints << algos[ai] << ',' << first_ok->result.trajectory[ci].first << ','
                  << fmt(mean / n) << '\n';
    }
  }

  // one-sided paired sign test for every algorithm pair
  std::ofstream sig(out_dir + "/significance.csv");
  sig << "algo_a,algo_b,wins,losses,ties,p_a_beats_b\n";
  for (std::size_t ai = 0; ai < algos.size(); ++ai)
    for (std::size_t bi = 0; bi < algos.size(); ++bi) {
      if (ai == bi) continue;
      int wins = 0, losses = 0, ties = 0;
      for (int t = 0; t < trials; ++t) {
        const TrialOut& a = all[ai][static_cast<std::size_t>(t)];
        const TrialOut& b = all[bi][static_cast<std::size_t>(t)];
        if (!a.error.empty() || !b.error.empty()) continue;
        if (a.result.best_reward > b.result.best_reward) ++wins;
        else if (a.result.best_reward < b.result.best_reward) ++losses;
        else ++ties;
      }
      sig << algos[ai] << ',' << algos[bi] << ',' << wins << ',' << losses << ',' << ties << ','
          << fmt(sign_test_p(wins, losses)) << '\n';
    }
  std::cout << "compare: wrote " << out_dir << "/{trials,summary,checkpoints,significance}.csv\n";
  return 0;
}

int cmd_gradcheck(int d, const std::string& dims_csv, int M, long seed, double h, bool corrupt) {
  SearchSpace space = build_space(parse_int_list(dims_csv, "dims"));
  if (space.num_strings() > (1u << 12))
    throw std::invalid_argument("gradcheck: product of dims must be <= 2^12");
  Rng rng(static_cast<std::uint64_t>(seed));
  Policy pol(space, {PolicyKind::kMaade, d, d, M}, rng);

  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<int> order = rng.permutation(space.n());
    ActionString s(static_cast<std::size_t>(space.n()));
    for (int i = 0; i < space.n(); ++i)
      s[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.below(static_cast<std::size_t>(space.dim(i))));
    ParamStore analytic = grad_log_prob(pol, s, order);
    if (corrupt) analytic.flat()[0] += 0.5;
    ParamStore fd = central_finite_difference(
        [&](const ParamStore& p) {
          Policy probe = pol;
          for (std::size_t i = 0; i < p.size(); ++i) probe.params().flat()[i] = p.flat()[i];
          return log_prob(probe, s, order);
        },
        pol.params(), h);
    worst = std::max(worst, max_rel_error(analytic, fd));
  }

  double total = 0.0;
  for_each_string(space, true, [&](const ActionString& s) {
    total += std::exp(log_prob(pol, s, identity_order(space.n())));
  });
  const double dev = std::fabs(total - 1.0);

  const bool pass = worst <= 1e-4 && dev <= 1e-8;
  std::printf("gradcheck: max_rel_error=%.3e (tol 1e-4), total_prob_deviation=%.3e (tol 1e-8)\n",
              worst, dev);
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-gradient hyperparameter search over categorical spaces"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  std::string run_out = "out", run_preset, run_config_file, save_params, load_params;
  bool dry_run = false;
  CLI::App* run = app.add_subcommand("run", "run one search trial");
  register_run_options(run, run_flags);
  run->add_option("--out", run_out, "output directory");
  run->add_option("--preset", run_preset, "named preset (nas101-short)");
  run->add_option("--config", run_config_file, "key=value config file (flags override)");
  run->add_option("--save-params", save_params, "write the final policy checkpoint here");
  run->add_option("--load-params", load_params, "start from this policy checkpoint");
  run->add_flag("--dry-run", dry_run, "resolve and write config.txt, then exit");

  CommonFlags cmp_flags;
  std::string cmp_out = "out", cmp_algos, cmp_preset, cmp_config_file;
  int cmp_trials = 10, cmp_parallel = 1;
  CLI::App* cmp = app.add_subcommand("compare", "run seeded trials across algorithms");
  register_run_options(cmp, cmp_flags);
  cmp->add_option("--algos", cmp_algos, "comma-separated algorithm list")->required();
  cmp->add_option("--trials", cmp_trials, "trials per algorithm");
  cmp->add_option("--parallel", cmp_parallel, "concurrent trials");
  cmp->add_option("--out", cmp_out, "output directory");
  cmp->add_option("--preset", cmp_preset, "named preset (nas101-short)");
  cmp->add_option("--config", cmp_config_file, "key=value config file (flags override)");

  int gc_d = 8, gc_m = 1;
  long gc_seed = 1;
  double gc_h = 1e-5;
  std::string gc_dims = "2,3,2,3";
  bool gc_corrupt = false;
  CLI::App* gc = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  gc->set_help_flag("--help", "print help");  // frees up --h for the step size
  gc->add_option("--d", gc_d, "embedding dimension");
  gc->add_option("--dims", gc_dims, "space cardinalities");
  gc->add_option("--m", gc_m, "stacked block count");
  gc->add_option("--seed", gc_seed, "RNG seed");
  gc->add_option("--h", gc_h, "finite-difference step");
  gc->add_flag("--corrupt", gc_corrupt, "negative control: perturb the analytic gradient");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      Resolver r;
      register_defaults(r);
      if (!run_config_file.empty()) r.load_file(run_config_file);
      apply_preset(r, run_preset);
      for (const auto& [k, v] : run_flags.values) r.set_cli(k, v);
      return cmd_run(r, run_out, dry_run, save_params, load_params);
    }
    if (cmp->parsed()) {
      Resolver r;
      register_defaults(r);
      if (!cmp_config_file.empty()) r.load_file(cmp_config_file);
      apply_preset(r, cmp_preset);
      for (const auto& [k, v] : cmp_flags.values) r.set_cli(k, v);
      return cmd_compare(r, cmp_out, cmp_algos, cmp_trials, cmp_parallel);
    }
    if (gc->parsed()) return cmd_gradcheck(gc_d, gc_dims, gc_m, gc_seed, gc_h, gc_corrupt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
