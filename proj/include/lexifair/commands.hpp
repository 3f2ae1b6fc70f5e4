#pragma once

// Command dispatch for the `lexifair` executable, kept in a header so tests
// can run commands in-process.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexifair/audit.hpp"
#include "lexifair/classification.hpp"
#include "lexifair/io.hpp"
#include "lexifair/oracle.hpp"
#include "lexifair/regression.hpp"
#include "lexifair/report.hpp"
#include "lexifair/synth.hpp"

namespace lexifair {

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCertificationFailed = 2;

struct CommandSpec {
  std::string command;
  std::string input, output, config, test, model, oracle, matrix_out;

  // RunConfig overrides; unset fields fall back to the config file, then defaults.
  std::optional<unsigned long long> seed;
  std::optional<double> alpha, delta;
  std::optional<int> ell;
  std::optional<long> budget, sample_budget;
  std::optional<std::string> on_budget;  // "abort" or "clamp"

  // Regression and oracle options.
  std::string loss = "squared";
  double radius = 1.0;
  double grid = 0.02;
  std::string task = "clf";

  // gen-synth options.
  int groups = 3;
  int n = 100;
  int dim = 2;
  double skew = 0.2;
  bool overlap = false;

  bool timings = false;
};

namespace detail {

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

/// Defaults, then the flat JSON config file, then flags. The config file
/// may only set RunConfig fields that are not derived from the data.
inline RunConfig resolve_config(const CommandSpec& spec, BudgetPolicy default_policy) {
  RunConfig cfg;
  cfg.budget_policy = default_policy;
  if (!spec.config.empty()) {
    const Json j = read_json_file(spec.config);
    if (!j.is_object()) throw std::runtime_error(spec.config + ": config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      try {
        if (key == "ell") cfg.ell = value.get<int>();
        else if (key == "alpha") cfg.alpha = value.get<double>();
        else if (key == "delta") cfg.delta = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<unsigned long long>();
        else if (key == "budget") cfg.budget = value.get<long>();
        else if (key == "sample_budget") cfg.sample_budget = value.get<long>();
        else if (key == "budget_policy") {
          const auto s = value.get<std::string>();
          if (s != "abort" && s != "clamp") throw std::runtime_error("budget_policy must be abort or clamp");
          cfg.budget_policy = s == "abort" ? BudgetPolicy::kAbort : BudgetPolicy::kClamp;
        } else if (key == "loss_bound" || key == "grad_bound" || key == "diameter") {
          throw std::runtime_error("is derived from the loss and domain and cannot be set");
        } else {
          throw std::runtime_error("unknown key");
        }
      } catch (const Json::exception& e) {
        throw std::runtime_error(spec.config + ": key '" + key + "': " + e.what());
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(spec.config + ": key '" + key + "' " + e.what());
      }
    }
  }
  if (spec.seed) cfg.seed = *spec.seed;
  if (spec.alpha) cfg.alpha = *spec.alpha;
  if (spec.delta) cfg.delta = *spec.delta;
  if (spec.ell) cfg.ell = *spec.ell;
  if (spec.budget) cfg.budget = *spec.budget;
  if (spec.sample_budget) cfg.sample_budget = *spec.sample_budget;
  if (spec.on_budget) {
    if (*spec.on_budget != "abort" && *spec.on_budget != "clamp")
      throw std::invalid_argument("--on-budget must be abort or clamp");
    cfg.budget_policy = *spec.on_budget == "abort" ? BudgetPolicy::kAbort : BudgetPolicy::kClamp;
  }
  return cfg;
}

inline Json config_json(const RunConfig& cfg) {
  Json j;
  j["ell"] = cfg.ell;
  j["alpha"] = cfg.alpha;
  j["delta"] = cfg.delta;
  j["seed"] = cfg.seed;
  j["budget"] = cfg.budget;
  j["sample_budget"] = cfg.sample_budget;
  j["budget_policy"] = cfg.budget_policy == BudgetPolicy::kAbort ? "abort" : "clamp";
  return j;
}

inline Json dataset_json(const GroupedDataset& data) {
  Json j;
  j["n"] = data.size();
  j["K"] = data.num_groups();
  j["d"] = data.dim();
  std::vector<std::size_t> sizes;
  for (int k = 0; k < data.num_groups(); ++k) sizes.push_back(data.group_size(k));
  j["group_sizes"] = sizes;
  return j;
}

inline void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw std::invalid_argument(command + " needs " + flag);
}

inline std::vector<double> to_vector(const GroupErrorVector& ev) { return {ev.errors().begin(), ev.errors().end()}; }

/// Model errors on `data` for a saved train-clf or train-reg report.
inline GroupErrorVector model_errors(const Json& model, const GroupedDataset& data) {
  const auto type = model.at("type").get<std::string>();
  if (type == "randomized_stumps") return randomized_from_json(model).group_errors_on(data);
  if (type == "linear") {
    const auto theta = model.at("theta").get<std::vector<double>>();
    if (theta.size() != data.dim()) throw std::runtime_error("model dimension differs from the dataset");
    const auto& l = model.at("loss");
    const auto loss = ConvexLoss::restore(loss_kind_from_string(l.at("kind").get<std::string>()),
                                          l.at("scale").get<double>(), l.at("loss_bound").get<double>(),
                                          l.at("grad_bound").get<double>());
    return linear_group_errors(theta, data, loss);
  }
  throw std::runtime_error("unknown model type '" + type + "'");
}

inline std::vector<std::optional<double>> model_partial_errors(const Json& model, const GroupedDataset& data) {
  const auto type = model.at("type").get<std::string>();
  if (type == "randomized_stumps") {
    const auto p = randomized_from_json(model);
    return partial_group_errors(
        [&](std::size_t i) {
          const double p1 = p.predict_proba(data.features(i));
          return data.label(i) == 1.0 ? 1.0 - p1 : p1;
        },
        data);
  }
  const auto theta = model.at("theta").get<std::vector<double>>();
  const auto& l = model.at("loss");
  const auto loss = ConvexLoss::restore(loss_kind_from_string(l.at("kind").get<std::string>()),
                                        l.at("scale").get<double>(), l.at("loss_bound").get<double>(),
                                        l.at("grad_bound").get<double>());
  return partial_group_errors([&](std::size_t i) { return loss.point_loss(theta, data.features(i), data.label(i)); },
                              data);
}

/// Loss table the oracle runs on: a matrix file, or one built from a dataset.
inline LossMatrix oracle_matrix(const CommandSpec& spec) {
  if (!spec.oracle.empty()) return read_loss_matrix_file(spec.oracle);
  require(spec.input, "--input or --oracle", spec.command);
  const auto data = read_dataset_file(spec.input);
  if (spec.task == "clf") {
    if (!data.has_binary_labels()) throw std::invalid_argument("classification oracle needs labels in {0, 1}");
    return labeling_loss_matrix(data, StumpFamily(data));
  }
  if (spec.task == "reg") {
    const ParamDomain domain(std::vector<double>(data.dim(), 0.0), spec.radius);
    const ConvexLoss loss(loss_kind_from_string(spec.loss), data, domain);
    return theta_grid_loss_matrix(data, loss, ball_grid(domain, spec.grid));
  }
  throw std::invalid_argument("--task must be clf or reg");
}

struct Outcome {
  Json report;
  int status = kExitOk;
};

inline Outcome cmd_demo_instability(const CommandSpec& spec) {
  Outcome o;
  o.report["command"] = spec.command;
  o.report["results"] = to_json(instability_demo(spec.alpha.value_or(0.05)));
  return o;
}

inline Outcome cmd_gen_synth(const CommandSpec& spec) {
  require(spec.output, "--output", spec.command);
  SynthParams p;
  p.groups = spec.groups;
  p.per_group = spec.n;
  p.dim = spec.dim;
  if (spec.task != "clf" && spec.task != "reg") throw std::invalid_argument("--task must be clf or reg");
  p.task = spec.task == "clf" ? SynthParams::Task::kClassification : SynthParams::Task::kRegression;
  p.skew = spec.skew;
  p.overlap = spec.overlap;
  p.seed = spec.seed.value_or(0);
  const auto data = gen_synth(p);
  std::ofstream out(spec.output, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + spec.output);
  write_dataset(out, data);
  if (!out) throw std::runtime_error("write failed for " + spec.output);

  std::size_t multi = 0;
  for (std::size_t i = 0; i < data.size(); ++i) multi += data.memberships(i).size() > 1 ? 1 : 0;
  Outcome o;
  o.report["command"] = spec.command;
  o.report["params"] = {{"groups", p.groups}, {"per_group", p.per_group}, {"dim", p.dim}, {"task", spec.task},
                        {"skew", p.skew},     {"overlap", p.overlap},     {"overlap_prob", p.overlap_prob},
                        {"seed", p.seed}};
  o.report["dataset"] = dataset_json(data);
  o.report["dataset"]["multi_membership_points"] = multi;
  return o;
}

inline Outcome cmd_oracle(const CommandSpec& spec) {
  const auto m = oracle_matrix(spec);
  if (!spec.matrix_out.empty()) {
    std::ofstream out(spec.matrix_out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + spec.matrix_out);
    write_loss_matrix(out, m);
  }
  const int ell = spec.ell.value_or(m.rows());
  const auto truth = exact_lexifair_lp(m, ell);
  Outcome o;
  o.report["command"] = spec.command;
  o.report["matrix"] = {{"rows", m.rows()}, {"cols", m.cols()}};
  o.report["ell"] = ell;
  o.report["gamma"] = truth.gamma;
  o.report["opt"] = truth.opt_sums;
  Json witness = Json::array();
  for (std::size_t h = 0; h < truth.witness.size(); ++h)
    if (truth.witness[h] > 1e-12) witness.push_back({{"column", h}, {"weight", truth.witness[h]}});
  o.report["witness"] = witness;
  o.report["witness_errors"] = m.mixture_errors(truth.witness);
  return o;
}

inline Outcome cmd_train_clf(const CommandSpec& spec) {
  require(spec.input, "--input", spec.command);
  const auto cfg = resolve_config(spec, BudgetPolicy::kClamp);
  const auto data = read_dataset_file(spec.input);
  const StumpFamily family(data);
  const auto res = lexifair_clf(data, cfg, family);
  Outcome o;
  o.report["command"] = spec.command;
  o.report["config"] = config_json(cfg);
  o.report["dataset"] = dataset_json(data);
  Json sched = Json::array();
  for (std::size_t r = 0; r < res.schedule.size(); ++r) {
    Json s = to_json(res.schedule[r]);
    s["learning_rate"] = res.learning_rates[r];
    s["eta_learning_rate"] = res.eta_learning_rates[r];
    sched.push_back(std::move(s));
  }
  o.report["schedule"] = sched;
  o.report["eta"] = std::vector<double>(res.eta_schedule.values().begin(), res.eta_schedule.values().end());
  o.report["model"] = to_json(res.p_hat);
  const auto& last = res.schedule.back();
  o.report["certificate"] =
      to_json(certify(res.errors, res.eta_schedule, std::nullopt, cfg.alpha, cfg.ell,
                      RoundParameters{last.round, last.dual_bound, 1.0, std::nullopt}));
  return o;
}

inline Outcome cmd_train_reg(const CommandSpec& spec) {
  require(spec.input, "--input", spec.command);
  auto cfg = resolve_config(spec, BudgetPolicy::kAbort);
  const auto data = read_dataset_file(spec.input);
  const ParamDomain domain(std::vector<double>(data.dim(), 0.0), spec.radius);
  const ConvexLoss loss(loss_kind_from_string(spec.loss), data, domain);
  cfg = with_regression_bounds(cfg, loss, domain);
  const auto res = lexifair_reg(data, cfg, loss, domain);
  Outcome o;
  o.report["command"] = spec.command;
  o.report["config"] = config_json(cfg);
  o.report["config"]["loss_bound"] = cfg.loss_bound;
  o.report["config"]["grad_bound"] = cfg.grad_bound;
  o.report["config"]["diameter"] = cfg.diameter;
  o.report["dataset"] = dataset_json(data);
  Json sched = Json::array();
  for (std::size_t r = 0; r < res.schedule.size(); ++r) {
    Json s = to_json(res.schedule[r]);
    const auto& d = res.rounds[r];
    s["step_theta"] = d.step_theta;
    s["step_eta"] = d.step_eta;
    s["nu"] = d.nu;
    s["mean_lagrangian"] = d.mean_lagrangian;
    s["regret_vs_average"] = d.learner_regret;
    sched.push_back(std::move(s));
  }
  o.report["schedule"] = sched;
  o.report["eta"] = std::vector<double>(res.eta_schedule.values().begin(), res.eta_schedule.values().end());
  o.report["model"] = linear_model_json(res.theta_hat, loss, domain);
  const auto& last = res.schedule.back();
  o.report["certificate"] = to_json(certify(res.errors, res.eta_schedule, std::nullopt, cfg.alpha, cfg.ell,
                                            RoundParameters{last.round, last.dual_bound, cfg.loss_bound, res.rounds.back().nu}));
  return o;
}

inline Outcome cmd_certify(const CommandSpec& spec) {
  require(spec.model, "--model", spec.command);
  require(spec.input, "--input", spec.command);
  const Json trained = read_json_file(spec.model);
  const auto data = read_dataset_file(spec.input);
  const auto eta_values = trained.at("eta").get<std::vector<double>>();
  const int ell = spec.ell.value_or(static_cast<int>(eta_values.size()));
  if (ell < 1 || ell > static_cast<int>(eta_values.size()))
    throw std::invalid_argument("--ell exceeds the trained depth");
  const double alpha = spec.alpha.value_or(trained.at("config").at("alpha").get<double>());
  const Json& model = trained.at("model");
  const double lm = model.at("type") == "linear" ? model.at("loss").at("loss_bound").get<double>() : 1.0;
  EtaSchedule eta(lm, std::vector<double>(eta_values.begin(), eta_values.begin() + ell));
  const auto errors = model_errors(model, data);

  std::optional<std::vector<double>> opts;
  Json chained = nullptr;
  if (!spec.oracle.empty()) {
    const auto m = read_loss_matrix_file(spec.oracle);
    if (m.rows() != data.num_groups()) throw std::invalid_argument("oracle matrix rows differ from the group count");
    opts = exact_lexifair_lp(m, ell).opt_sums;
    chained = Json::array();
    for (int r = 1; r <= ell; ++r) {
      const std::vector<double> hist(eta.values().begin(), eta.values().begin() + (r - 1));
      const auto v = opt_given_history(m, hist);
      chained.push_back(v ? Json(v->value) : Json(nullptr));
    }
  }
  const auto cert = certify(errors, eta, opts, alpha, ell);
  Outcome o;
  o.report["command"] = spec.command;
  o.report["certificate"] = to_json(cert);
  o.report["opt_given_eta_history"] = chained;
  o.status = cert.verdict == Verdict::kFail ? kExitCertificationFailed : kExitOk;
  return o;
}

inline Outcome cmd_gap(const CommandSpec& spec) {
  require(spec.model, "--model", spec.command);
  require(spec.input, "--input", spec.command);
  require(spec.test, "--test", spec.command);
  const Json trained = read_json_file(spec.model);
  const auto train = read_dataset_file(spec.input);
  const auto test = read_dataset_file(spec.test, train.num_groups(), GroupedDataset::EmptyGroups::kAllow);
  const Json& model = trained.at("model");
  const auto eta_values = trained.at("eta").get<std::vector<double>>();
  GapParameters p;
  p.alpha = spec.alpha.value_or(trained.at("config").at("alpha").get<double>());
  p.ell = spec.ell.value_or(static_cast<int>(eta_values.size()));
  p.delta = spec.delta.value_or(trained.at("config").at("delta").get<double>());
  const auto train_errors = to_vector(model_errors(model, train));
  const auto report = generalization_gap(train_errors, model_partial_errors(model, test), train, test, p);
  Outcome o;
  o.report["command"] = spec.command;
  o.report["generalization"] = to_json(report);
  if (!spec.oracle.empty()) {
    // Certificate on the test sample at alpha' = alpha + 2 ell beta_hat.
    const auto m = read_loss_matrix_file(spec.oracle);
    const auto test_full = read_dataset_file(spec.test, train.num_groups());
    const double lm = model.at("type") == "linear" ? model.at("loss").at("loss_bound").get<double>() : 1.0;
    EtaSchedule eta(lm, std::vector<double>(eta_values.begin(), eta_values.begin() + p.ell));
    const auto cert = certify(model_errors(model, test_full), eta, exact_lexifair_lp(m, p.ell).opt_sums,
                              report.alpha_prime, p.ell);
    o.report["certificate"] = to_json(cert);
    if (cert.verdict == Verdict::kFail) o.status = kExitCertificationFailed;
  }
  return o;
}

}  // namespace detail

/// Runs one command. The JSON report goes to spec.output (or `out` when no
/// output path applies); diagnostics go to `err`. Returns 0 on success, 2
/// when a certificate fails and 1 on any error.
inline int run(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    const auto start = std::chrono::steady_clock::now();
    detail::Outcome o;
    if (spec.command == "demo-instability") o = detail::cmd_demo_instability(spec);
    else if (spec.command == "gen-synth") o = detail::cmd_gen_synth(spec);
    else if (spec.command == "oracle") o = detail::cmd_oracle(spec);
    else if (spec.command == "train-clf") o = detail::cmd_train_clf(spec);
    else if (spec.command == "train-reg") o = detail::cmd_train_reg(spec);
    else if (spec.command == "certify") o = detail::cmd_certify(spec);
    else if (spec.command == "gap") o = detail::cmd_gap(spec);
    else throw std::invalid_argument("unknown command '" + spec.command + "'");

    if (spec.timings)
      o.report["timings"] = {
          {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    const std::string text = o.report.dump(2) + "\n";
    // gen-synth's --output is the CSV; its report goes beside it.
    const std::string path = spec.command == "gen-synth" ? spec.output + ".json" : spec.output;
    if (path.empty()) {
      out << text;
    } else {
      std::ofstream f(path, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + path);
      f << text;
      if (!f) throw std::runtime_error("write failed for " + path);
    }
    return o.status;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace lexifair
