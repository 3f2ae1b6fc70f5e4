#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lexifair/commands.hpp"

namespace {

void add_run_options(CLI::App* cmd, lexifair::CommandSpec& s) {
  cmd->add_option("--config", s.config, "JSON file with RunConfig keys (ell, alpha, delta, seed, budget, sample_budget, budget_policy)");
  cmd->add_option("--seed", s.seed, "RNG seed");
  cmd->add_option("--alpha", s.alpha, "fairness slack alpha > 0");
  cmd->add_option("--ell", s.ell, "lexifair depth, 1 <= ell <= K");
  cmd->add_option("--delta", s.delta, "failure probability in (0, 1)");
  cmd->add_option("--budget", s.budget, "max T_j (and m_j) per round; 0 = unlimited");
  cmd->add_option("--sample-budget", s.sample_budget, "max m_j per round; 0 = same as --budget");
  cmd->add_option("--on-budget", s.on_budget, "abort or clamp when a schedule exceeds the budget")
      ->check(CLI::IsMember({"abort", "clamp"}));
}

}  // namespace

int main(int argc, char** argv) {
  lexifair::CommandSpec s;
  CLI::App app{"Lexicographic minimax fair learning and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lexifair 1.0.0");

  auto* reg = app.add_subcommand("train-reg", "train a lexifair linear model by projected gradient dynamics");
  reg->add_option("--input", s.input, "training CSV (f0..f{d-1},label,groups)")->required();
  reg->add_option("--output", s.output, "report path (stdout if omitted)");
  reg->add_option("--loss", s.loss, "squared or logistic")->check(CLI::IsMember({"squared", "logistic"}));
  reg->add_option("--radius", s.radius, "radius of the parameter ball around the origin");
  add_run_options(reg, s);

  auto* clf = app.add_subcommand("train-clf", "train a lexifair randomized stump classifier by FTPL dynamics");
  clf->add_option("--input", s.input, "training CSV with labels in {0,1}")->required();
  clf->add_option("--output", s.output, "report path (stdout if omitted)");
  add_run_options(clf, s);

  auto* orc = app.add_subcommand(
      "oracle",
      "exact lexifair values by the level LP sequence. Loss matrix CSV: K rows of comma-separated non-negative "
      "reals, one column per hypothesis");
  orc->add_option("--oracle", s.oracle, "loss matrix CSV");
  orc->add_option("--input", s.input, "dataset CSV to build the matrix from");
  orc->add_option("--task", s.task, "clf: stump labelings; reg: parameter grid")->check(CLI::IsMember({"clf", "reg"}));
  orc->add_option("--loss", s.loss, "regression loss")->check(CLI::IsMember({"squared", "logistic"}));
  orc->add_option("--radius", s.radius, "parameter ball radius for --task reg");
  orc->add_option("--grid", s.grid, "parameter grid spacing for --task reg");
  orc->add_option("--ell", s.ell, "levels to solve (default K)");
  orc->add_option("--matrix-out", s.matrix_out, "write the loss matrix CSV here");
  orc->add_option("--output", s.output, "report path (stdout if omitted)");

  auto* cert = app.add_subcommand("certify", "check a trained model against oracle values");
  cert->add_option("--model", s.model, "train-clf or train-reg report")->required();
  cert->add_option("--input", s.input, "dataset the model is certified on")->required();
  cert->add_option("--oracle", s.oracle, "loss matrix CSV for the same dataset; without it the verdict is unverified");
  cert->add_option("--alpha", s.alpha, "slack (default: the trained alpha)");
  cert->add_option("--ell", s.ell, "depth (default: the trained depth)");
  cert->add_option("--output", s.output, "report path (stdout if omitted)");

  auto* gap = app.add_subcommand("gap", "train/test generalization gap of a trained model");
  gap->add_option("--model", s.model, "train-clf or train-reg report")->required();
  gap->add_option("--input", s.input, "training CSV")->required();
  gap->add_option("--test", s.test, "test CSV")->required();
  gap->add_option("--oracle", s.oracle, "test-set loss matrix; adds a certificate at alpha'");
  gap->add_option("--alpha", s.alpha, "slack (default: the trained alpha)");
  gap->add_option("--ell", s.ell, "depth (default: the trained depth)");
  gap->add_option("--delta", s.delta, "failure probability (default: the trained delta)");
  gap->add_option("--output", s.output, "report path (stdout if omitted)");

  auto* demo = app.add_subcommand("demo-instability", "three-group instance where pointwise approximation fails");
  demo->add_option("--alpha", s.alpha, "gap between the two classifiers' top errors (default 0.05)");
  demo->add_option("--output", s.output, "report path (stdout if omitted)");

  auto* synth = app.add_subcommand("gen-synth", "write a synthetic grouped dataset and a JSON sidecar");
  synth->add_option("--output", s.output, "CSV path; the sidecar is <path>.json")->required();
  synth->add_option("--groups", s.groups, "number of groups K >= 2");
  synth->add_option("--n", s.n, "points per group");
  synth->add_option("--dim", s.dim, "feature dimension");
  synth->add_option("--task", s.task, "clf or reg")->check(CLI::IsMember({"clf", "reg"}));
  synth->add_option("--skew", s.skew, "spread of per-group noise levels");
  synth->add_flag("--overlap", s.overlap, "give about 30% of points a second group");
  synth->add_option("--seed", s.seed, "RNG seed");

  for (auto* sub : {reg, clf, orc, cert, gap, demo, synth})
    sub->add_flag("--timings", s.timings, "add wall-clock timings to the report (breaks byte-identical reruns)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lexifair::kExitError;
  }
  s.command = app.get_subcommands().front()->get_name();
  return lexifair::run(s, std::cout, std::cerr);
}
