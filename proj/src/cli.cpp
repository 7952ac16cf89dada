#include "apperf/cli.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "apperf/ap_loss.hpp"
#include "apperf/data.hpp"
#include "apperf/error.hpp"
#include "apperf/lp.hpp"
#include "apperf/model.hpp"
#include "apperf/train.hpp"

namespace apperf {

using nlohmann::ordered_json;

namespace {

MetricExpr load_one_metric(const std::string& path, const std::string& name) {
  std::vector<MetricExpr> all = load_metric_file(path);
  if (all.empty()) throw ConfigError(path + " defines no metric");
  if (name.empty()) return all.front();
  for (auto& m : all)
    if (m.name == name) return m;
  throw ConfigError("no metric named '" + name + "' in " + path);
}

// One number per line, optionally comma separated, with an optional header.
std::vector<double> read_numbers(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read " + path);
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      size_t a = cell.find_first_not_of(" \t\r");
      if (a == std::string::npos) continue;
      cell = cell.substr(a, cell.find_last_not_of(" \t\r") - a + 1);
      try {
        size_t used = 0;
        double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        out.push_back(v);
      } catch (const std::exception&) {
        if (lineno == 1 && out.empty()) break;  // header
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": non-numeric value '" + cell + "'");
      }
    }
  }
  return out;
}

void print_grid(std::ostream& out, const Matrix& g) {
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    for (Eigen::Index l = 0; l < g.cols(); ++l)
      out << (l ? " " : "") << g(k, l);
    out << "\n";
  }
}

ordered_json metric_report(const std::vector<MetricExpr>& metrics,
                           const Model& model, const Dataset& ds) {
  ordered_json j = ordered_json::object();
  for (const auto& m : metrics) j[m.name] = evaluate_model(m, model, ds);
  return j;
}

int run_check(const std::string& metric_path, const std::string& name, int n,
              std::ostream& out) {
  MetricExpr m = load_one_metric(metric_path, name);
  CompiledMetric cm = compile(m, n);
  out << std::setprecision(10);
  out << "metric " << m.name << "\n"
      << "n " << n << "\n"
      << "regime " << regime_name(cm.regime) << "\n"
      << "constraints " << cm.constraints.size() << "\n"
      << "slope\n";
  print_grid(out, cm.slope);
  out << "inter\n";
  print_grid(out, cm.inter);
  return kExitOk;
}

struct SolveArgs {
  std::string potentials, labels, metric, name, solver = "auto", dump_lp;
  int iters = 100;
  double tol = 0.0, rho = 1.0;
};

int run_solve(const SolveArgs& a, std::ostream& out) {
  MetricExpr m = load_one_metric(a.metric, a.name);
  std::vector<double> psi_v = read_numbers(a.potentials);
  std::vector<double> y_v = read_numbers(a.labels);
  if (psi_v.empty()) throw DataError("no potentials in " + a.potentials);
  if (psi_v.size() != y_v.size())
    throw DataError("potentials and labels have different lengths");
  Labels y;
  for (double v : y_v) {
    if (v != 0.0 && v != 1.0) throw DataError("labels must be 0 or 1");
    y.push_back(static_cast<int>(v));
  }
  const int n = static_cast<int>(psi_v.size());
  Vector psi = Eigen::Map<Vector>(psi_v.data(), n);
  CompiledMetric cm = compile(m, n);

  if (!a.dump_lp.empty()) {
    std::vector<ConstraintLinearForm> forms;
    if (cm.has_constraints()) forms = compile_constraints(cm, y);
    lp::GameLp glp = lp::build_lp(cm, psi, forms);
    std::ofstream f(a.dump_lp);
    if (!f) throw DataError("cannot write " + a.dump_lp);
    glp.problem.dump(f);
  }

  ApConfig cfg;
  cfg.solver = parse_solver_path(a.solver);
  cfg.admm_iters = a.iters;
  cfg.admm_tol = a.tol;
  cfg.rho = a.rho;
  LossResult r = ap_objective(psi, y, cm, cfg);
  out << std::setprecision(17);
  out << "objective," << r.game_value << "\n"
      << "loss," << r.value << "\n"
      << "solver," << solver_path_name(r.stats.path) << "\n"
      << "sample,psi,label,q_marginal,gradient\n";
  for (int i = 0; i < n; ++i)
    out << i << "," << psi(i) << "," << y[i] << "," << r.q_marginals(i) << ","
        << r.grad(i) << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string data, label = "label", val, metric, name, model = "mlp:100,100";
  std::string solver = "auto", objective = "ap", optimizer = "adam";
  std::string out, history;
  int epochs = 100, batch = 25, admm_iters = 100;
  double lr = 1e-3, l2 = 0.0, rho = 1.0;
  std::uint64_t seed = 0, split_seed = 0;
  bool split_seed_set = false;
};

int run_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  MetricExpr m = load_one_metric(a.metric, a.name);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.lr = a.lr;
  cfg.optimizer = a.optimizer;
  cfg.l2 = a.l2;
  cfg.batch = a.batch;
  cfg.objective = parse_objective(a.objective);
  cfg.seed = a.seed;
  cfg.ap.solver = parse_solver_path(a.solver);
  cfg.ap.admm_iters = a.admm_iters;
  cfg.ap.rho = a.rho;
  cfg.validate();

  Dataset raw = load_csv(a.data, a.label);
  Split s;
  const bool has_test = a.val.empty();
  const std::uint64_t split_seed = a.split_seed_set ? a.split_seed : a.seed;
  if (has_test) {
    s = split_dataset(raw, 0.7, 0.2, split_seed);
  } else {
    Dataset val_raw = load_csv(a.val, a.label);
    s.standardization = fit_standardization(raw, &s.warnings);
    s.train = apply_standardization(raw, s.standardization);
    s.val = apply_standardization(val_raw, s.standardization);
  }
  for (const auto& w : s.warnings) err << "warning: " << w << "\n";

  Model init = Model::from_spec(a.model, s.train.features(), a.seed);
  TrainResult tr = train(cfg, m, std::move(init), s.train, s.val);
  Model best = tr.best;
  best.metric_name = m.name;
  best.feature_names = s.standardization.columns;
  best.feature_mean = s.standardization.mean;
  best.feature_scale = s.standardization.scale;
  if (!a.out.empty()) save_model(best, a.out);
  if (!a.history.empty()) save_history(a.history, tr.history);

  ordered_json j;
  j["metric"] = m.name;
  j["objective"] = a.objective;
  j["model"] = best.spec();
  j["seed"] = a.seed;
  if (has_test) j["split_seed"] = split_seed;
  j["best_epoch"] = tr.best_epoch;
  j["sizes"] = {{"train", s.train.size()}, {"val", s.val.size()}};
  if (has_test) j["sizes"]["test"] = s.test.size();
  j["val"] = metric_report({m}, best, s.val);
  if (has_test) j["test"] = metric_report({m}, best, s.test);
  out << j.dump(2) << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string data, model, label = "label";
  std::vector<std::string> metrics;
  std::uint64_t split_seed = 0;
  bool split_seed_set = false;
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  std::vector<MetricExpr> metrics;
  for (const auto& p : a.metrics)
    for (auto& m : load_metric_file(p)) metrics.push_back(std::move(m));
  Model model = load_model(a.model);
  Dataset raw = load_csv(a.data, a.label);
  Dataset ds;
  if (a.split_seed_set) {
    ds = split_dataset(raw, 0.7, 0.2, a.split_seed).test;
  } else if (!model.feature_names.empty()) {
    Standardization st{model.feature_names, model.feature_mean, model.feature_scale};
    ds = apply_standardization(raw, st);
  } else {
    ds = raw;
  }
  out << metric_report(metrics, model, ds).dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Train classifiers against confusion-matrix metrics"};
  app.require_subcommand(1);

  std::string check_metric, check_name;
  int check_n = 0;
  auto* check = app.add_subcommand("check", "Validate a metric and print its grids");
  check->add_option("--metric", check_metric, ".apm file")->required();
  check->add_option("--name", check_name, "Metric name within the file");
  check->add_option("--n", check_n, "Batch size")->required()->check(CLI::PositiveNumber);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve one inner game and print Q and the gradient");
  solve->add_option("--potentials", sa.potentials, "File of potentials")->required();
  solve->add_option("--labels", sa.labels, "File of 0/1 labels")->required();
  solve->add_option("--metric", sa.metric, ".apm file")->required();
  solve->add_option("--name", sa.name, "Metric name within the file");
  solve->add_option("--solver", sa.solver, "auto, admm or lp");
  solve->add_option("--iters", sa.iters, "ADMM iteration cap")->check(CLI::PositiveNumber);
  solve->add_option("--tol", sa.tol, "ADMM residual tolerance; 0 runs all iterations");
  solve->add_option("--rho", sa.rho, "ADMM penalty")->check(CLI::PositiveNumber);
  solve->add_option("--dump-lp", sa.dump_lp, "Write the game LP to this path");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", ta.data, "Training CSV")->required();
  tr->add_option("--label", ta.label, "Label column");
  tr->add_option("--val", ta.val, "Validation CSV; otherwise the data is split 56/14/30");
  auto* tr_split = tr->add_option("--split-seed", ta.split_seed, "Split seed (default: --seed)");
  tr->add_option("--metric", ta.metric, ".apm file")->required();
  tr->add_option("--name", ta.name, "Metric name within the file");
  tr->add_option("--model", ta.model, "linear or mlp:H1,H2,...");
  tr->add_option("--epochs", ta.epochs);
  tr->add_option("--lr", ta.lr);
  tr->add_option("--l2", ta.l2);
  tr->add_option("--batch", ta.batch);
  tr->add_option("--solver", ta.solver, "auto, admm or lp");
  tr->add_option("--admm-iters", ta.admm_iters);
  tr->add_option("--rho", ta.rho);
  tr->add_option("--objective", ta.objective, "ap or bce");
  tr->add_option("--optimizer", ta.optimizer, "adam or sgd");
  tr->add_option("--seed", ta.seed);
  tr->add_option("--out", ta.out, "Model JSON path");
  tr->add_option("--history", ta.history, "Per-epoch history CSV path");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a saved model");
  ev->add_option("--data", ea.data, "CSV to evaluate on")->required();
  ev->add_option("--model", ea.model, "Model JSON")->required();
  ev->add_option("--metrics", ea.metrics, ".apm files")->required();
  ev->add_option("--label", ea.label, "Label column");
  auto* ev_split = ev->add_option("--split-seed", ea.split_seed,
                                  "Evaluate on the test part of this split");

  SynthConfig sc;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic two-Gaussian dataset");
  synth->add_option("--out", synth_out, "CSV path")->required();
  synth->add_option("--samples", sc.samples);
  synth->add_option("--positive-fraction", sc.positive_fraction);
  synth->add_option("--separation", sc.separation);
  synth->add_option("--seed", sc.seed);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*check) return run_check(check_metric, check_name, check_n, out);
    if (*solve) return run_solve(sa, out);
    if (*tr) {
      ta.split_seed_set = tr_split->count() > 0;
      return run_train(ta, out, err);
    }
    if (*ev) {
      ea.split_seed_set = ev_split->count() > 0;
      return run_eval(ea, out);
    }
    if (*synth) {
      save_csv(synth_out, synthetic_gaussians(sc));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace apperf
