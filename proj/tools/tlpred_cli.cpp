// tlpred: simulate | fit | predict | assess
//
// Exit codes: 0 success, 2 argument error, 3 numeric or convergence error,
// 4 I/O error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tlpred/tlpred.hpp"

namespace {

enum Exit { kOk = 0, kArgument = 2, kNumeric = 3, kIo = 4 };

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw tlpred::IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw tlpred::IoError("write to '" + path + "' failed");
}

void write_table(const tlpred::CsvTable& t, const std::string& path) {
  if (path.empty() || path == "-")
    t.write(std::cout);
  else
    t.write(path);
}

struct Options {
  std::string input, output, model, data, truth, tpdm_csv, grid_output;
  std::uint64_t seed = 0;
  std::string target, time_column, marginal = "semiparametric", tail_ratio, split = "random";
  std::vector<std::string> columns;
  double quantile = 0.95, level = 0.95, train_fraction = 2.0 / 3.0, filter_quantile = 0.95;
  double tail_prob = 0.05, bandwidth = 0.0, clamp = 0.01, a_max = 5.0;
  std::size_t train_rows = 0;
  int qstar = 9, ndecomp = 51, window = 0;
  bool no_gpd_tail = false;
  long long p = 7, q = 400, n = 60000;
  std::string rows = "all", reference = "none";
};

int cmd_simulate(const Options& o) {
  tlpred::SimulateConfig cfg;
  cfg.p = o.p;
  cfg.q = o.q;
  cfg.n = o.n;
  cfg.seed = o.seed;
  cfg.a_max = o.a_max;
  const auto sim = tlpred::run_simulate(cfg);
  write_table(tlpred::CsvTable::from_matrix(sim.x, "x"), o.output);
  std::string truth = o.truth;
  if (truth.empty() && !o.output.empty() && o.output != "-") truth = o.output + ".truth.json";
  if (!truth.empty()) write_json(tlpred::truth_json(sim, cfg), truth);
  return kOk;
}

int cmd_fit(const Options& o, const CLI::App& sub) {
  tlpred::FitConfig cfg;
  cfg.target = o.target;
  cfg.columns = o.columns;
  cfg.time_column = o.time_column;
  cfg.marginal = o.marginal == "identity" ? tlpred::MarginalMode::Identity
                                           : tlpred::MarginalMode::Semiparametric;
  cfg.gpd_tail = !o.no_gpd_tail;
  cfg.tail_prob = o.tail_prob;
  cfg.window = o.window;
  if (o.tail_ratio == "unit") cfg.tail_ratio = tlpred::TailRatioMode::Unit;
  if (o.tail_ratio == "estimate") cfg.tail_ratio = tlpred::TailRatioMode::Estimate;
  cfg.quantile = o.quantile;
  cfg.split.mode = o.split == "head" ? tlpred::SplitMode::Head : tlpred::SplitMode::Random;
  cfg.split.fraction = o.train_fraction;
  cfg.split.head_rows = o.train_rows;
  cfg.qstar = o.qstar;
  cfg.n_decomp = o.ndecomp;
  cfg.seed = o.seed;
  cfg.level = o.level;
  if (sub.count("--bandwidth")) cfg.bandwidth = o.bandwidth;
  cfg.boundary_clamp = o.clamp;
  const auto table = tlpred::CsvTable::read(o.input);
  const auto doc = tlpred::run_fit(table, cfg);
  write_json(tlpred::to_json(doc), o.output);
  if (!o.tpdm_csv.empty()) tlpred::tpdm_table(doc.tpdm.entries, doc.columns).write(o.tpdm_csv);
  return kOk;
}

int cmd_predict(const Options& o, const CLI::App& sub) {
  const auto doc = tlpred::read_document(o.model);
  const auto table = tlpred::CsvTable::read(o.input);
  tlpred::PredictConfig cfg;
  if (o.filter_quantile > 0.0)
    cfg.filter_quantile = o.filter_quantile;
  else
    cfg.filter_quantile.reset();
  cfg.rows = o.rows == "train"  ? tlpred::RowSelection::Train
             : o.rows == "test" ? tlpred::RowSelection::Test
                                : tlpred::RowSelection::All;
  if (sub.count("--level")) cfg.level = o.level;
  const auto pred = tlpred::run_predict(doc, table, cfg);
  write_table(tlpred::predictions_table(pred), o.output);
  if (!o.grid_output.empty()) tlpred::density_grid_table(doc, pred).write(o.grid_output);
  return kOk;
}

int cmd_assess(const Options& o) {
  const auto pred = tlpred::CsvTable::read(o.input);
  std::optional<tlpred::ModelDocument> doc;
  std::optional<tlpred::CsvTable> data;
  std::optional<tlpred::ReferenceInputs> ref;
  if (o.reference != "none") {
    if (o.model.empty() || o.data.empty())
      throw tlpred::ArgumentError("assess: --reference needs --model and --data");
    doc = tlpred::read_document(o.model);
    data = tlpred::CsvTable::read(o.data);
    ref = tlpred::ReferenceInputs{&*doc, &*data,
                                  o.reference == "normal-scores" ? tlpred::ReferenceScale::NormalScores
                                                                 : tlpred::ReferenceScale::Raw,
                                  o.level};
  }
  write_json(tlpred::to_json(tlpred::run_assess(pred, ref)), o.output);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformed-linear prediction for extremes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tlpred::kVersion));
  Options o;

  auto* sim = app.add_subcommand("simulate", "Simulate X = A o Z with A ~ uniform(0, a_max)");
  sim->add_option("--seed", o.seed, "Random seed")->required();
  sim->add_option("--output", o.output, "Output CSV (x1..xp); '-' for stdout")->required();
  sim->add_option("--truth", o.truth, "Truth sidecar JSON (default: <output>.truth.json)");
  sim->add_option("-p,--p", o.p, "Dimension of X")->check(CLI::PositiveNumber);
  sim->add_option("-q,--q", o.q, "Number of factors in Z")->check(CLI::PositiveNumber);
  sim->add_option("-n,--n", o.n, "Number of rows")->check(CLI::NonNegativeNumber);
  sim->add_option("--a-max", o.a_max, "Upper end of the generator entries")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit marginals, TPDM, predictor and angular measure");
  fit->add_option("--input", o.input, "Input CSV")->required();
  fit->add_option("--output", o.output, "Model document JSON")->required();
  fit->add_option("--target", o.target, "Target column")->required();
  fit->add_option("--seed", o.seed, "Random seed (split, GPD restarts, factorizations)")->required();
  fit->add_option("--columns", o.columns, "Modeled columns (default: all but the time column)")->delimiter(',');
  fit->add_option("--time-column", o.time_column, "Time column (default: detected by name)");
  fit->add_option("--quantile", o.quantile, "Radial threshold quantile of the TPDM estimator")
      ->check(CLI::Range(0.0, 1.0));
  fit->add_option("--qstar", o.qstar, "Columns per nonnegative factor")->check(CLI::Range(2, 1000));
  fit->add_option("--ndecomp", o.ndecomp, "Number of factorizations")->check(CLI::Range(1, 100000));
  fit->add_option("--level", o.level, "Interval level")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--window", o.window, "Moving-window length for detrending (0: none)")->check(CLI::NonNegativeNumber);
  fit->add_flag("--no-gpd-tail", o.no_gpd_tail, "Empirical CDF only, no GPD tail");
  fit->add_option("--tail-prob", o.tail_prob, "Probability above the GPD threshold")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--marginal", o.marginal, "Marginal transform")
      ->check(CLI::IsMember({"semiparametric", "identity"}));
  fit->add_option("--tail-ratio", o.tail_ratio, "Diagonal of the TPDM")->check(CLI::IsMember({"unit", "estimate"}));
  fit->add_option("--split", o.split, "Train/test split")->check(CLI::IsMember({"random", "head"}));
  fit->add_option("--train-fraction", o.train_fraction, "Training fraction")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--train-rows", o.train_rows, "Training rows for --split head");
  fit->add_option("--bandwidth", o.bandwidth, "KDE bandwidth in the logit angle (default: automatic)")
      ->check(CLI::PositiveNumber);
  fit->add_option("--boundary-clamp", o.clamp, "Distance of KDE atoms from 0 and pi/2 (radians)");
  fit->add_option("--tpdm-csv", o.tpdm_csv, "Also write the TPDM as CSV");

  auto* pred = app.add_subcommand("predict", "Point predictions and conditional intervals");
  pred->add_option("--model", o.model, "Model document JSON")->required();
  pred->add_option("--input", o.input, "Input CSV")->required();
  pred->add_option("--output", o.output, "Predictions CSV; '-' for stdout")->required();
  pred->add_option("--filter-quantile", o.filter_quantile,
                   "Keep rows whose prediction exceeds this quantile (0 keeps all)")
      ->check(CLI::Range(0.0, 1.0));
  pred->add_option("--rows", o.rows, "Rows to predict")->check(CLI::IsMember({"all", "train", "test"}));
  pred->add_option("--level", o.level, "Interval level (default: the fitted level)")->check(CLI::Range(0.0, 1.0));
  pred->add_option("--grid-output", o.grid_output, "Write conditional density grids as CSV");

  auto* as = app.add_subcommand("assess", "Coverage report for a predictions CSV");
  as->add_option("--input", o.input, "Predictions CSV with truth")->required();
  as->add_option("--output", o.output, "Report JSON; '-' for stdout");
  as->add_option("--reference", o.reference, "Gaussian reference")
      ->check(CLI::IsMember({"none", "raw", "normal-scores"}));
  as->add_option("--model", o.model, "Model document (for the reference)");
  as->add_option("--data", o.data, "Fitting data CSV (for the reference)");
  as->add_option("--level", o.level, "Reference interval level")->check(CLI::Range(0.0, 1.0));

  // Each subcommand reads its own key = value file; command-line values win.
  for (auto* sub : {sim, fit, pred, as})
    sub->set_config("--config", "", "Key-value configuration file; command-line values take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return kIo;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kArgument;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*fit) return cmd_fit(o, *fit);
    if (*pred) return cmd_predict(o, *pred);
    if (*as) return cmd_assess(o);
  } catch (const tlpred::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kArgument;
  } catch (const tlpred::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const tlpred::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kArgument;
}
