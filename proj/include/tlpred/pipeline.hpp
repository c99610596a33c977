// End-to-end steps behind the command-line tool: simulate, fit, predict and
// assess. Each step is a plain function of its inputs and configuration.

#ifndef TLPRED_PIPELINE_HPP
#define TLPRED_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "tlpred/angular.hpp"
#include "tlpred/cpfactor.hpp"
#include "tlpred/csv.hpp"
#include "tlpred/document.hpp"
#include "tlpred/error.hpp"
#include "tlpred/marginal.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/predictor.hpp"
#include "tlpred/random.hpp"
#include "tlpred/reference.hpp"
#include "tlpred/simulate.hpp"
#include "tlpred/tpdm.hpp"

namespace tlpred {

// Simulation ----------------------------------------------------------------

// RNG streams distinct from the block indices used by sample_z.
inline constexpr std::uint64_t kGeneratorStream = 0x47454e0000000000ull;
inline constexpr std::uint64_t kSplitStream = 0x53504c0000000000ull;

struct SimulateConfig {
  Eigen::Index p = 7;
  Eigen::Index q = 400;
  Eigen::Index n = 60000;
  std::uint64_t seed = 0;
  double a_max = 5.0;  // generator entries ~ uniform(0, a_max)
};

struct Simulation {
  GeneratorMatrix a;
  Eigen::MatrixXd x;
  TPDM truth;
};

inline Simulation run_simulate(const SimulateConfig& cfg) {
  if (cfg.p < 1 || cfg.q < 1) throw ArgumentError("simulate: p and q must be at least 1");
  if (cfg.n < 0) throw ArgumentError("simulate: n must be nonnegative");
  if (!(cfg.a_max > 0.0)) throw ArgumentError("simulate: a_max must be positive");
  Rng rng(cfg.seed, kGeneratorStream);
  Eigen::MatrixXd a(cfg.p, cfg.q);
  for (Eigen::Index i = 0; i < cfg.p; ++i)
    for (Eigen::Index j = 0; j < cfg.q; ++j) a(i, j) = rng.uniform(0.0, cfg.a_max);
  GeneratorMatrix gen(std::move(a), true);
  Eigen::MatrixXd z = sample_z(cfg.q, cfg.n, ParetoSpec::centered(), cfg.seed);
  Eigen::MatrixXd x = construct_x(gen, z);
  TPDM truth = tpdm_of_generator(gen);
  return Simulation{std::move(gen), std::move(x), std::move(truth)};
}

inline nlohmann::json truth_json(const Simulation& s, const SimulateConfig& cfg) {
  return {{"p", cfg.p},
          {"q", cfg.q},
          {"n", cfg.n},
          {"seed", cfg.seed},
          {"a_max", cfg.a_max},
          {"delta", centered_shift()},
          {"A", detail::matrix_json(s.a.entries())},
          {"tpdm", detail::matrix_json(s.truth.entries)}};
}

// Data preparation ----------------------------------------------------------

/// Seeded split of n row positions into (train, test), each sorted.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n,
                                                                              const SplitConfig& cfg) {
  std::size_t k = 0;
  if (cfg.mode == SplitMode::Head && cfg.head_rows > 0) {
    k = cfg.head_rows;
  } else {
    if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0))
      throw ArgumentError("split: training fraction must lie in (0, 1]");
    k = static_cast<std::size_t>(std::llround(cfg.fraction * static_cast<double>(n)));
  }
  if (k == 0 || k > n)
    throw ArgumentError("split: training part of " + std::to_string(k) + " rows out of " +
                        std::to_string(n) + " is not usable");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (cfg.mode == SplitMode::Random) {
    Rng rng(cfg.seed, kSplitStream);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  }
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

/// Modeled columns of a table with the time labels of each row.
struct DataFrame {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // per column, NaN where missing
  std::vector<std::string> labels;          // time column, or the row index
};

inline std::string detect_time_column(const CsvTable& t) {
  for (const char* name : {"time", "date", "Date", "Time", "day", "t"})
    if (t.find(name)) return name;
  return {};
}

inline DataFrame load_frame(const CsvTable& table, const std::vector<std::string>& columns,
                            const std::string& time_column) {
  DataFrame f;
  f.columns = columns;
  for (const auto& c : columns) {
    if (c == time_column) throw ArgumentError("column '" + c + "' is the time column");
    f.values.push_back(table.numeric_column(table.index_of(c)));
  }
  if (!time_column.empty()) {
    f.labels = table.text_column(table.index_of(time_column));
  } else {
    for (std::size_t r = 0; r < table.rows(); ++r) f.labels.push_back(std::to_string(r));
  }
  return f;
}

/// Rows where every listed column is present.
inline std::vector<std::size_t> complete_rows(const DataFrame& f, const std::vector<std::size_t>& cols) {
  std::vector<std::size_t> out;
  const std::size_t n = f.labels.size();
  for (std::size_t r = 0; r < n; ++r) {
    bool ok = true;
    for (std::size_t c : cols) ok = ok && !std::isnan(f.values[c][r]);
    if (ok) out.push_back(r);
  }
  return out;
}

// Fit -------------------------------------------------------------------------

enum class MarginalMode { Semiparametric, Identity };
enum class TailRatioMode { Unit, Estimate };

struct FitConfig {
  std::string target;
  std::vector<std::string> columns;   // empty: every column but the time column
  std::string time_column;            // empty: detected by name, else row index
  MarginalMode marginal = MarginalMode::Semiparametric;
  bool gpd_tail = true;
  double tail_prob = 0.05;
  int window = 0;                     // moving-window length; 0 disables detrending
  std::optional<TailRatioMode> tail_ratio;  // default: unit after a marginal transform, else estimated
  double quantile = 0.95;             // TPDM radial threshold
  SplitConfig split;
  int qstar = 9;
  int n_decomp = 51;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::optional<double> bandwidth;
  double boundary_clamp = 0.01;
};

inline nlohmann::json config_json(const FitConfig& c) {
  nlohmann::json j = {{"target", c.target},
                      {"marginal", c.marginal == MarginalMode::Identity ? "identity" : "semiparametric"},
                      {"gpd_tail", c.gpd_tail},
                      {"tail_prob", c.tail_prob},
                      {"window", c.window},
                      {"quantile", c.quantile},
                      {"qstar", c.qstar},
                      {"n_decomp", c.n_decomp},
                      {"seed", c.seed},
                      {"level", c.level},
                      {"boundary_clamp", c.boundary_clamp}};
  if (c.tail_ratio) j["tail_ratio"] = *c.tail_ratio == TailRatioMode::Unit ? "unit" : "estimate";
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  return j;
}

/// Fitted pieces that map a row of original values to the Pareto scale.
struct ScaleMap {
  const ModelDocument* doc;

  double to_model(std::size_t col, double x, const std::string& label) const {
    double v = x;
    if (!doc->trends.empty()) {
      const auto t = doc->time_index.nearest(label);
      const auto& tr = doc->trends[col];
      v = (v - tr.means[t]) / tr.sds[t];
    }
    if (!doc->marginals.empty()) return doc->marginals[col].to_pareto(v);
    return v;
  }

  double to_original(std::size_t col, double z, const std::string& label) const {
    double v = doc->marginals.empty() ? z : doc->marginals[col].from_pareto(z);
    if (!doc->trends.empty()) v = retrend(doc->trends[col], v, doc->time_index.nearest(label));
    return v;
  }

  bool has_original() const { return !doc->marginals.empty() || !doc->trends.empty(); }
};

inline std::vector<std::string> resolve_columns(const CsvTable& table, const std::vector<std::string>& wanted,
                                                const std::string& time_column) {
  if (!wanted.empty()) return wanted;
  std::vector<std::string> out;
  for (const auto& h : table.header())
    if (h != time_column) out.push_back(h);
  return out;
}

inline ModelDocument run_fit(const CsvTable& table, const FitConfig& cfg) {
  if (cfg.target.empty()) throw ArgumentError("fit: a target column is required");
  if (!(cfg.quantile > 0.0 && cfg.quantile < 1.0)) throw ArgumentError("fit: quantile must lie in (0, 1)");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ArgumentError("fit: level must lie in (0, 1)");
  if (cfg.window != 0 && (cfg.window < 3 || cfg.window % 2 == 0))
    throw ArgumentError("fit: window must be 0 or an odd count of at least 3");

  ModelDocument doc;
  doc.config = config_json(cfg);
  doc.time_column = cfg.time_column.empty() ? detect_time_column(table) : cfg.time_column;
  doc.columns = resolve_columns(table, cfg.columns, doc.time_column);
  const auto tpos = std::find(doc.columns.begin(), doc.columns.end(), cfg.target);
  if (tpos == doc.columns.end()) throw ArgumentError("fit: target column '" + cfg.target + "' not found");
  doc.target = static_cast<std::size_t>(tpos - doc.columns.begin());
  if (doc.columns.size() < 2) throw ArgumentError("fit: need the target and at least one predictor");
  const std::size_t p = doc.columns.size();

  const DataFrame frame = load_frame(table, doc.columns, doc.time_column);
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto rows = complete_rows(frame, all);
  const std::size_t n = rows.size();
  doc.n_rows = n;
  std::vector<std::string> labels;
  for (std::size_t r : rows) labels.push_back(frame.labels[r]);
  doc.time_index = TimeIndex(labels);

  // Complete rows, original scale, then detrended.
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = frame.values[j][rows[i]];
  if (cfg.window > 0) {
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> col(x.col(static_cast<Eigen::Index>(j)).data(),
                              x.col(static_cast<Eigen::Index>(j)).data() + n);
      auto d = detrend(col, cfg.window);
      x.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::VectorXd>(d.values.data(), static_cast<Eigen::Index>(n));
      doc.trends.push_back(std::move(d.trend));
    }
  }

  doc.split = cfg.split;
  doc.split.seed = cfg.seed;
  const auto train = split_rows(n, doc.split).first;

  const ParetoSpec spec = ParetoSpec::centered();
  doc.delta = spec.shift();
  Eigen::MatrixXd z(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    std::vector<double> sample;
    sample.reserve(train.size());
    for (std::size_t i : train) sample.push_back(x(static_cast<Eigen::Index>(i), jj));
    if (cfg.marginal == MarginalMode::Semiparametric) {
      MarginalOptions mo;
      mo.gpd_tail = cfg.gpd_tail;
      mo.tail_prob = cfg.tail_prob;
      mo.seed = cfg.seed + j;
      try {
        doc.marginals.push_back(MarginalTransform::fit(sample, doc.delta, mo));
      } catch (const Error& e) {
        throw NumericError("fit: marginal of column '" + doc.columns[j] + "': " + e.what());
      }
      for (std::size_t i = 0; i < sample.size(); ++i)
        z(static_cast<Eigen::Index>(i), jj) = doc.marginals.back().to_pareto(sample[i]);
    } else {
      for (std::size_t i = 0; i < sample.size(); ++i) {
        if (!(sample[i] > 0.0))
          throw ArgumentError("fit: identity marginals need positive data; column '" + doc.columns[j] +
                              "' has " + format_double(sample[i]));
        z(static_cast<Eigen::Index>(i), jj) = sample[i];
      }
    }
  }

  const TailRatioMode trm = cfg.tail_ratio.value_or(
      cfg.marginal == MarginalMode::Semiparametric ? TailRatioMode::Unit : TailRatioMode::Estimate);
  if (trm == TailRatioMode::Unit) {
    doc.tail_ratios = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
  } else {
    doc.tail_ratios = estimate_tail_ratios(z, cfg.quantile, spec);
  }
  doc.tpdm = estimate_pairwise(z, cfg.quantile, doc.tail_ratios);
  const auto part = PartitionedTPDM::from(doc.tpdm, static_cast<Eigen::Index>(doc.target));
  doc.weights = solve_weights(part);
  doc.k = prediction_error_K(part, doc.weights);
  doc.gamma = prediction_ip_matrix(part, doc.weights);

  doc.qstar = cfg.qstar;
  doc.n_decomp = cfg.n_decomp;
  doc.cp_seed = cfg.seed;
  doc.factors = factor_ensemble(doc.gamma, cfg.qstar, cfg.n_decomp, doc.cp_seed);
  doc.measure = masses_from_ensemble(doc.factors, cfg.n_decomp);

  KdeOptions ko;
  ko.bandwidth = cfg.bandwidth;
  ko.boundary_clamp = cfg.boundary_clamp;
  auto density = std::make_shared<const AngularDensity>(kde_angular(doc.measure, ko));
  doc.bandwidth = density->bandwidth();
  doc.boundary_clamp = cfg.boundary_clamp;
  doc.level = cfg.level;
  doc.region = joint_region(doc.measure, cfg.level);
  doc.unit_interval = ray_interval(density, cfg.level);
  verify_document(doc);
  return doc;
}

// Predict -------------------------------------------------------------------

enum class RowSelection { All, Train, Test };

struct PredictConfig {
  std::optional<double> filter_quantile = 0.95;  // empty keeps every row
  RowSelection rows = RowSelection::All;
  std::optional<double> level;                   // defaults to the fitted level
};

struct PredictionRow {
  std::size_t row = 0;  // row index in the input table
  std::string label;
  double x_hat = 0.0;
  Interval interval{0.0, 0.0};
  std::optional<double> x_true;
  std::optional<double> x_hat_orig;
  std::optional<Interval> interval_orig;
  std::optional<double> x_true_orig;
};

struct Predictions {
  std::vector<PredictionRow> rows;
  std::size_t n_candidates = 0;
  double threshold = 0.0;
  double level = 0.95;
  bool has_time = false;
  bool original_scale = false;
};

inline Predictions run_predict(const ModelDocument& doc, const CsvTable& table, const PredictConfig& cfg) {
  if (cfg.filter_quantile && !(*cfg.filter_quantile >= 0.0 && *cfg.filter_quantile < 1.0))
    throw ArgumentError("predict: filter quantile must lie in [0, 1)");
  const double level = cfg.level.value_or(doc.level);
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("predict: level must lie in (0, 1)");
  if (!doc.time_column.empty() && !table.find(doc.time_column))
    throw ArgumentError("predict: input lacks the time column '" + doc.time_column + "'");

  const auto predictors = doc.predictor_names();
  for (const auto& c : predictors)
    if (!table.find(c)) throw ArgumentError("predict: input lacks predictor column '" + c + "'");
  const bool has_target = table.find(doc.target_name()).has_value();

  std::vector<std::string> cols = predictors;
  if (has_target) cols.push_back(doc.target_name());
  const DataFrame frame = load_frame(table, cols, doc.time_column);
  std::vector<std::size_t> pred_cols(predictors.size());
  std::iota(pred_cols.begin(), pred_cols.end(), std::size_t{0});

  std::vector<std::size_t> candidates;
  if (cfg.rows == RowSelection::All) {
    candidates = complete_rows(frame, pred_cols);
  } else {
    if (!has_target) throw ArgumentError("predict: train/test selection needs the target column");
    std::vector<std::size_t> every(cols.size());
    std::iota(every.begin(), every.end(), std::size_t{0});
    const auto complete = complete_rows(frame, every);
    if (complete.size() != doc.n_rows)
      throw ArgumentError("predict: input has " + std::to_string(complete.size()) +
                          " complete rows but the model was fitted on " + std::to_string(doc.n_rows) +
                          "; train/test selection needs the fitting data");
    const auto [train, test] = split_rows(doc.n_rows, doc.split);
    for (std::size_t i : cfg.rows == RowSelection::Train ? train : test) candidates.push_back(complete[i]);
  }

  // Column positions in the model for each frame column.
  std::vector<std::size_t> model_col;
  for (const auto& c : cols)
    model_col.push_back(static_cast<std::size_t>(std::find(doc.columns.begin(), doc.columns.end(), c) - doc.columns.begin()));

  const ScaleMap map{&doc};
  Eigen::MatrixXd zp(static_cast<Eigen::Index>(candidates.size()), static_cast<Eigen::Index>(predictors.size()));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const std::size_t r = candidates[i];
    for (std::size_t j = 0; j < predictors.size(); ++j)
      zp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          map.to_model(model_col[j], frame.values[j][r], frame.labels[r]);
  }
  const Eigen::VectorXd xh = predict_rows(doc.weights, zp);

  Predictions out;
  out.level = level;
  out.n_candidates = candidates.size();
  out.has_time = !doc.time_column.empty();
  out.original_scale = map.has_original();
  if (candidates.empty()) return out;
  out.threshold = -std::numeric_limits<double>::infinity();
  if (cfg.filter_quantile && *cfg.filter_quantile > 0.0)
    out.threshold = quantile(std::vector<double>(xh.data(), xh.data() + xh.size()), *cfg.filter_quantile);

  Interval unit = doc.unit_interval;
  if (std::abs(level - doc.level) > 1e-15) unit = ray_interval(doc.angular_density(), level);

  const std::size_t tcol = doc.target;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double v = xh[static_cast<Eigen::Index>(i)];
    if (!(v > out.threshold)) continue;
    const std::size_t r = candidates[i];
    PredictionRow pr;
    pr.row = r;
    pr.label = frame.labels[r];
    pr.x_hat = v;
    pr.interval = {unit.lo * v, unit.hi * v};
    if (has_target) {
      const double raw = frame.values.back()[r];
      if (!std::isnan(raw)) {
        pr.x_true = map.to_model(tcol, raw, pr.label);
        if (out.original_scale) pr.x_true_orig = raw;
      }
    }
    if (out.original_scale) {
      pr.x_hat_orig = map.to_original(tcol, v, pr.label);
      pr.interval_orig = Interval{map.to_original(tcol, pr.interval.lo, pr.label),
                                  map.to_original(tcol, pr.interval.hi, pr.label)};
    }
    out.rows.push_back(std::move(pr));
  }
  return out;
}

inline CsvTable predictions_table(const Predictions& p) {
  std::vector<std::string> header{"row"};
  if (p.has_time) header.push_back("time");
  for (const char* h : {"x_hat", "lo", "hi", "x_true"}) header.push_back(h);
  if (p.original_scale)
    for (const char* h : {"x_hat_orig", "lo_orig", "hi_orig", "x_true_orig"}) header.push_back(h);
  CsvTable t(header);
  const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  for (const auto& r : p.rows) {
    std::vector<std::string> cells{std::to_string(r.row)};
    if (p.has_time) cells.push_back(r.label);
    cells.push_back(format_double(r.x_hat));
    cells.push_back(format_double(r.interval.lo));
    cells.push_back(format_double(r.interval.hi));
    cells.push_back(opt(r.x_true));
    if (p.original_scale) {
      cells.push_back(opt(r.x_hat_orig));
      cells.push_back(r.interval_orig ? format_double(r.interval_orig->lo) : "NA");
      cells.push_back(r.interval_orig ? format_double(r.interval_orig->hi) : "NA");
      cells.push_back(opt(r.x_true_orig));
    }
    t.add_row(std::move(cells));
  }
  return t;
}

/// Conditional density grids of the retained rows in long format, scaled
/// from the density on the unit ray.
inline CsvTable density_grid_table(const ModelDocument& doc, const Predictions& p) {
  CsvTable t({"row", "x", "density"});
  if (p.rows.empty()) return t;
  const ConditionalDensity unit(doc.angular_density(), 1.0);
  for (const auto& r : p.rows) {
    for (std::size_t i = 0; i < unit.grid().size(); ++i)
      t.add_row({std::to_string(r.row), format_double(r.x_hat * unit.grid()[i]),
                 format_double(unit.density()[i] / r.x_hat)});
  }
  return t;
}

/// Fraction of pairs with |(x_hat, x)| above its `radius_quantile` that fall
/// in the joint region.
inline double joint_region_fraction(const JointRegion& region, const std::vector<PredictionPair>& pairs,
                                    double radius_quantile = 0.95) {
  if (pairs.empty()) throw ArgumentError("joint_region_fraction: no pairs");
  std::vector<double> radius;
  for (const auto& p : pairs) radius.push_back(std::hypot(p.x_hat, p.x_true));
  const double r_star = quantile(radius, radius_quantile);
  std::size_t in = 0, total = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(radius[i] > r_star)) continue;
    ++total;
    in += region.contains(pairs[i].x_hat, pairs[i].x_true) ? 1 : 0;
  }
  if (total == 0) throw ArgumentError("joint_region_fraction: no pair exceeds the radius threshold");
  return static_cast<double>(in) / static_cast<double>(total);
}

// Assess --------------------------------------------------------------------

struct ReferenceReport {
  ReferenceScale scale = ReferenceScale::Raw;
  double coverage = 0.0;
  double mean_width = 0.0;
  double width_ratio = 0.0;  // transformed-linear mean width / reference mean width
  std::size_t n = 0;
};

struct AssessReport {
  double coverage = 0.0;
  std::size_t n_retained = 0;
  double mean_width = 0.0;
  std::optional<double> coverage_orig;
  std::optional<double> mean_width_orig;
  std::optional<ReferenceReport> reference;
};

struct AssessedRow {
  std::size_t row;
  double lo, hi, truth;
};

/// Rows of a predictions table that carry a truth value, on the Pareto
/// scale or (orig = true) the original scale.
inline std::vector<AssessedRow> assessed_rows(const CsvTable& t, bool orig) {
  const std::string sfx = orig ? "_orig" : "";
  for (const std::string c : {"lo", "hi", "x_true"})
    if (!t.find(c + sfx)) throw ArgumentError("assess: predictions lack the '" + c + sfx + "' column");
  const auto lo = t.numeric_column(t.index_of("lo" + sfx));
  const auto hi = t.numeric_column(t.index_of("hi" + sfx));
  const auto tr = t.numeric_column(t.index_of("x_true" + sfx));
  std::vector<double> row(t.rows(), std::numeric_limits<double>::quiet_NaN());
  if (t.find("row")) row = t.numeric_column(t.index_of("row"));
  std::vector<AssessedRow> out;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    if (std::isnan(tr[i]) || std::isnan(lo[i]) || std::isnan(hi[i])) continue;
    out.push_back({std::isnan(row[i]) ? i : static_cast<std::size_t>(row[i]), lo[i], hi[i], tr[i]});
  }
  return out;
}

inline std::pair<double, double> coverage_and_width(const std::vector<AssessedRow>& rows) {
  std::size_t hits = 0;
  double width = 0.0;
  for (const auto& r : rows) {
    hits += (r.truth >= r.lo && r.truth <= r.hi) ? 1 : 0;
    width += r.hi - r.lo;
  }
  const auto n = static_cast<double>(rows.size());
  return {static_cast<double>(hits) / n, width / n};
}

struct ReferenceInputs {
  const ModelDocument* doc;
  const CsvTable* data;
  ReferenceScale scale = ReferenceScale::Raw;
  double level = 0.95;
};

inline AssessReport run_assess(const CsvTable& predictions, const std::optional<ReferenceInputs>& ref = {}) {
  AssessReport rep;
  const auto rows = assessed_rows(predictions, false);
  if (rows.empty()) throw ArgumentError("assess: no prediction row has a truth value");
  rep.n_retained = rows.size();
  std::tie(rep.coverage, rep.mean_width) = coverage_and_width(rows);
  const bool has_orig = predictions.find("x_true_orig").has_value();
  if (has_orig) {
    const auto orows = assessed_rows(predictions, true);
    if (!orows.empty()) {
      const auto [c, w] = coverage_and_width(orows);
      rep.coverage_orig = c;
      rep.mean_width_orig = w;
    }
  }
  if (!ref) return rep;

  // Reference on the complete rows of the fitting data: detrended when the
  // model was, never marginally transformed.
  const ModelDocument& doc = *ref->doc;
  const DataFrame frame = load_frame(*ref->data, doc.columns, doc.time_column);
  std::vector<std::size_t> all(doc.columns.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto complete = complete_rows(frame, all);
  if (complete.size() != doc.n_rows)
    throw ArgumentError("assess: reference data has " + std::to_string(complete.size()) +
                        " complete rows, the model was fitted on " + std::to_string(doc.n_rows));
  const auto p = static_cast<Eigen::Index>(doc.columns.size());
  auto value = [&](std::size_t r, std::size_t j) {
    double v = frame.values[j][r];
    if (!doc.trends.empty()) {
      const auto t = doc.time_index.nearest(frame.labels[r]);
      v = (v - doc.trends[j].means[t]) / doc.trends[j].sds[t];
    }
    return v;
  };
  const auto train = split_rows(doc.n_rows, doc.split).first;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(train.size()), p);
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t j = 0; j < doc.columns.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value(complete[train[i]], j);
  const auto g = GaussianReference::fit(m, static_cast<Eigen::Index>(doc.target), ref->scale);

  const auto ours = assessed_rows(predictions, has_orig);
  ReferenceReport rr;
  rr.scale = ref->scale;
  std::vector<AssessedRow> theirs;
  for (const auto& r : ours) {
    if (r.row >= frame.labels.size()) throw ArgumentError("assess: prediction row outside the data");
    Eigen::VectorXd x(p);
    bool ok = true;
    for (std::size_t j = 0; j < doc.columns.size(); ++j) {
      x[static_cast<Eigen::Index>(j)] = value(r.row, j);
      ok = ok && !std::isnan(x[static_cast<Eigen::Index>(j)]);
    }
    if (!ok) continue;
    Interval iv = g.interval(x, ref->level);
    if (!doc.trends.empty()) {
      const auto t = doc.time_index.nearest(frame.labels[r.row]);
      iv = {retrend(doc.trends[doc.target], iv.lo, t), retrend(doc.trends[doc.target], iv.hi, t)};
    }
    theirs.push_back({r.row, iv.lo, iv.hi, frame.values[doc.target][r.row]});
  }
  if (theirs.empty()) throw ArgumentError("assess: no prediction row matches the reference data");
  rr.n = theirs.size();
  std::tie(rr.coverage, rr.mean_width) = coverage_and_width(theirs);
  const double ours_width = coverage_and_width(ours).second;
  rr.width_ratio = ours_width / rr.mean_width;
  rep.reference = rr;
  return rep;
}

inline nlohmann::json to_json(const AssessReport& r) {
  nlohmann::json j = {{"coverage", r.coverage}, {"n_retained", r.n_retained}, {"mean_width", r.mean_width}};
  if (r.coverage_orig) j["coverage_orig"] = *r.coverage_orig;
  if (r.mean_width_orig) j["mean_width_orig"] = *r.mean_width_orig;
  if (r.reference) {
    const auto& g = *r.reference;
    j["reference"] = {{"method", g.scale == ReferenceScale::Raw ? "gaussian-blup" : "gaussian-blup-normal-scores"},
                      {"coverage", g.coverage},
                      {"mean_width", g.mean_width},
                      {"width_ratio", g.width_ratio},
                      {"n", g.n}};
  }
  return j;
}

}  // namespace tlpred

#endif  // TLPRED_PIPELINE_HPP
