// Fitted model document: everything `predict` needs, persisted as JSON.
// Loading re-runs the internal consistency checks.

#ifndef TLPRED_DOCUMENT_HPP
#define TLPRED_DOCUMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "tlpred/angular.hpp"
#include "tlpred/cpfactor.hpp"
#include "tlpred/csv.hpp"
#include "tlpred/error.hpp"
#include "tlpred/marginal.hpp"
#include "tlpred/predictor.hpp"
#include "tlpred/tpdm.hpp"

namespace tlpred {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kDocumentFormat = "tlpred-model/1";

enum class SplitMode { Head, Random };

struct SplitConfig {
  SplitMode mode = SplitMode::Random;
  double fraction = 2.0 / 3.0;
  std::size_t head_rows = 0;  // Head mode: rows in the training part; 0 uses fraction
  std::uint64_t seed = 0;
};

/// Time labels of the fitted rows, for looking up a stored trend. Labels
/// that all parse as numbers are ordered numerically, otherwise lexically
/// (ISO dates order correctly either way).
class TimeIndex {
 public:
  TimeIndex() = default;
  explicit TimeIndex(std::vector<std::string> labels) : labels_(std::move(labels)) {
    numeric_ = std::all_of(labels_.begin(), labels_.end(),
                           [](const std::string& s) { return parse_double(s).has_value(); });
    order_.resize(labels_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [this](std::size_t a, std::size_t b) { return less(labels_[a], labels_[b]); });
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool empty() const noexcept { return labels_.empty(); }

  /// Position of the label, or of the nearest stored label when absent.
  std::size_t nearest(const std::string& label) const {
    if (labels_.empty()) throw ArgumentError("TimeIndex: no stored labels");
    const auto it = std::lower_bound(order_.begin(), order_.end(), label,
                                     [this](std::size_t i, const std::string& l) { return less(labels_[i], l); });
    if (it == order_.end()) return order_.back();
    if (labels_[*it] == label || it == order_.begin()) return *it;
    if (numeric_) {
      if (auto v = parse_double(label)) {
        const double after = *parse_double(labels_[*it]);
        const double before = *parse_double(labels_[*(it - 1)]);
        return (after - *v) < (*v - before) ? *it : *(it - 1);
      }
    }
    return *(it - 1);
  }

 private:
  bool less(const std::string& a, const std::string& b) const {
    if (numeric_) {
      const auto x = parse_double(a), y = parse_double(b);
      if (x && y) return *x < *y;
    }
    return a < b;
  }

  std::vector<std::string> labels_;
  std::vector<std::size_t> order_;
  bool numeric_ = false;
};

struct ModelDocument {
  std::string version = kVersion;
  nlohmann::json config;                 // echo of the fit settings

  std::vector<std::string> columns;      // modeled columns, TPDM order
  std::size_t target = 0;                // index into columns
  std::string time_column;               // empty: original row index labels the rows
  std::size_t n_rows = 0;                // complete rows used for the fit
  SplitConfig split;

  double delta = 0.0;
  std::vector<MarginalTransform> marginals;  // empty: identity marginals
  std::vector<TrendModel> trends;            // empty: no detrending
  TimeIndex time_index;                      // labels of the fitted rows

  Eigen::VectorXd tail_ratios;
  TPDM tpdm;
  PredictionWeights weights;
  double k = 0.0;
  Eigen::Matrix2d gamma = Eigen::Matrix2d::Zero();

  int qstar = 9;
  int n_decomp = 51;
  std::uint64_t cp_seed = 0;
  std::vector<CPFactor> factors;
  AngularMeasureEstimate measure;

  double level = 0.95;
  double bandwidth = 0.0;
  double boundary_clamp = 0.01;
  JointRegion region{0.0, 0.0};
  Interval unit_interval{0.0, 0.0};  // conditional interval at x_hat = 1

  std::vector<std::string> predictor_names() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (i != target) out.push_back(columns[i]);
    return out;
  }
  const std::string& target_name() const { return columns.at(target); }

  std::shared_ptr<const AngularDensity> angular_density() const {
    KdeOptions opt;
    opt.bandwidth = bandwidth;
    opt.boundary_clamp = boundary_clamp;
    return std::make_shared<const AngularDensity>(kde_angular(measure, opt));
  }
};

/// Normal equations against the stored TPDM and mass of the atoms against
/// trace(Gamma). Throws NumericError naming the failed check.
inline void verify_document(const ModelDocument& doc) {
  const auto p = static_cast<Eigen::Index>(doc.columns.size());
  if (doc.tpdm.entries.rows() != p || doc.tpdm.entries.cols() != p)
    throw NumericError("model document: TPDM size does not match the column list");
  if (doc.target >= doc.columns.size()) throw NumericError("model document: target out of range");
  if (!doc.marginals.empty() && doc.marginals.size() != doc.columns.size())
    throw NumericError("model document: one marginal transform per column is required");
  if (!doc.trends.empty() && doc.trends.size() != doc.columns.size())
    throw NumericError("model document: one trend per column is required");
  const auto part = PartitionedTPDM::from(doc.tpdm, static_cast<Eigen::Index>(doc.target));
  if (doc.weights.b.size() != part.s12.size())
    throw NumericError("model document: weight vector has the wrong length");
  const double scale = std::max(1.0, part.s11.cwiseAbs().maxCoeff());
  const double resid = normal_equation_residual(part, doc.weights);
  if (!(resid < 1e-9 * scale))
    throw NumericError("model document: weights violate the normal equations (residual " +
                       std::to_string(resid) + ")");
  if (std::abs(doc.k - prediction_error_K(part, doc.weights)) > 1e-9 * std::max(1.0, part.s22))
    throw NumericError("model document: K does not match the TPDM and weights");
  const double tr = doc.gamma.trace();
  if (std::abs(doc.measure.total_mass - tr) > 1e-8 * std::max(1.0, tr))
    throw NumericError("model document: angular mass " + std::to_string(doc.measure.total_mass) +
                       " differs from trace(Gamma) " + std::to_string(tr));
}

// JSON ----------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = n ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != m) throw IoError("model document: ragged matrix");
    for (Eigen::Index c = 0; c < m; ++c) out(i, c) = j.at(i).at(c).get<double>();
  }
  return out;
}

inline json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline json marginal_json(const MarginalTransform& m) {
  json j = {{"delta", m.delta()},
            {"tail_prob", m.tail_prob()},
            {"threshold", m.threshold()},
            {"sorted_sample", m.sorted_sample()}};
  if (m.gpd()) {
    const auto& g = *m.gpd();
    j["gpd"] = {{"sigma", g.sigma}, {"xi", g.xi}, {"u", g.u}, {"n_exceed", g.n_exceed},
                {"neg_loglik", g.neg_loglik}, {"converged", g.converged}};
  } else {
    j["gpd"] = nullptr;
  }
  return j;
}

inline MarginalTransform marginal_from(const json& j) {
  std::optional<GPDParams> gpd;
  if (!j.at("gpd").is_null()) {
    const auto& g = j.at("gpd");
    GPDParams p;
    p.sigma = g.at("sigma").get<double>();
    p.xi = g.at("xi").get<double>();
    p.u = g.at("u").get<double>();
    p.n_exceed = g.at("n_exceed").get<std::size_t>();
    p.neg_loglik = g.at("neg_loglik").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                : g.at("neg_loglik").get<double>();
    p.converged = g.at("converged").get<bool>();
    gpd = p;
  }
  return MarginalTransform::from_parts(j.at("sorted_sample").get<std::vector<double>>(),
                                       j.at("delta").get<double>(), j.at("tail_prob").get<double>(),
                                       gpd);
}

}  // namespace detail

inline nlohmann::json to_json(const ModelDocument& d) {
  using detail::json;
  json j;
  j["format"] = kDocumentFormat;
  j["version"] = d.version;
  j["config"] = d.config;
  j["columns"] = d.columns;
  j["target"] = d.target_name();
  j["time_column"] = d.time_column;
  j["n_rows"] = d.n_rows;
  j["split"] = {{"mode", d.split.mode == SplitMode::Head ? "head" : "random"},
                {"fraction", d.split.fraction},
                {"head_rows", d.split.head_rows},
                {"seed", d.split.seed}};
  j["delta"] = d.delta;

  json marg = json::array();
  for (const auto& m : d.marginals) marg.push_back(detail::marginal_json(m));
  j["marginals"] = std::move(marg);

  json tr = json::array();
  for (const auto& t : d.trends) tr.push_back({{"window", t.window}, {"means", t.means}, {"sds", t.sds}});
  j["trends"] = std::move(tr);
  j["time_labels"] = d.time_index.labels();

  j["tail_ratios"] = detail::vector_json(d.tail_ratios);
  j["tpdm"] = {{"entries", detail::matrix_json(d.tpdm.entries)},
               {"quantile", d.tpdm.quantile},
               {"psd_repaired", d.tpdm.psd_repaired},
               {"exceedances", detail::matrix_json(d.tpdm.exceedances.cast<double>())}};
  j["weights"] = {{"b", detail::vector_json(d.weights.b)},
                  {"predictors", d.predictor_names()},
                  {"condition", d.weights.condition},
                  {"jitter", d.weights.jitter}};
  j["K"] = d.k;
  j["gamma"] = detail::matrix_json(d.gamma);

  json fac = json::array();
  for (const auto& f : d.factors)
    fac.push_back({{"seed", f.seed}, {"iterations", f.iterations}, {"restarts", f.restarts},
                   {"B", detail::matrix_json(f.b)}});
  j["ensemble"] = {{"qstar", d.qstar}, {"n_decomp", d.n_decomp}, {"seed", d.cp_seed}, {"factors", std::move(fac)}};

  json atoms = json::array();
  for (const auto& a : d.measure.atoms) atoms.push_back({a.weight, a.angle});
  j["angular"] = {{"total_mass", d.measure.total_mass},
                  {"atoms", std::move(atoms)},
                  {"bandwidth", d.bandwidth},
                  {"boundary_clamp", d.boundary_clamp}};
  j["level"] = d.level;
  j["joint_region"] = {d.region.theta_lo, d.region.theta_hi};
  j["unit_interval"] = {d.unit_interval.lo, d.unit_interval.hi};
  return j;
}

inline ModelDocument document_from_json(const nlohmann::json& j) {
  ModelDocument d;
  try {
    if (j.value("format", std::string{}) != kDocumentFormat)
      throw IoError("model document: unrecognized format tag");
    d.version = j.at("version").get<std::string>();
    d.config = j.value("config", nlohmann::json::object());
    d.columns = j.at("columns").get<std::vector<std::string>>();
    const auto target = j.at("target").get<std::string>();
    const auto it = std::find(d.columns.begin(), d.columns.end(), target);
    if (it == d.columns.end()) throw IoError("model document: target is not among the columns");
    d.target = static_cast<std::size_t>(it - d.columns.begin());
    d.time_column = j.at("time_column").get<std::string>();
    d.n_rows = j.at("n_rows").get<std::size_t>();
    const auto& sp = j.at("split");
    d.split.mode = sp.at("mode").get<std::string>() == "head" ? SplitMode::Head : SplitMode::Random;
    d.split.fraction = sp.at("fraction").get<double>();
    d.split.head_rows = sp.at("head_rows").get<std::size_t>();
    d.split.seed = sp.at("seed").get<std::uint64_t>();
    d.delta = j.at("delta").get<double>();
    for (const auto& m : j.at("marginals")) d.marginals.push_back(detail::marginal_from(m));
    for (const auto& t : j.at("trends"))
      d.trends.push_back(TrendModel{t.at("window").get<int>(), t.at("means").get<std::vector<double>>(),
                                    t.at("sds").get<std::vector<double>>()});
    d.time_index = TimeIndex(j.at("time_labels").get<std::vector<std::string>>());
    d.tail_ratios = detail::vector_from(j.at("tail_ratios"));
    const auto& tp = j.at("tpdm");
    d.tpdm.entries = detail::matrix_from(tp.at("entries"));
    d.tpdm.quantile = tp.at("quantile").get<double>();
    d.tpdm.psd_repaired = tp.at("psd_repaired").get<bool>();
    d.tpdm.exceedances = detail::matrix_from(tp.at("exceedances")).cast<int>();
    const auto& w = j.at("weights");
    d.weights.b = detail::vector_from(w.at("b"));
    d.weights.condition = w.at("condition").get<double>();
    d.weights.jitter = w.at("jitter").get<double>();
    d.k = j.at("K").get<double>();
    d.gamma = detail::matrix_from(j.at("gamma"));
    const auto& en = j.at("ensemble");
    d.qstar = en.at("qstar").get<int>();
    d.n_decomp = en.at("n_decomp").get<int>();
    d.cp_seed = en.at("seed").get<std::uint64_t>();
    for (const auto& f : en.at("factors"))
      d.factors.push_back(CPFactor{detail::matrix_from(f.at("B")), f.at("seed").get<std::uint64_t>(),
                                   f.at("iterations").get<int>(), f.at("restarts").get<int>()});
    const auto& an = j.at("angular");
    d.measure.total_mass = an.at("total_mass").get<double>();
    for (const auto& a : an.at("atoms")) d.measure.atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    d.bandwidth = an.at("bandwidth").get<double>();
    d.boundary_clamp = an.at("boundary_clamp").get<double>();
    d.level = j.at("level").get<double>();
    d.region = {j.at("joint_region").at(0).get<double>(), j.at("joint_region").at(1).get<double>()};
    d.unit_interval = {j.at("unit_interval").at(0).get<double>(), j.at("unit_interval").at(1).get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model document: ") + e.what());
  }
  verify_document(d);
  return d;
}

inline void write_document(const ModelDocument& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_json(d).dump(1) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ModelDocument read_document(const std::string& path) {
  return document_from_json(read_json_file(path));
}

// TPDM as CSV: header of column names, p rows.
inline CsvTable tpdm_table(const Eigen::MatrixXd& s, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != s.rows())
    throw ArgumentError("tpdm_table: one name per row is required");
  CsvTable t(names);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < s.cols(); ++j) row.push_back(format_double(s(i, j)));
    t.add_row(std::move(row));
  }
  return t;
}

inline Eigen::MatrixXd tpdm_from_table(const CsvTable& t) {
  const auto p = static_cast<Eigen::Index>(t.cols());
  if (static_cast<Eigen::Index>(t.rows()) != p) throw IoError("TPDM CSV must be square");
  Eigen::MatrixXd s(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const auto col = t.numeric_column(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::isnan(col[static_cast<std::size_t>(i)])) throw IoError("TPDM CSV has a missing entry");
      s(i, j) = col[static_cast<std::size_t>(i)];
    }
  }
  return s;
}

}  // namespace tlpred

#endif  // TLPRED_DOCUMENT_HPP
