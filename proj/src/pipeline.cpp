#include "ccafuse/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ccafuse/deflation.hpp"
#include "ccafuse/errors.hpp"
#include "ccafuse/io.hpp"
#include "ccafuse/metrics.hpp"
#include "ccafuse/predictors.hpp"
#include "ccafuse/random.hpp"
#include "json.hpp"

namespace ccafuse {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- helpers

std::uint64_t run_seed(const RunOptions& opts) {
  if (opts.seed) return *opts.seed;
  return static_cast<std::uint64_t>(opts.config.get_int("run", "seed", 0));
}

fs::path data_dir(const RunOptions& opts) { return opts.config.get_path("paths", "data", opts.out); }

fs::path embeddings_dir(const RunOptions& opts) {
  return opts.config.get_path("paths", "embeddings", opts.out);
}

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json summary_json(const Summary& s) {
  return {{"mean", number(s.mean)}, {"std", number(s.std)}, {"count", s.count}};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

MatrixXd columns(const MatrixXd& m, const std::vector<int>& idx) {
  MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = m.col(idx[c]);
  return out;
}

MatrixXd stack(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() + b.rows(), a.cols());
  out << a, b;
  return out;
}

struct Dataset {
  LabeledMatrix x;
  LabeledMatrix y;
  std::optional<LabeledMatrix> z;
  std::vector<Fold> folds;
};

Dataset load_dataset(const fs::path& dir, bool need_z) {
  Dataset ds;
  ds.x = read_matrix_csv(dir / "X.csv");
  ds.y = read_matrix_csv(dir / "Y.csv");
  if (ds.x.col_ids != ds.y.col_ids) throw DataError("X.csv and Y.csv list different samples");
  if (need_z) {
    ds.z = read_matrix_csv(dir / "Z.csv");
    if (ds.z->col_ids != ds.x.col_ids) throw DataError("Z.csv and X.csv list different samples");
  }
  ds.folds = read_folds(dir / "folds.json");
  const auto n = static_cast<int>(ds.x.values.cols());
  for (const auto& f : ds.folds) {
    for (const auto* set : {&f.train, &f.val, &f.test})
      for (int i : *set)
        if (i < 0 || i >= n) throw DataError("folds.json refers to sample " + std::to_string(i));
  }
  return ds;
}

int fold_count(const RunOptions& opts, std::size_t available) {
  long long limit = opts.folds ? *opts.folds : opts.config.get_int("run", "folds", 0);
  if (limit < 0) throw ConfigError("fold limit must be non-negative");
  const auto n = static_cast<long long>(available);
  return static_cast<int>(limit == 0 ? n : std::min(limit, n));
}

// Runs fn(fold) for every fold on up to `jobs` threads. fn must not throw.
template <typename Fn>
void run_folds(int n_folds, int jobs, Fn&& fn) {
  const int workers = std::max(1, std::min(jobs, n_folds));
  if (workers == 1) {
    for (int f = 0; f < n_folds; ++f) fn(f);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int f = next++; f < n_folds; f = next++) fn(f);
    });
  }
  for (auto& t : pool) t.join();
}

struct FoldOutcome {
  bool ok = false;
  std::string error;
  json detail;
};

template <typename Body>
FoldOutcome guarded(Body&& body) {
  FoldOutcome out;
  try {
    out.detail = body();
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

CommandResult tally(const std::vector<FoldOutcome>& outcomes) {
  CommandResult r;
  for (const auto& o : outcomes) (o.ok ? r.folds_ok : r.folds_failed)++;
  return r;
}

void warn_failures(const char* command, const std::vector<FoldOutcome>& outcomes) {
  for (std::size_t f = 0; f < outcomes.size(); ++f) {
    if (!outcomes[f].ok)
      std::cerr << command << ": " << fold_name(static_cast<int>(f)) << " failed: "
                << outcomes[f].error << '\n';
  }
}

// ---------------------------------------------------------------- embedding

struct Candidate {
  std::string label;
  PairSolver solver;
};

std::vector<Candidate> build_candidates(const Config& cfg, const DataMatrix& x_train,
                                        const DataMatrix& y_train) {
  const std::string solver = cfg.get("embed", "solver", "scca");
  const auto p = x_train.n_features();
  const auto q = y_train.n_features();
  PenaltyConfig base;
  base.tol = cfg.get_double("embed", "tol", 1e-6);
  base.max_iter = static_cast<int>(cfg.get_int("embed", "max_iter", 100));

  std::vector<Candidate> out;
  if (solver == "cca") {
    out.push_back({"cca", CcaSolver{cfg.get_double("embed", "ridge", -1.0)}});
  } else if (solver == "scca") {
    for (double f : cfg.get_list("embed", "c_grid", {0.1, 0.2, 0.3, 0.5})) {
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("embed.c_grid entries must lie in (0, 1]");
      PenaltyConfig pc = base;
      pc.c1 = std::max(1.0, f * std::sqrt(static_cast<double>(p)));
      pc.c2 = std::max(1.0, f * std::sqrt(static_cast<double>(q)));
      out.push_back({"c=" + format_double(f), SccaSolver{pc}});
    }
  } else if (solver == "gnscca") {
    GraphSpec gx, gy;
    const double threshold = cfg.get_double("embed", "graph_threshold", 0.5);
    gx = cfg.has("embed", "graph_x")
             ? load_edge_list(cfg.get_path("embed", "graph_x", ""), static_cast<int>(p))
             : graph_from_covariance(x_train, threshold);
    gy = cfg.has("embed", "graph_y")
             ? load_edge_list(cfg.get_path("embed", "graph_y", ""), static_cast<int>(q))
             : graph_from_covariance(y_train, threshold);
    for (double l1 : cfg.get_list("embed", "lambda_l1_grid", {0.01, 0.03})) {
      for (double lg : cfg.get_list("embed", "lambda_graph_grid", {0.1, 1.0})) {
        PenaltyConfig pc = base;
        pc.lambda_l1_u = pc.lambda_l1_v = l1;
        pc.lambda_graph_u = pc.lambda_graph_v = lg;
        pc.validate_graph_weights();
        out.push_back({"l1=" + format_double(l1) + ",graph=" + format_double(lg),
                       GnSccaSolver{pc, gx, gy}});
      }
    }
  } else {
    throw ConfigError("unknown solver '" + solver + "' (cca, scca, gnscca)");
  }
  return out;
}

json embed_fold(const RunOptions& opts, const Dataset& ds, int f) {
  const Config& cfg = opts.config;
  const Fold& fold = ds.folds[static_cast<std::size_t>(f)];
  const int k = static_cast<int>(cfg.get_int("embed", "k", 5));
  const DeflationScheme scheme = parse_scheme(cfg.get("embed", "scheme", "opd"));

  const MatrixXd xtr = columns(ds.x.values, fold.train);
  const MatrixXd ytr = columns(ds.y.values, fold.train);
  const auto sx = FeatureScaling::center_only(xtr);
  const auto sy = FeatureScaling::center_only(ytr);
  const DataMatrix x_train(sx.apply(xtr), true);
  const DataMatrix y_train(sy.apply(ytr), true);
  const DataMatrix x_val(sx.apply(columns(ds.x.values, fold.val)), true);
  const DataMatrix y_val(sy.apply(columns(ds.y.values, fold.val)), true);
  const DataMatrix x_test(sx.apply(columns(ds.x.values, fold.test)), true);
  const DataMatrix y_test(sy.apply(columns(ds.y.values, fold.test)), true);

  const auto candidates = build_candidates(cfg, x_train, y_train);
  json tuning = json::array();
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  EmbeddingBasis best_basis;
  DeflationTrace best_trace;
  std::string first_error;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    json entry = {{"candidate", candidates[c].label}};
    try {
      DeflationTrace trace;
      EmbeddingBasis basis =
          generate_embeddings(x_train, y_train, candidates[c].solver, scheme, k, &trace);
      const double score = additional_correlations(x_val, y_val, basis).sum();
      entry["val_sum"] = number(score);
      entry["k"] = basis.k();
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
        best_basis = std::move(basis);
        best_trace = std::move(trace);
      }
    } catch (const Error& e) {
      if (e.error_class() != ErrorClass::numerical) throw;
      entry["error"] = e.what();
      if (first_error.empty()) first_error = e.what();
    }
    tuning.push_back(entry);
  }
  const fs::path dir = opts.out / fold_name(f);
  write_json(dir / "tuning.json",
             {{"candidates", tuning},
              {"chosen", best >= 0 ? json(candidates[static_cast<std::size_t>(best)].label)
                                   : json(nullptr)}});
  if (best < 0) throw DegenerateError("every grid point failed: " + first_error);

  save_embedding(best_basis, dir);
  MetricReport train;
  train.additional_rhos = additional_correlations(x_train, y_train, best_basis);
  train.ortho_matrix = orthogonality_matrix(best_trace.cross, best_basis);
  MetricReport val;
  val.additional_rhos = additional_correlations(x_val, y_val, best_basis);
  MetricReport test;
  test.additional_rhos = additional_correlations(x_test, y_test, best_basis);
  write_text(dir / "metrics_train.json", metric_report_json(train));
  write_text(dir / "metrics_val.json", metric_report_json(val));
  write_text(dir / "metrics_test.json", metric_report_json(test));
  save_ortho_csv(train.ortho_matrix, dir / "ortho.csv");

  return {{"chosen", candidates[static_cast<std::size_t>(best)].label},
          {"k", best_basis.k()},
          {"truncated", best_basis.truncated()},
          {"stop_reason", best_basis.stop_reason},
          {"val_sum", number(val.additional_sum())},
          {"test_sum", number(test.additional_sum())}};
}

// ---------------------------------------------------------------- stage 2 inputs

struct EmbeddedFold {
  MatrixXd train[3];  // modality 1, modality 2, concatenated; standardized
  MatrixXd val[3];
  MatrixXd test[3];
};

// Projects the fold through (U, V) after centering with training statistics,
// then standardizes each input block with training statistics.
EmbeddedFold embed_inputs(const Dataset& ds, const Fold& fold, const MatrixXd* u,
                          const MatrixXd* v) {
  const std::vector<int>* sets[3] = {&fold.train, &fold.val, &fold.test};
  MatrixXd xs[3], ys[3];
  const MatrixXd xtr = columns(ds.x.values, fold.train);
  const MatrixXd ytr = columns(ds.y.values, fold.train);
  const auto cx = FeatureScaling::center_only(xtr);
  const auto cy = FeatureScaling::center_only(ytr);
  for (int s = 0; s < 3; ++s) {
    xs[s] = cx.apply(columns(ds.x.values, *sets[s]));
    ys[s] = cy.apply(columns(ds.y.values, *sets[s]));
    if (u) {
      xs[s] = u->transpose() * xs[s];
      ys[s] = v->transpose() * ys[s];
    }
  }
  const MatrixXd cat_train = stack(xs[0], ys[0]);
  const FeatureScaling scalers[3] = {FeatureScaling::standardize(xs[0]),
                                     FeatureScaling::standardize(ys[0]),
                                     FeatureScaling::standardize(cat_train)};
  EmbeddedFold out;
  MatrixXd* dest[3] = {out.train, out.val, out.test};
  for (int s = 0; s < 3; ++s) {
    dest[s][0] = scalers[0].apply(xs[s]);
    dest[s][1] = scalers[1].apply(ys[s]);
    dest[s][2] = scalers[2].apply(stack(xs[s], ys[s]));
  }
  return out;
}

struct LoadedBasis {
  MatrixXd u;
  MatrixXd v;
  std::string label;
};

LoadedBasis load_basis(const RunOptions& opts, int f) {
  const EmbeddingBasis b = load_embedding(embeddings_dir(opts) / fold_name(f));
  return {b.u_mat, b.v_mat, b.solver + "+" + scheme_name(b.scheme)};
}

const char* const kInputColumns[3] = {"Modality 1", "Modality 2", "Concatenated"};
const char* const kSurvivalColumns[3] = {"Genomics", "Imaging", "Concatenated"};

json predict_fold(const RunOptions& opts, const Dataset& ds, int f) {
  const Config& cfg = opts.config;
  const Fold& fold = ds.folds[static_cast<std::size_t>(f)];
  const LoadedBasis basis = load_basis(opts, f);
  if (basis.u.rows() != ds.x.values.rows() || basis.v.rows() != ds.y.values.rows())
    throw DimensionError("embedding of " + fold_name(f) + " does not match the data");

  MLPOptions mo;
  mo.seed = run_seed(opts) + static_cast<std::uint64_t>(f);
  mo.epochs = static_cast<int>(cfg.get_int("predict", "epochs", 500));
  mo.lr = cfg.get_double("predict", "lr", 1e-3);
  mo.momentum = cfg.get_double("predict", "momentum", 0.9);
  mo.batch_size = static_cast<int>(cfg.get_int("predict", "batch_size", 32));
  mo.patience = static_cast<int>(cfg.get_int("predict", "patience", 20));
  const int hidden = static_cast<int>(cfg.get_int("predict", "hidden", 50));
  const int hidden_cat = static_cast<int>(cfg.get_int("predict", "hidden_concat", 100));

  const MatrixXd z_train = columns(ds.z->values, fold.train);
  const MatrixXd z_val = columns(ds.z->values, fold.val);
  const MatrixXd z_test = columns(ds.z->values, fold.test);

  json rows = json::object();
  const std::pair<std::string, EmbeddedFold> inputs[2] = {
      {basis.label, embed_inputs(ds, fold, &basis.u, &basis.v)},
      {"raw", embed_inputs(ds, fold, nullptr, nullptr)}};
  for (const auto& [method, in] : inputs) {
    json row = json::object();
    for (int c = 0; c < 3; ++c) {
      MLPOptions o = mo;
      o.hidden = c == 2 ? hidden_cat : hidden;
      const MLPModel model = mlp_fit(in.train[c], z_train, o, &in.val[c], &z_val);
      row[kInputColumns[c]] = number(mse(mlp_predict(model, in.test[c]), z_test));
    }
    rows[method] = row;
  }
  write_json(opts.out / fold_name(f) / "predict_latent.json", {{"test_mse", rows}});
  return rows;
}

std::vector<SurvivalRecord> align_labels(const SurvivalLabels& labels,
                                         const std::vector<std::string>& ids) {
  std::map<std::string, SurvivalRecord> by_id;
  for (std::size_t i = 0; i < labels.ids.size(); ++i) by_id[labels.ids[i]] = labels.records[i];
  std::vector<SurvivalRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("no survival label for sample '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<SurvivalRecord> pick(const std::vector<SurvivalRecord>& all,
                                 const std::vector<int>& idx) {
  std::vector<SurvivalRecord> out;
  for (int i : idx) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

json survival_fold(const RunOptions& opts, const Dataset& ds,
                   const std::vector<SurvivalRecord>& records, int f) {
  const Config& cfg = opts.config;
  const Fold& fold = ds.folds[static_cast<std::size_t>(f)];
  const LoadedBasis basis = load_basis(opts, f);
  if (basis.u.rows() != ds.x.values.rows() || basis.v.rows() != ds.y.values.rows())
    throw DimensionError("embedding of " + fold_name(f) + " does not match the data");
  const double penalizer = cfg.get_double("survival", "penalizer", 0.1);
  const double l1_ratio = cfg.get_double("survival", "l1_ratio", 0.0);

  const EmbeddedFold in = embed_inputs(ds, fold, &basis.u, &basis.v);
  const auto train = pick(records, fold.train);
  const auto test = pick(records, fold.test);
  json row = json::object();
  json converged = json::object();
  for (int c = 0; c < 3; ++c) {
    const CoxModel model = coxph_fit(in.train[c], train, penalizer, l1_ratio);
    row[kSurvivalColumns[c]] = number(concordance_index(test, risk_scores(model, in.test[c])));
    converged[kSurvivalColumns[c]] = model.converged;
  }
  write_json(opts.out / fold_name(f) / "survival.json",
             {{"c_index", row}, {"converged", converged}});
  return row;
}

json outcomes_json(const std::vector<FoldOutcome>& outcomes) {
  json folds = json::array();
  for (std::size_t f = 0; f < outcomes.size(); ++f) {
    json entry = {{"fold", static_cast<int>(f)}, {"status", outcomes[f].ok ? "ok" : "failed"}};
    if (outcomes[f].ok)
      entry["result"] = outcomes[f].detail;
    else
      entry["error"] = outcomes[f].error;
    folds.push_back(entry);
  }
  return folds;
}

// mean +- std over successful folds of result[row][column]
json table_summary(const std::vector<FoldOutcome>& outcomes, const char* const* cols) {
  std::map<std::string, std::map<std::string, std::vector<double>>> cells;
  std::vector<std::string> row_order;
  for (const auto& o : outcomes) {
    if (!o.ok) continue;
    const json& rows = o.detail.contains("rows") ? o.detail["rows"] : o.detail;
    for (const auto& [row, values] : rows.items()) {
      if (!cells.count(row)) row_order.push_back(row);
      for (int c = 0; c < 3; ++c) {
        const auto& v = values.at(cols[c]);
        if (!v.is_null()) cells[row][cols[c]].push_back(v.get<double>());
      }
    }
  }
  json out = json::object();
  for (const auto& row : row_order) {
    json r = json::object();
    for (int c = 0; c < 3; ++c) r[cols[c]] = summary_json(summarize(cells[row][cols[c]]));
    out[row] = r;
  }
  return out;
}

std::string table_csv(const json& table, const char* const* cols) {
  std::ostringstream out;
  out << "method,input,mean,std,count\n";
  for (const auto& [row, values] : table.items()) {
    for (int c = 0; c < 3; ++c) {
      const auto& s = values.at(cols[c]);
      out << row << ',' << cols[c] << ','
          << (s["mean"].is_null() ? "nan" : format_double(s["mean"].get<double>())) << ','
          << (s["std"].is_null() ? "nan" : format_double(s["std"].get<double>())) << ','
          << s["count"].get<int>() << '\n';
    }
  }
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------- public

std::string fold_name(int fold) {
  std::ostringstream s;
  s << "fold_" << std::setw(2) << std::setfill('0') << fold;
  return s.str();
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) {
    s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

void write_folds(const fs::path& path, const std::vector<Fold>& folds) {
  json j;
  j["n_folds"] = folds.size();
  json arr = json::array();
  for (const auto& f : folds) arr.push_back({{"train", f.train}, {"val", f.val}, {"test", f.test}});
  j["folds"] = arr;
  write_json(path, j);
}

std::vector<Fold> read_folds(const fs::path& path) {
  const json j = read_json(path);
  std::vector<Fold> folds;
  try {
    for (const auto& f : j.at("folds")) {
      folds.push_back({f.at("train").get<std::vector<int>>(), f.at("val").get<std::vector<int>>(),
                       f.at("test").get<std::vector<int>>()});
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (folds.empty()) throw DataError(path.string() + ": no folds");
  return folds;
}

SimConfig sim_config_from(const Config& cfg, std::optional<std::uint64_t> seed,
                          std::optional<int> folds) {
  SimConfig sc;
  sc.n = cfg.get_int("simulate", "n", sc.n);
  sc.p = cfg.get_int("simulate", "p", sc.p);
  sc.q = cfg.get_int("simulate", "q", sc.q);
  sc.d = cfg.get_int("simulate", "d", sc.d);
  sc.k_eig = cfg.get_int("simulate", "k_eig", sc.k_eig);
  sc.sigma_x = cfg.get_double("simulate", "sigma_x", sc.sigma_x);
  sc.sigma_y = cfg.get_double("simulate", "sigma_y", sc.sigma_y);
  sc.sparsity = cfg.get_double("simulate", "sparsity", sc.sparsity);
  const std::string structure = cfg.get("simulate", "structure", "sparse");
  if (structure == "sparse")
    sc.structure = Structure::sparse;
  else if (structure == "graph")
    sc.structure = Structure::graph;
  else
    throw ConfigError("simulate.structure must be sparse or graph");
  sc.seed = seed ? *seed : static_cast<std::uint64_t>(cfg.get_int("run", "seed", 0));
  sc.n_folds = folds ? *folds : static_cast<int>(cfg.get_int("simulate", "folds", sc.n_folds));
  const auto split = cfg.get_list("simulate", "split", {0.6, 0.1, 0.3});
  if (split.size() != 3) throw ConfigError("simulate.split needs three fractions");
  sc.split = {split[0], split[1], split[2]};
  sc.validate();
  return sc;
}

CommandResult cmd_simulate(const RunOptions& opts) {
  const SimConfig sc = sim_config_from(opts.config, opts.seed, opts.folds);
  const SimulatedDataset ds = simulate(sc);
  const auto ids = numbered_ids("s", sc.n);
  write_matrix_csv(opts.out / "X.csv", ds.data.x.values(), "x", ids);
  write_matrix_csv(opts.out / "Y.csv", ds.data.y.values(), "y", ids);
  write_matrix_csv(opts.out / "Z.csv", ds.data.z, "z", ids);
  const auto factors = numbered_ids("z", sc.d);
  write_matrix_csv(opts.out / "Wx.csv", ds.params.wx, "x", factors);
  write_matrix_csv(opts.out / "Wy.csv", ds.params.wy, "y", factors);
  write_folds(opts.out / "folds.json", ds.folds);
  if (ds.graph_x) {
    save_edge_list(*ds.graph_x, opts.out / "graph_x.csv");
    save_edge_list(*ds.graph_y, opts.out / "graph_y.csv");
  }
  if (opts.config.get_bool("simulate", "survival", false)) {
    // exponential event times with log-hazard strength * z_1, exponential censoring
    const double strength = opts.config.get_double("simulate", "survival_strength", 2.0);
    const double censoring = opts.config.get_double("simulate", "censoring_rate", 0.3);
    if (!(censoring > 0.0)) throw ConfigError("simulate.censoring_rate must be positive");
    Rng rng(sc.seed ^ 0x5a17u);
    auto exponential = [&rng](double rate) {
      double u;
      do {
        u = rng.uniform();
      } while (u <= 0.0);
      return -std::log(u) / rate;
    };
    SurvivalLabels labels;
    labels.ids = ids;
    for (Eigen::Index i = 0; i < sc.n; ++i) {
      const double t = exponential(std::exp(strength * ds.data.z(0, i)));
      const double c = exponential(censoring);
      labels.records.push_back({t <= c, std::min(t, c)});
    }
    write_survival_labels(opts.out / "labels.csv", labels);
  }
  write_text(opts.out / "config.ini", opts.config.dump());
  return {sc.n_folds, 0};
}

CommandResult cmd_embed(const RunOptions& opts) {
  const Dataset ds = load_dataset(data_dir(opts), false);
  const int n_folds = fold_count(opts, ds.folds.size());
  // fail fast on configuration problems before any fold runs
  parse_scheme(opts.config.get("embed", "scheme", "opd"));
  if (opts.config.get_int("embed", "k", 5) < 1) throw ConfigError("embed.k must be >= 1");
  {
    const std::string solver = opts.config.get("embed", "solver", "scca");
    if (solver != "cca" && solver != "scca" && solver != "gnscca")
      throw ConfigError("unknown solver '" + solver + "' (cca, scca, gnscca)");
  }

  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(n_folds));
  std::mutex config_error_mutex;
  std::exception_ptr config_error;
  run_folds(n_folds, opts.jobs, [&](int f) {
    outcomes[static_cast<std::size_t>(f)] = guarded([&] {
      try {
        return embed_fold(opts, ds, f);
      } catch (const Error& e) {
        if (e.error_class() == ErrorClass::config) {
          std::lock_guard lock(config_error_mutex);
          if (!config_error) config_error = std::current_exception();
        }
        throw;
      }
    });
  });
  if (config_error) std::rethrow_exception(config_error);
  warn_failures("embed", outcomes);

  json summary;
  summary["solver"] = opts.config.get("embed", "solver", "scca");
  summary["scheme"] = opts.config.get("embed", "scheme", "opd");
  summary["k"] = opts.config.get_int("embed", "k", 5);
  summary["folds"] = outcomes_json(outcomes);
  write_json(opts.out / "embed_summary.json", summary);
  write_text(opts.out / "config.ini", opts.config.dump());
  return tally(outcomes);
}

CommandResult cmd_predict_latent(const RunOptions& opts) {
  const Dataset ds = load_dataset(data_dir(opts), true);
  const int n_folds = fold_count(opts, ds.folds.size());
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(n_folds));
  run_folds(n_folds, opts.jobs, [&](int f) {
    outcomes[static_cast<std::size_t>(f)] = guarded([&] { return predict_fold(opts, ds, f); });
  });
  warn_failures("predict-latent", outcomes);
  const json table = table_summary(outcomes, kInputColumns);
  write_json(opts.out / "predict_latent.json",
             {{"metric", "test MSE"}, {"table", table}, {"folds", outcomes_json(outcomes)}});
  write_text(opts.out / "predict_latent.csv", table_csv(table, kInputColumns));
  return tally(outcomes);
}

CommandResult cmd_survival(const RunOptions& opts) {
  const fs::path dir = data_dir(opts);
  const Dataset ds = load_dataset(dir, false);
  const SurvivalLabels labels =
      read_survival_labels(opts.config.get_path("paths", "labels", dir / "labels.csv"));
  const auto records = align_labels(labels, ds.x.col_ids);
  const int n_folds = fold_count(opts, ds.folds.size());
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(n_folds));
  run_folds(n_folds, opts.jobs, [&](int f) {
    outcomes[static_cast<std::size_t>(f)] =
        guarded([&] { return json{{"rows", {{"c_index", survival_fold(opts, ds, records, f)}}}}; });
  });
  warn_failures("survival", outcomes);
  const json table = table_summary(outcomes, kSurvivalColumns);
  json folds = outcomes_json(outcomes);
  for (auto& entry : folds)
    if (entry.contains("result")) entry["result"] = entry["result"]["rows"]["c_index"];
  write_json(opts.out / "survival.json",
             {{"metric", "test C-index"}, {"table", table}, {"folds", folds}});
  write_text(opts.out / "survival.csv", table_csv(table, kSurvivalColumns));
  return tally(outcomes);
}

CommandResult cmd_report(const RunOptions& opts) {
  const fs::path summary_path = opts.out / "embed_summary.json";
  if (!fs::exists(summary_path)) throw DataError("no embed_summary.json in " + opts.out.string());
  const json summary = read_json(summary_path);
  const int requested_k = summary.at("k").get<int>();

  CommandResult result;
  const char* const splits[3] = {"train", "val", "test"};
  // per split: fold-level mean of rho~ (missing iterations count as 0),
  // per-iteration values and cumulative sums
  std::vector<double> fold_mean[3];
  std::vector<std::vector<double>> per_iter[3];
  std::vector<std::vector<double>> cumsum[3];
  for (auto& s : per_iter) s.assign(static_cast<std::size_t>(requested_k), {});
  for (auto& s : cumsum) s.assign(static_cast<std::size_t>(requested_k), {});
  MatrixXd ortho_sum = MatrixXd::Zero(requested_k, requested_k);
  MatrixXd ortho_count = MatrixXd::Zero(requested_k, requested_k);

  for (const auto& entry : summary.at("folds")) {
    if (entry.at("status") != "ok") {
      ++result.folds_failed;
      continue;
    }
    ++result.folds_ok;
    const fs::path dir = opts.out / fold_name(entry.at("fold").get<int>());
    for (int s = 0; s < 3; ++s) {
      const MetricReport r =
          parse_metric_report(read_text(dir / (std::string("metrics_") + splits[s] + ".json")));
      double running = 0.0;
      for (int j = 0; j < requested_k; ++j) {
        const double rho = j < r.additional_rhos.size() ? r.additional_rhos(j) : 0.0;
        running += rho;
        per_iter[s][static_cast<std::size_t>(j)].push_back(rho);
        cumsum[s][static_cast<std::size_t>(j)].push_back(running);
      }
      fold_mean[s].push_back(running / requested_k);
      if (s == 0) {
        for (Eigen::Index i = 0; i < r.ortho_matrix.rows(); ++i)
          for (Eigen::Index j = 0; j <= i; ++j)
            if (std::isfinite(r.ortho_matrix(i, j))) {
              ortho_sum(i, j) += r.ortho_matrix(i, j);
              ortho_count(i, j) += 1.0;
            }
      }
    }
  }
  if (result.folds_failed > 0)
    std::cerr << "report: " << result.folds_failed << " failed fold(s) excluded\n";

  json report;
  report["solver"] = summary.at("solver");
  report["scheme"] = summary.at("scheme");
  report["k"] = requested_k;
  report["folds_ok"] = result.folds_ok;
  report["folds_failed"] = result.folds_failed;
  json additional = json::object();
  std::ostringstream curve;
  curve << "k";
  for (const char* s : splits) curve << ',' << s << "_mean," << s << "_std";
  curve << '\n';
  for (int s = 0; s < 3; ++s) {
    const Summary m = summarize(fold_mean[s]);
    json per = json::array();
    for (const auto& v : per_iter[s]) per.push_back(summary_json(summarize(v)));
    additional[splits[s]] = {{"mean_additional", summary_json(m)},
                             {"mean_additional_pct", {{"mean", number(100.0 * m.mean)},
                                                      {"std", number(100.0 * m.std)}}},
                             {"per_iteration", per}};
  }
  for (int j = 0; j < requested_k; ++j) {
    curve << j + 1;
    for (int s = 0; s < 3; ++s) {
      const Summary c = summarize(cumsum[s][static_cast<std::size_t>(j)]);
      curve << ',' << format_double(c.mean) << ',' << format_double(c.std);
    }
    curve << '\n';
  }
  report["additional_correlation"] = additional;

  MatrixXd ortho_mean = MatrixXd::Constant(requested_k, requested_k,
                                           std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < requested_k; ++i)
    for (int j = 0; j <= i; ++j)
      if (ortho_count(i, j) > 0) ortho_mean(i, j) = ortho_sum(i, j) / ortho_count(i, j);
  save_ortho_csv(ortho_mean, opts.out / "ortho_mean.csv");
  write_text(opts.out / "additional_curve.csv", curve.str());

  for (const char* name : {"predict_latent", "survival"}) {
    const fs::path p = opts.out / (std::string(name) + ".json");
    if (fs::exists(p)) report[name] = read_json(p).at("table");
  }
  write_json(opts.out / "report.json", report);
  return result;
}

}  // namespace ccafuse
