#include "ccafuse/pcca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

namespace {

constexpr int kBisectionSteps = 50;
constexpr int kMaxSweeps = 20000;

bool all_zero(const VectorXd& x) { return x.size() == 0 || x.cwiseAbs().maxCoeff() == 0.0; }

bool converged(double previous, double current, double tol) {
  return std::abs(current - previous) < tol * std::max(1.0, std::abs(current));
}

}  // namespace

// ---------------------------------------------------------------- config

PenaltyConfig PenaltyConfig::inactive_budgets(Eigen::Index p, Eigen::Index q) {
  PenaltyConfig cfg;
  cfg.c1 = std::sqrt(static_cast<double>(p));
  cfg.c2 = std::sqrt(static_cast<double>(q));
  return cfg;
}

void PenaltyConfig::validate_budgets(Eigen::Index p, Eigen::Index q) const {
  const double eps = 1e-12;
  if (c1 < 1.0 - eps || c1 > std::sqrt(static_cast<double>(p)) + eps ||
      c2 < 1.0 - eps || c2 > std::sqrt(static_cast<double>(q)) + eps) {
    std::ostringstream msg;
    msg << "l1 budgets (" << c1 << ", " << c2 << ") outside [1, sqrt(p)] x [1, sqrt(q)]";
    throw DomainError(msg.str());
  }
  if (!(tol > 0.0) || max_iter < 1) throw DomainError("need tol > 0 and max_iter >= 1");
}

void PenaltyConfig::validate_graph_weights() const {
  if (lambda_graph_u < 0.0 || lambda_graph_v < 0.0 || lambda_l1_u < 0.0 || lambda_l1_v < 0.0)
    throw DomainError("penalty weights must be non-negative");
  if (!(tol > 0.0) || max_iter < 1) throw DomainError("need tol > 0 and max_iter >= 1");
}

// ---------------------------------------------------------------- graphs

GraphSpec::GraphSpec(int n_nodes, std::vector<GraphEdge> edges)
    : n_nodes_(n_nodes), edges_(std::move(edges)) {
  if (n_nodes_ < 1) throw DomainError("graph needs at least one node");
  laplacian_ = MatrixXd::Zero(n_nodes_, n_nodes_);
  neighbors_.assign(static_cast<std::size_t>(n_nodes_), {});
  for (const auto& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_nodes_ || e.j >= n_nodes_) {
      std::ostringstream msg;
      msg << "edge (" << e.i << ", " << e.j << ") outside 0.." << n_nodes_ - 1;
      throw DataError(msg.str());
    }
    if (e.i == e.j) throw DataError("self-loop on node " + std::to_string(e.i));
    if (!(e.weight >= 0.0)) throw DataError("negative or NaN edge weight");
    laplacian_(e.i, e.j) -= e.weight;
    laplacian_(e.j, e.i) -= e.weight;
    laplacian_(e.i, e.i) += e.weight;
    laplacian_(e.j, e.j) += e.weight;
    neighbors_[static_cast<std::size_t>(e.i)].push_back({e.j, e.weight});
    neighbors_[static_cast<std::size_t>(e.j)].push_back({e.i, e.weight});
  }
}

GraphSpec load_edge_list(const std::filesystem::path& path, int n_nodes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list " + path.string());
  std::vector<GraphEdge> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    GraphEdge e;
    if (!(fields >> e.i >> e.j >> e.weight)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected i,j,weight");
    }
    edges.push_back(e);
  }
  return GraphSpec(n_nodes, std::move(edges));
}

void save_edge_list(const GraphSpec& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write edge list " + path.string());
  out.precision(17);
  for (const auto& e : g.edges()) out << e.i << ',' << e.j << ',' << e.weight << '\n';
}

GraphSpec graph_from_covariance(const DataMatrix& x, double threshold) {
  if (threshold < 0.0 || threshold > 1.0) throw DomainError("threshold must lie in [0, 1]");
  const MatrixXd& values = x.values();
  const auto p = values.rows();
  MatrixXd z = values.colwise() - values.rowwise().mean();
  VectorXd norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (norms(i) < 1e-12)
      z.row(i).setZero();
    else
      z.row(i) /= norms(i);
  }
  const MatrixXd corr = z * z.transpose();
  std::vector<GraphEdge> edges;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double w = std::min(std::abs(corr(i, j)), 1.0);
      if (w > 0.0 && w >= threshold)
        edges.push_back({static_cast<int>(i), static_cast<int>(j), w});
    }
  }
  return GraphSpec(static_cast<int>(p), std::move(edges));
}

// ---------------------------------------------------------------- updates

double soft_threshold(double x, double lam) {
  if (x > lam) return x - lam;
  if (x < -lam) return x + lam;
  return 0.0;
}

VectorXd soft_threshold(const VectorXd& x, double lam) {
  return x.unaryExpr([lam](double v) { return soft_threshold(v, lam); });
}

BudgetUpdate l1_budget_update(const VectorXd& w, double c) {
  if (all_zero(w)) throw DegenerateError("l1 update on a zero direction");
  BudgetUpdate out;
  out.u = w.normalized();
  if (out.u.lpNorm<1>() <= c) return out;

  const double top = w.cwiseAbs().maxCoeff();
  double lo = 0.0;
  double hi = top;
  for (int step = 0; step < kBisectionSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    const VectorXd s = soft_threshold(w, mid);
    const double l2 = s.norm();
    if (l2 > 0.0 && s.lpNorm<1>() / l2 > c)
      lo = mid;
    else
      hi = mid;
  }
  VectorXd s = soft_threshold(w, hi);
  if (all_zero(s)) {
    // limit lambda -> max|w|: only the largest entries survive
    s = VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (std::abs(w(i)) == top) s(i) = w(i) > 0 ? 1.0 : -1.0;
  }
  out.u = s.normalized();
  out.lambda = hi;
  return out;
}

namespace {

// Cyclic coordinate descent for
//   min -u^T w + l1 ||u||_1 + (lg / 2) u^T L u + (mu / 2) ||u||^2
void graph_net_ridge(const VectorXd& w, const GraphSpec& graph, double l1, double lg,
                     double mu, double tol, VectorXd& u) {
  const auto& nbrs = graph.neighbors();
  const auto p = w.size();
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double max_delta = 0.0;
    double max_abs = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      double pull = 0.0;
      double degree = 0.0;
      for (const auto& nb : nbrs[static_cast<std::size_t>(i)]) {
        pull += nb.weight * u(nb.node);
        degree += nb.weight;
      }
      const double updated = soft_threshold(w(i) + lg * pull, l1) / (lg * degree + mu);
      max_delta = std::max(max_delta, std::abs(updated - u(i)));
      u(i) = updated;
      max_abs = std::max(max_abs, std::abs(updated));
    }
    if (max_delta <= tol * std::max(max_abs, 1e-300)) return;
  }
}

}  // namespace

VectorXd graph_net_update(const VectorXd& w, const GraphSpec& graph, double lambda_l1,
                          double lambda_graph, double tol) {
  if (graph.n_nodes() != w.size()) throw DimensionError("graph size does not match weights");
  if (all_zero(w)) throw DegenerateError("graph-net update on a zero direction");

  // ||u(mu)|| <= ||w|| / mu, so mu = ||w|| is always feasible; the norm
  // decreases in mu and the answer is the mu with ||u(mu)|| = 1.
  double hi = w.norm();
  VectorXd u_hi = VectorXd::Zero(w.size());
  graph_net_ridge(w, graph, lambda_l1, lambda_graph, hi, tol, u_hi);
  if (all_zero(u_hi)) return u_hi;
  double n_hi = u_hi.norm();
  if (n_hi >= 1.0 - 1e-10) return u_hi;

  // walk down until the ball constraint becomes active
  const double floor = 1e-10 * hi;
  double lo = hi;
  double n_lo = n_hi;
  VectorXd u = u_hi;
  while (n_lo <= 1.0) {
    hi = lo;
    u_hi = u;
    n_hi = n_lo;
    if (n_hi >= 1.0 - 1e-10) return u_hi;
    if (lo <= floor) return u_hi;  // unconstrained maximizer lies inside the ball
    lo = std::max(lo * 0.25, floor);
    graph_net_ridge(w, graph, lambda_l1, lambda_graph, lo, tol, u);
    n_lo = u.norm();
  }

  // Illinois regula falsi on g(mu) = 1 / ||u(mu)|| - 1, close to linear in mu
  double g_lo = 1.0 / n_lo - 1.0;
  double g_hi = 1.0 / n_hi - 1.0;
  int side = 0;
  for (int step = 0; step < 100; ++step) {
    double mu = hi - g_hi * (hi - lo) / (g_hi - g_lo);
    if (!(mu > lo && mu < hi)) mu = 0.5 * (lo + hi);
    u = u_hi;
    graph_net_ridge(w, graph, lambda_l1, lambda_graph, mu, tol, u);
    const double norm = u.norm();
    const double g = 1.0 / norm - 1.0;
    if (norm <= 1.0) {
      hi = mu;
      u_hi = u;
      g_hi = g;
      if (norm >= 1.0 - 1e-10) break;
      if (side == 1) g_lo *= 0.5;
      side = 1;
    } else {
      lo = mu;
      g_lo = g;
      if (side == -1) g_hi *= 0.5;
      side = -1;
    }
    if (hi - lo <= 1e-15 * hi) break;
  }
  return u_hi;
}

// ---------------------------------------------------------------- solvers

VectorXd leading_right_vector(const MatrixXd& m) {
  if (std::min(m.rows(), m.cols()) <= 2000) return leading_singular_triplet(m).right;
  Rng rng(0x5eed);
  VectorXd v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  for (int it = 0; it < 1000; ++it) {
    VectorXd next = m.transpose() * (m * v);
    const double norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    const double change = (next - v).norm();
    v = next;
    if (change < 1e-12) break;
  }
  return v;
}

PairFit scca_solve(const MatrixXd& cross, const PenaltyConfig& cfg) {
  cfg.validate_budgets(cross.rows(), cross.cols());
  if (cross.size() == 0 || cross.cwiseAbs().maxCoeff() == 0.0)
    throw DegenerateError("sparse CCA on a zero cross matrix");
  PairFit fit;
  VectorXd v = leading_right_vector(cross);
  VectorXd u;
  double previous = -std::numeric_limits<double>::infinity();
  fit.pair.converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    u = l1_budget_update(cross * v, cfg.c1).u;
    v = l1_budget_update(cross.transpose() * u, cfg.c2).u;
    const double objective = u.dot(cross * v);
    fit.objective.push_back(objective);
    fit.iterations = it + 1;
    if (converged(previous, objective, cfg.tol)) {
      fit.pair.converged = true;
      break;
    }
    previous = objective;
  }
  fix_sign(u, v);
  fit.pair.u = std::move(u);
  fit.pair.v = std::move(v);
  return fit;
}

double gnscca_objective(const MatrixXd& cross, const VectorXd& u, const VectorXd& v,
                        const GraphSpec& gu, const GraphSpec& gv, const PenaltyConfig& cfg) {
  return u.dot(cross * v) - cfg.lambda_l1_u * u.lpNorm<1>() - cfg.lambda_l1_v * v.lpNorm<1>() -
         0.5 * cfg.lambda_graph_u * u.dot(gu.laplacian() * u) -
         0.5 * cfg.lambda_graph_v * v.dot(gv.laplacian() * v);
}

PairFit gnscca_solve(const MatrixXd& cross, const GraphSpec& gu, const GraphSpec& gv,
                     const PenaltyConfig& cfg) {
  cfg.validate_graph_weights();
  if (gu.n_nodes() != cross.rows() || gv.n_nodes() != cross.cols())
    throw DimensionError("graph node counts must equal p and q");
  if (cross.size() == 0 || cross.cwiseAbs().maxCoeff() == 0.0)
    throw DegenerateError("graph-net CCA on a zero cross matrix");

  const SingularTriplet top = leading_singular_triplet(cross);
  const MatrixXd scaled = cross / top.value;
  const double inner_tol = std::min(cfg.tol * 1e-2, 1e-8);

  PairFit fit;
  VectorXd v = top.right;
  VectorXd u;
  double previous = -std::numeric_limits<double>::infinity();
  fit.pair.converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    u = graph_net_update(scaled * v, gu, cfg.lambda_l1_u, cfg.lambda_graph_u, inner_tol);
    if (all_zero(u)) throw DegenerateError("graph-net penalty removed every u coefficient");
    v = graph_net_update(scaled.transpose() * u, gv, cfg.lambda_l1_v, cfg.lambda_graph_v,
                         inner_tol);
    if (all_zero(v)) throw DegenerateError("graph-net penalty removed every v coefficient");
    const double objective = gnscca_objective(scaled, u, v, gu, gv, cfg);
    fit.objective.push_back(objective);
    fit.iterations = it + 1;
    if (converged(previous, objective, cfg.tol)) {
      fit.pair.converged = true;
      break;
    }
    previous = objective;
  }
  fit.pair.u = u.normalized();
  fit.pair.v = v.normalized();
  fix_sign(fit.pair.u, fit.pair.v);
  return fit;
}

CanonicalPair scca_fit_pair(const DataMatrix& x, const DataMatrix& y,
                            const PenaltyConfig& cfg) {
  if (x.n_samples() != y.n_samples()) throw DimensionError("sample count mismatch");
  const MatrixXd cross = x.values() * y.values().transpose();
  CanonicalPair pair = scca_solve(cross, cfg).pair;
  pair.rho = canonical_correlation(pair.u, pair.v, x, y);
  return pair;
}

CanonicalPair gnscca_fit_pair(const DataMatrix& x, const DataMatrix& y, const GraphSpec& gu,
                              const GraphSpec& gv, const PenaltyConfig& cfg) {
  if (x.n_samples() != y.n_samples()) throw DimensionError("sample count mismatch");
  const MatrixXd cross = x.values() * y.values().transpose();
  CanonicalPair pair = gnscca_solve(cross, gu, gv, cfg).pair;
  pair.rho = canonical_correlation(pair.u, pair.v, x, y);
  return pair;
}

}  // namespace ccafuse
