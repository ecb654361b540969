#pragma once

#include <filesystem>
#include <vector>

#include "ccafuse/cca.hpp"
#include "ccafuse/datamodel.hpp"

namespace ccafuse {

/// Penalty settings shared by the penalized pair solvers.
///
/// SCCA uses the l1 budgets c1, c2 (feasible range [1, sqrt(p)] and
/// [1, sqrt(q)]). GN-SCCA uses the lambda_* weights; those act on the cross
/// matrix rescaled to unit spectral norm so one grid works across data sets
/// and deflation iterations.
struct PenaltyConfig {
  double c1 = 1.0;
  double c2 = 1.0;
  double lambda_graph_u = 0.0;
  double lambda_graph_v = 0.0;
  double lambda_l1_u = 0.0;
  double lambda_l1_v = 0.0;
  double tol = 1e-6;
  int max_iter = 100;

  /// Budgets that never bind: c1 = sqrt(p), c2 = sqrt(q).
  static PenaltyConfig inactive_budgets(Eigen::Index p, Eigen::Index q);

  void validate_budgets(Eigen::Index p, Eigen::Index q) const;
  void validate_graph_weights() const;
};

struct GraphEdge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
};

/// Undirected weighted graph over the features of one modality.
class GraphSpec {
 public:
  GraphSpec() = default;
  GraphSpec(int n_nodes, std::vector<GraphEdge> edges);

  int n_nodes() const noexcept { return n_nodes_; }
  const std::vector<GraphEdge>& edges() const noexcept { return edges_; }
  /// degree - adjacency
  const MatrixXd& laplacian() const noexcept { return laplacian_; }

  struct Neighbor {
    int node;
    double weight;
  };
  const std::vector<std::vector<Neighbor>>& neighbors() const noexcept {
    return neighbors_;
  }

 private:
  int n_nodes_ = 0;
  std::vector<GraphEdge> edges_;
  MatrixXd laplacian_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

/// Edge-list text format: one `i,j,weight` triple per line, 0-based.
GraphSpec load_edge_list(const std::filesystem::path& path, int n_nodes);
void save_edge_list(const GraphSpec& g, const std::filesystem::path& path);

/// sign(x) max(|x| - lam, 0)
double soft_threshold(double x, double lam);
VectorXd soft_threshold(const VectorXd& x, double lam);

struct BudgetUpdate {
  VectorXd u;
  double lambda = 0.0;
};

/// argmax u^T w over ||u||_2 <= 1, ||u||_1 <= c: the normalized soft-threshold
/// of w at the smallest lambda (possibly 0) meeting the budget, found by
/// bisection on [0, max|w|].
BudgetUpdate l1_budget_update(const VectorXd& w, double c);

/// argmax u^T w - lambda_l1 ||u||_1 - (lambda_graph / 2) u^T L u over ||u||_2 <= 1.
/// The unit-ball constraint enters as a ridge term whose weight is found by
/// bisection; each ridge problem is solved by cyclic coordinate descent.
VectorXd graph_net_update(const VectorXd& w, const GraphSpec& graph, double lambda_l1,
                          double lambda_graph, double tol);

struct PairFit {
  CanonicalPair pair;
  std::vector<double> objective;  // one entry per outer iteration
  int iterations = 0;
};

/// Sparse CCA by alternating l1-budget updates on a cross matrix.
PairFit scca_solve(const MatrixXd& cross, const PenaltyConfig& cfg);
/// Graph-net sparse CCA by alternating graph-net updates on a cross matrix.
PairFit gnscca_solve(const MatrixXd& cross, const GraphSpec& gu, const GraphSpec& gv,
                     const PenaltyConfig& cfg);

CanonicalPair scca_fit_pair(const DataMatrix& x, const DataMatrix& y,
                            const PenaltyConfig& cfg);
CanonicalPair gnscca_fit_pair(const DataMatrix& x, const DataMatrix& y, const GraphSpec& gu,
                              const GraphSpec& gv, const PenaltyConfig& cfg);

/// Penalized objective of gnscca_solve at (u, v) for the given cross matrix.
double gnscca_objective(const MatrixXd& cross, const VectorXd& u, const VectorXd& v,
                        const GraphSpec& gu, const GraphSpec& gv, const PenaltyConfig& cfg);

/// Edges between features whose absolute Pearson correlation reaches threshold.
GraphSpec graph_from_covariance(const DataMatrix& x, double threshold = 0.5);

/// Leading right singular vector, dense SVD up to 2000 columns, seeded power
/// iteration beyond.
VectorXd leading_right_vector(const MatrixXd& m);

}  // namespace ccafuse
