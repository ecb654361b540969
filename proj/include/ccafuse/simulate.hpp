#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "ccafuse/genmodel.hpp"
#include "ccafuse/pcca.hpp"

namespace ccafuse {

enum class Structure { sparse, graph };

struct SimConfig {
  Eigen::Index n = 100;
  Eigen::Index p = 200;
  Eigen::Index q = 200;
  Eigen::Index d = 5;
  Eigen::Index k_eig = 5;
  double sigma_x = 0.1;
  double sigma_y = 0.1;
  double sparsity = 0.25;
  Structure structure = Structure::sparse;
  std::uint64_t seed = 0;
  int n_folds = 10;
  std::array<double, 3> split{0.6, 0.1, 0.3};

  void validate() const;
};

/// Each row gets round(s d) nonzero N(0, 1) entries at uniform positions.
MatrixXd gen_sparse_weights(Eigen::Index p, Eigen::Index d, double s, std::uint64_t seed);

/// Random spanning tree plus random extra edges up to 2p edges in total
/// (mean degree 4), unit weights.
GraphSpec random_connected_graph(int p, std::uint64_t seed);

/// p x d matrix with orthonormal columns, each a Uniform[0, 1] combination of
/// the k_eig smoothest non-constant Laplacian eigenvectors, projected away
/// from the earlier columns.
MatrixXd gen_graph_weights(const GraphSpec& g, Eigen::Index d, Eigen::Index k_eig,
                           std::uint64_t seed);

struct Fold {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Fold f shuffles 0..n-1 with seed + f. Train and validation sizes are
/// floor(n * fraction); the test set takes the rest. Each set is sorted.
std::vector<Fold> make_folds(Eigen::Index n, const std::array<double, 3>& split, int n_folds,
                             std::uint64_t seed);

struct SimulatedDataset {
  ModelParams params;
  SampledData data;
  std::optional<GraphSpec> graph_x;
  std::optional<GraphSpec> graph_y;
  std::vector<Fold> folds;
};

SimulatedDataset simulate(const SimConfig& cfg);

}  // namespace ccafuse
