#include "ccafuse/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

namespace {

// Independent streams for the pieces of one simulation.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::Index nonzeros_per_row(Eigen::Index d, double s) {
  return static_cast<Eigen::Index>(std::llround(s * static_cast<double>(d)));
}

}  // namespace

void SimConfig::validate() const {
  if (n < 2 || p < 1 || q < 1 || d < 1) throw ConfigError("n >= 2 and p, q, d >= 1 required");
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw ConfigError("noise levels must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw ConfigError("sparsity must lie in (0, 1]");
  if (structure == Structure::sparse && nonzeros_per_row(d, sparsity) < 1)
    throw ConfigError("sparsity leaves rows without nonzero entries");
  if (structure == Structure::graph && (d > k_eig || k_eig > std::min(p, q) - 1))
    throw ConfigError("graph structure needs d <= k_eig <= min(p, q) - 1");
  if (n_folds < 1) throw ConfigError("need at least one fold");
  double total = 0.0;
  for (double f : split) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

MatrixXd gen_sparse_weights(Eigen::Index p, Eigen::Index d, double s, std::uint64_t seed) {
  if (!(s > 0.0 && s <= 1.0)) throw ConfigError("sparsity must lie in (0, 1]");
  const auto nnz = nonzeros_per_row(d, s);
  if (nnz < 1) {
    std::ostringstream msg;
    msg << "round(" << s << " * " << d << ") = 0 nonzeros per row";
    throw ConfigError(msg.str());
  }
  Rng rng(seed);
  MatrixXd w = MatrixXd::Zero(p, d);
  std::vector<Eigen::Index> cols(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < p; ++i) {
    std::iota(cols.begin(), cols.end(), Eigen::Index{0});
    rng.shuffle(std::span<Eigen::Index>(cols));
    for (Eigen::Index t = 0; t < nnz; ++t) w(i, cols[static_cast<std::size_t>(t)]) = rng.normal();
  }
  return w;
}

GraphSpec random_connected_graph(int p, std::uint64_t seed) {
  if (p < 2) throw DomainError("random_connected_graph needs p >= 2");
  Rng rng(seed);
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));

  std::set<std::pair<int, int>> present;
  std::vector<GraphEdge> edges;
  auto add = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    if (a == b || !present.insert(key).second) return false;
    edges.push_back({key.first, key.second, 1.0});
    return true;
  };
  for (int t = 1; t < p; ++t) {
    const int parent = order[rng.below(static_cast<std::uint64_t>(t))];
    add(order[static_cast<std::size_t>(t)], parent);
  }
  const long long max_edges = static_cast<long long>(p) * (p - 1) / 2;
  const long long target = std::min<long long>(2LL * p, max_edges);
  while (static_cast<long long>(edges.size()) < target) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
    add(a, b);
  }
  return GraphSpec(p, std::move(edges));
}

MatrixXd gen_graph_weights(const GraphSpec& g, Eigen::Index d, Eigen::Index k_eig,
                           std::uint64_t seed) {
  const Eigen::Index p = g.n_nodes();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g.laplacian());
  const VectorXd& lambda = eig.eigenvalues();
  const double zero_tol = 1e-8 * std::max(lambda.maxCoeff(), 1.0);
  Eigen::Index first = 0;
  while (first < p && lambda(first) <= zero_tol) ++first;
  if (k_eig < 1 || first + k_eig > p) {
    std::ostringstream msg;
    msg << "k_eig = " << k_eig << " but the graph has " << p - first
        << " non-zero Laplacian eigenvalues";
    throw ConfigError(msg.str());
  }
  const MatrixXd phi = eig.eigenvectors().middleCols(first, k_eig);

  Rng rng(seed);
  MatrixXd w(p, d);
  for (Eigen::Index t = 0; t < d; ++t) {
    bool done = false;
    for (int attempt = 0; attempt < 20 && !done; ++attempt) {
      VectorXd coef(k_eig);
      for (Eigen::Index j = 0; j < k_eig; ++j) coef(j) = rng.uniform();
      VectorXd col = phi * coef;
      for (int pass = 0; pass < 2; ++pass)
        col -= w.leftCols(t) * (w.leftCols(t).transpose() * col);
      const double norm = col.norm();
      if (norm >= 1e-10) {
        w.col(t) = col / norm;
        done = true;
      }
    }
    if (!done) {
      throw ConfigError("could not draw weight vector " + std::to_string(t + 1) +
                        " orthogonal to the earlier ones");
    }
  }
  return w;
}

std::vector<Fold> make_folds(Eigen::Index n, const std::array<double, 3>& split, int n_folds,
                             std::uint64_t seed) {
  if (n_folds < 1) throw ConfigError("need at least one fold");
  const double nd = static_cast<double>(n);
  const auto n_train = static_cast<Eigen::Index>(std::floor(nd * split[0] + 1e-9));
  const auto n_val = static_cast<Eigen::Index>(std::floor(nd * split[1] + 1e-9));
  const auto n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) {
    std::ostringstream msg;
    msg << "split of n = " << n << " gives sizes " << n_train << "/" << n_val << "/" << n_test;
    throw ConfigError(msg.str());
  }
  std::vector<Fold> folds;
  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed + static_cast<std::uint64_t>(f));
    rng.shuffle(std::span<int>(idx));
    Fold fold;
    const auto a = idx.begin() + n_train;
    const auto b = a + n_val;
    fold.train.assign(idx.begin(), a);
    fold.val.assign(a, b);
    fold.test.assign(b, idx.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.val.begin(), fold.val.end());
    std::sort(fold.test.begin(), fold.test.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

SimulatedDataset simulate(const SimConfig& cfg) {
  cfg.validate();
  SimulatedDataset out;
  out.params.sigma_x = cfg.sigma_x;
  out.params.sigma_y = cfg.sigma_y;
  if (cfg.structure == Structure::sparse) {
    out.params.wx = gen_sparse_weights(cfg.p, cfg.d, cfg.sparsity, stream_seed(cfg.seed, 0));
    out.params.wy = gen_sparse_weights(cfg.q, cfg.d, cfg.sparsity, stream_seed(cfg.seed, 1));
  } else {
    out.graph_x = random_connected_graph(static_cast<int>(cfg.p), stream_seed(cfg.seed, 2));
    out.graph_y = random_connected_graph(static_cast<int>(cfg.q), stream_seed(cfg.seed, 3));
    out.params.wx = gen_graph_weights(*out.graph_x, cfg.d, cfg.k_eig, stream_seed(cfg.seed, 4));
    out.params.wy = gen_graph_weights(*out.graph_y, cfg.d, cfg.k_eig, stream_seed(cfg.seed, 5));
  }
  out.data = sample_dataset(out.params, cfg.n, stream_seed(cfg.seed, 6));
  out.folds = make_folds(cfg.n, cfg.split, cfg.n_folds, cfg.seed);
  return out;
}

}  // namespace ccafuse
