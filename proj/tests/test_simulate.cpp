#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <queue>
#include <set>

#include "ccafuse/errors.hpp"
#include "ccafuse/simulate.hpp"
#include "oracles.hpp"

using namespace ccafuse;

namespace {

std::vector<bool> bfs_reach(const GraphSpec& g, int start) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(g.n_nodes()));
  for (const auto& e : g.edges()) {
    adj[static_cast<std::size_t>(e.i)].push_back(e.j);
    adj[static_cast<std::size_t>(e.j)].push_back(e.i);
  }
  std::vector<bool> seen(adj.size(), false);
  std::queue<int> todo;
  todo.push(start);
  seen[static_cast<std::size_t>(start)] = true;
  while (!todo.empty()) {
    const int a = todo.front();
    todo.pop();
    for (int b : adj[static_cast<std::size_t>(a)])
      if (!seen[static_cast<std::size_t>(b)]) {
        seen[static_cast<std::size_t>(b)] = true;
        todo.push(b);
      }
  }
  return seen;
}

}  // namespace

TEST_CASE("gen_sparse_weights") {
  const MatrixXd dense = gen_sparse_weights(50, 5, 1.0, 1);
  CHECK((dense.array() != 0.0).count() == 250);
  const MatrixXd one = gen_sparse_weights(40, 4, 0.25, 2);
  for (Eigen::Index i = 0; i < 40; ++i) CHECK((one.row(i).array() != 0.0).count() == 1);
  const MatrixXd big = gen_sparse_weights(1000, 5, 0.25, 3);
  const double frac = static_cast<double>((big.array() != 0.0).count()) / 5000.0;
  CHECK(std::abs(frac - 1.0 / 5.0) <= 0.01);
  CHECK(gen_sparse_weights(30, 5, 0.5, 4) == gen_sparse_weights(30, 5, 0.5, 4));
  CHECK(gen_sparse_weights(30, 5, 0.5, 4) != gen_sparse_weights(30, 5, 0.5, 5));
  CHECK_THROWS_AS(gen_sparse_weights(10, 5, 0.05, 1), ConfigError);
}

TEST_CASE("random_connected_graph") {
  const GraphSpec two = random_connected_graph(2, 1);
  REQUIRE(two.edges().size() == 1);
  CHECK(std::min(two.edges()[0].i, two.edges()[0].j) == 0);
  CHECK(std::max(two.edges()[0].i, two.edges()[0].j) == 1);
  CHECK_THROWS_AS(random_connected_graph(1, 1), DomainError);

  for (int p : {3, 10, 30, 57}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const GraphSpec g = random_connected_graph(p, seed);
      Eigen::SelfAdjointEigenSolver<MatrixXd> e(g.laplacian());
      const auto zeros = (e.eigenvalues().array().abs() < 1e-8).count();
      CHECK(zeros == 1);
      const auto seen = bfs_reach(g, 0);
      CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
      std::set<std::pair<int, int>> unique;
      for (const auto& edge : g.edges()) {
        CHECK(edge.weight == 1.0);
        unique.insert({std::min(edge.i, edge.j), std::max(edge.i, edge.j)});
      }
      CHECK(unique.size() == g.edges().size());
    }
  }
  const GraphSpec big = random_connected_graph(200, 7);
  CHECK(2.0 * static_cast<double>(big.edges().size()) / 200.0 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("gen_graph_weights") {
  const GraphSpec g = random_connected_graph(40, 3);
  const MatrixXd w = gen_graph_weights(g, 5, 5, 4);
  CHECK((w.transpose() * w - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(w == gen_graph_weights(g, 5, 5, 4));

  SUBCASE("d = 1 is a nonnegative mix of smooth eigenvectors") {
    const MatrixXd w1 = gen_graph_weights(g, 1, 3, 5);
    CHECK(w1.col(0).norm() == doctest::Approx(1.0));
    Eigen::SelfAdjointEigenSolver<MatrixXd> e(g.laplacian());
    const MatrixXd phi = e.eigenvectors().middleCols(1, 3);
    const VectorXd coef = phi.transpose() * w1.col(0);
    CHECK((phi * coef - w1.col(0)).norm() < 1e-8);
    // eigenvector signs are arbitrary; compare against the oracle's sign up to flips
    CHECK(coef.norm() == doctest::Approx(1.0));
  }
  SUBCASE("path graph columns stay in the smooth eigenspace") {
    const GraphSpec path(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    const MatrixXd wp = gen_graph_weights(path, 2, 2, 6);
    // independent oracle: path Laplacian eigenvectors cos(pi k (i + 1/2) / n)
    MatrixXd phi(5, 2);
    for (int k = 1; k <= 2; ++k)
      for (int i = 0; i < 5; ++i) phi(i, k - 1) = std::cos(M_PI * k * (i + 0.5) / 5.0);
    phi = oracle::gram_schmidt(phi);
    for (int j = 0; j < 2; ++j) {
      const VectorXd col = wp.col(j);
      CHECK((col - phi * (phi.transpose() * col)).norm() < 1e-8);
    }
  }
  CHECK_THROWS_AS(gen_graph_weights(g, 6, 5, 1), ConfigError);
}

TEST_CASE("make_folds") {
  const auto f = make_folds(10, {0.6, 0.1, 0.3}, 3, 1);
  REQUIRE(f.size() == 3);
  CHECK(f[0].train.size() == 6);
  CHECK(f[0].val.size() == 1);
  CHECK(f[0].test.size() == 3);
  const auto again = make_folds(10, {0.6, 0.1, 0.3}, 3, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(f[i].train == again[i].train);
    CHECK(f[i].test == again[i].test);
  }
  CHECK(f[0].train != f[1].train);
  CHECK_THROWS_AS(make_folds(5, {0.6, 0.1, 0.3}, 1, 1), ConfigError);

  ccafuse::Rng rng(42);
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<Eigen::Index>(20 + rng.below(200));
    const double tr = rng.uniform(0.3, 0.7);
    const double va = rng.uniform(0.05, 0.2);
    const auto folds = make_folds(n, {tr, va, 1.0 - tr - va}, 2, 100 + static_cast<std::uint64_t>(t));
    for (const auto& fold : folds) {
      std::vector<int> all;
      for (const auto* set : {&fold.train, &fold.val, &fold.test}) {
        CHECK(std::is_sorted(set->begin(), set->end()));
        all.insert(all.end(), set->begin(), set->end());
      }
      std::sort(all.begin(), all.end());
      REQUIRE(all.size() == static_cast<std::size_t>(n));
      for (int i = 0; i < static_cast<int>(n); ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
      CHECK(fold.train.size() == static_cast<std::size_t>(std::floor(static_cast<double>(n) * tr)));
    }
  }
}

TEST_CASE("SimConfig validation") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  c.split = {0.6, 0.1, 0.2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.sparsity = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.sigma_x = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("planted correlation is detectable") {
  for (Structure s : {Structure::sparse, Structure::graph}) {
    SimConfig cfg;
    cfg.structure = s;
    cfg.n_folds = 1;
    const SimulatedDataset sim = simulate(cfg);
    CHECK(sim.data.x.n_features() == 200);
    CHECK(sim.data.x.n_samples() == 100);
    CHECK(sim.graph_x.has_value() == (s == Structure::graph));
    const CovarianceTriple c = covariance_triple(center(sim.data.x), center(sim.data.y));
    Eigen::JacobiSVD<MatrixXd> svd(c.cxy);
    VectorXd sv = svd.singularValues();
    std::vector<double> v(sv.data(), sv.data() + sv.size());
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    CHECK(sv(0) > 2.0 * v[v.size() / 2]);

    const SimulatedDataset again = simulate(cfg);
    CHECK(again.data.x.values() == sim.data.x.values());
    CHECK(again.params.wx == sim.params.wx);
  }
}
