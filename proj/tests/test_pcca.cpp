#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "ccafuse/errors.hpp"
#include "ccafuse/pcca.hpp"
#include "oracles.hpp"

using namespace ccafuse;

namespace {

DataMatrix whiten(const MatrixXd& raw) {
  const MatrixXd c = oracle::center_rows(raw);
  return DataMatrix(oracle::inv_sqrt_eig(c * c.transpose()) * c, true);
}

// rows [0, 10) of both modalities follow a shared factor at SNR 10
std::pair<DataMatrix, DataMatrix> planted(std::uint64_t seed) {
  const Eigen::Index n = 100, p = 50, q = 40;
  const MatrixXd z = oracle::random_matrix(1, n, seed);
  MatrixXd x = oracle::random_matrix(p, n, seed + 1);
  MatrixXd y = oracle::random_matrix(q, n, seed + 2);
  const double noise = std::sqrt(0.1);
  x.topRows(10) = x.topRows(10) * noise + MatrixXd::Ones(10, 1) * z;
  y.topRows(10) = y.topRows(10) * noise + MatrixXd::Ones(10, 1) * z;
  return {center(DataMatrix(x)), center(DataMatrix(y))};
}

int nnz(const VectorXd& v) { return static_cast<int>((v.array() != 0.0).count()); }

GraphSpec empty_graph(int n) { return GraphSpec(n, {}); }

}  // namespace

TEST_CASE("soft_threshold") {
  CHECK(soft_threshold(2.0, 0.5) == 1.5);
  CHECK(soft_threshold(-0.3, 0.5) == 0.0);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
  for (double x : {-3.2, -0.1, 0.0, 0.7, 12.0}) CHECK(soft_threshold(x, 0.0) == x);
}

TEST_CASE("penalty validation") {
  PenaltyConfig c;
  c.c1 = 0.5;
  CHECK_THROWS_AS(c.validate_budgets(4, 4), DomainError);
  c.c1 = 3.0;
  CHECK_THROWS_AS(c.validate_budgets(4, 4), DomainError);
  c.c1 = 2.0;
  CHECK_NOTHROW(c.validate_budgets(4, 4));
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate_budgets(4, 4), DomainError);
  PenaltyConfig g;
  g.lambda_graph_u = -1.0;
  CHECK_THROWS_AS(g.validate_graph_weights(), DomainError);
  const auto in = PenaltyConfig::inactive_budgets(9, 16);
  CHECK(in.c1 == 3.0);
  CHECK(in.c2 == 4.0);
}

TEST_CASE("l1 budget bisection") {
  const VectorXd w = oracle::random_vector(30, 5);
  for (double c : {1.5, 2.0, 3.0, 4.0}) {
    const BudgetUpdate b = l1_budget_update(w, c);
    CHECK(b.u.norm() == doctest::Approx(1.0));
    CHECK(std::abs(b.u.lpNorm<1>() - c) <= 1e-4);
    CHECK(b.u.lpNorm<1>() <= c + 1e-6);
  }
  // inactive budget leaves lambda at zero
  const BudgetUpdate free = l1_budget_update(w, std::sqrt(30.0));
  CHECK(free.lambda == 0.0);
  CHECK(free.u.isApprox(w.normalized()));

  SUBCASE("c = 1 gives a single nonzero") {
    const BudgetUpdate one = l1_budget_update(w, 1.0);
    CHECK(nnz(one.u) == 1);
    Eigen::Index i;
    w.cwiseAbs().maxCoeff(&i);
    CHECK(std::abs(one.u(i)) == doctest::Approx(1.0));
  }
  SUBCASE("nonzeros shrink with the budget") {
    int previous = 31;
    for (double c : {5.0, 4.0, 3.0, 2.0, 1.5, 1.2, 1.0}) {
      const int k = nnz(l1_budget_update(w, c).u);
      CHECK(k <= previous);
      previous = k;
    }
  }
}

TEST_CASE("scca with inactive budgets equals the rank-1 SVD") {
  const DataMatrix x = whiten(oracle::random_matrix(6, 60, 11));
  const DataMatrix y = whiten(oracle::random_matrix(5, 60, 12));
  const CanonicalPair pair = scca_fit_pair(x, y, PenaltyConfig::inactive_budgets(6, 5));
  const MatrixXd cross = x.values() * y.values().transpose();
  Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd u0 = svd.matrixU().col(0);
  const VectorXd v0 = svd.matrixV().col(0);
  const double s = u0.dot(pair.u) > 0 ? 1.0 : -1.0;
  CHECK((pair.u - s * u0).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((pair.v - s * v0).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(pair.converged);
}

TEST_CASE("scca on planted support") {
  auto [x, y] = planted(21);
  PenaltyConfig cfg;
  cfg.c1 = 2.0;
  cfg.c2 = 2.0;
  const CanonicalPair pair = scca_fit_pair(x, y, cfg);
  const double mass_u = pair.u.head(10).lpNorm<1>() / pair.u.lpNorm<1>();
  const double mass_v = pair.v.head(10).lpNorm<1>() / pair.v.lpNorm<1>();
  CHECK(mass_u >= 0.8);
  CHECK(mass_v >= 0.8);
  CHECK(pair.u.norm() <= 1.0 + 1e-8);
  CHECK(pair.u.lpNorm<1>() <= cfg.c1 + 1e-6);
  CHECK(pair.v.lpNorm<1>() <= cfg.c2 + 1e-6);

  SUBCASE("budget of one") {
    cfg.c1 = 1.0;
    cfg.c2 = 1.0;
    const CanonicalPair one = scca_fit_pair(x, y, cfg);
    CHECK(nnz(one.u) == 1);
    CHECK(nnz(one.v) == 1);
  }
}

TEST_CASE("scca objective never decreases") {
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    const MatrixXd cross = oracle::random_matrix(25, 20, seed);
    PenaltyConfig cfg;
    cfg.c1 = 2.5;
    cfg.c2 = 2.0;
    cfg.tol = 1e-12;
    const PairFit fit = scca_solve(cross, cfg);
    for (std::size_t i = 1; i < fit.objective.size(); ++i)
      CHECK(fit.objective[i] >= fit.objective[i - 1] - 1e-8);
    CHECK(fit.pair.u.lpNorm<1>() <= 2.5 + 1e-6);
    CHECK(fit.pair.v.lpNorm<1>() <= 2.0 + 1e-6);
    CHECK(fit.pair.u.norm() <= 1.0 + 1e-8);
  }
}

TEST_CASE("scca errors and non-convergence") {
  CHECK_THROWS_AS(scca_solve(MatrixXd::Zero(4, 3), PenaltyConfig::inactive_budgets(4, 3)),
                  DegenerateError);
  PenaltyConfig cfg;
  cfg.c1 = 1.5;
  cfg.c2 = 1.5;
  cfg.max_iter = 1;
  cfg.tol = 1e-300;
  const PairFit fit = scca_solve(oracle::random_matrix(20, 20, 40), cfg);
  CHECK_FALSE(fit.pair.converged);
  CHECK(fit.iterations == 1);
}

TEST_CASE("gnscca without penalties follows the cross matrix") {
  const MatrixXd cross = oracle::random_matrix(8, 6, 50);
  const PairFit fit = gnscca_solve(cross, empty_graph(8), empty_graph(6), PenaltyConfig{});
  CHECK((fit.pair.u - (cross * fit.pair.v).normalized()).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fit.pair.v - (cross.transpose() * fit.pair.u).normalized()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("graph_net_update with no penalty normalizes w") {
  const VectorXd w = oracle::random_vector(7, 51);
  CHECK(graph_net_update(w, empty_graph(7), 0.0, 0.0, 1e-10).isApprox(w.normalized(), 1e-8));
}

TEST_CASE("complete graph smooths a block") {
  const int p = 20;
  std::vector<GraphEdge> edges;
  for (int i = 0; i < 10; ++i)
    for (int j = i + 1; j < 10; ++j) edges.push_back({i, j, 1.0});
  const GraphSpec g(p, edges);
  ccafuse::Rng rng(52);
  VectorXd a = VectorXd::Zero(p);
  for (int i = 0; i < 10; ++i) a(i) = rng.uniform(0.2, 1.8);
  const VectorXd b = oracle::random_vector(15, 53).normalized();
  const MatrixXd cross = a * b.transpose() + 0.05 * oracle::random_matrix(p, 15, 54);
  PenaltyConfig cfg;
  cfg.lambda_graph_u = 100.0;
  const PairFit fit = gnscca_solve(cross, g, empty_graph(15), cfg);
  const VectorXd block = fit.pair.u.head(10);
  const double spread = block.maxCoeff() - block.minCoeff();
  CHECK(spread < 0.1 * fit.pair.u.cwiseAbs().maxCoeff());
  // unsmoothed spread for comparison
  const PairFit raw = gnscca_solve(cross, g, empty_graph(15), PenaltyConfig{});
  const VectorXd rb = raw.pair.u.head(10);
  CHECK(rb.maxCoeff() - rb.minCoeff() > spread);
}

TEST_CASE("single edge difference shrinks as the graph weight grows") {
  const GraphSpec g(6, {{1, 4, 1.0}});
  const MatrixXd cross = oracle::random_matrix(6, 5, 60);
  double previous = std::numeric_limits<double>::infinity();
  for (double lg : {0.0, 1.0, 10.0}) {
    PenaltyConfig cfg;
    cfg.lambda_graph_u = lg;
    const PairFit fit = gnscca_solve(cross, g, empty_graph(5), cfg);
    const double diff = std::abs(fit.pair.u(1) - fit.pair.u(4));
    CHECK(diff < previous);
    previous = diff;
  }
}

TEST_CASE("gnscca objective never decreases") {
  const GraphSpec gu(15, {{0, 1, 1.0}, {1, 2, 0.5}, {3, 7, 2.0}, {9, 14, 1.0}});
  const GraphSpec gv(12, {{0, 5, 1.0}, {2, 3, 1.0}});
  for (std::uint64_t seed = 70; seed < 74; ++seed) {
    const MatrixXd cross = oracle::random_matrix(15, 12, seed);
    PenaltyConfig cfg;
    cfg.lambda_l1_u = cfg.lambda_l1_v = 0.03;
    cfg.lambda_graph_u = cfg.lambda_graph_v = 1.0;
    cfg.tol = 1e-12;
    const PairFit fit = gnscca_solve(cross, gu, gv, cfg);
    for (std::size_t i = 1; i < fit.objective.size(); ++i)
      CHECK(fit.objective[i] >= fit.objective[i - 1] - 1e-8);
    CHECK(fit.pair.u.norm() <= 1.0 + 1e-8);
    CHECK(fit.pair.v.norm() <= 1.0 + 1e-8);
  }
}

TEST_CASE("gnscca size checks") {
  const DataMatrix x = center(DataMatrix(oracle::random_matrix(4, 10, 80)));
  const DataMatrix y = center(DataMatrix(oracle::random_matrix(3, 10, 81)));
  CHECK_THROWS_AS(gnscca_fit_pair(x, y, empty_graph(5), empty_graph(3), PenaltyConfig{}),
                  DimensionError);
  CHECK_NOTHROW(gnscca_fit_pair(x, y, empty_graph(4), empty_graph(3), PenaltyConfig{}));
}

TEST_CASE("GraphSpec") {
  const GraphSpec g(4, {{0, 1, 2.0}, {1, 2, 0.5}, {0, 3, 1.0}});
  const MatrixXd& l = g.laplacian();
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10);
  CHECK((l - l.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(l(0, 0) == 3.0);
  CHECK(l(0, 1) == -2.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> e(l);
  CHECK(e.eigenvalues().minCoeff() > -1e-10);
  CHECK_THROWS_AS(GraphSpec(3, {{1, 1, 1.0}}), DataError);
  CHECK_THROWS_AS(GraphSpec(3, {{0, 1, -1.0}}), DataError);
  CHECK_THROWS_AS(GraphSpec(3, {{0, 3, 1.0}}), DataError);

  SUBCASE("edge list round trip") {
    const auto path = std::filesystem::temp_directory_path() / "ccafuse_edges_test.csv";
    save_edge_list(g, path);
    const GraphSpec back = load_edge_list(path, 4);
    CHECK(back.laplacian() == g.laplacian());
    std::filesystem::remove(path);
  }
}

TEST_CASE("graph_from_covariance") {
  MatrixXd m(3, 4);
  m << 1, 2, 3, 4, 1, 2, 3, 4, 1, -1, -1, 1;
  const GraphSpec g = graph_from_covariance(center(DataMatrix(m)), 0.5);
  // rows 0 and 1 duplicate, row 2 is orthogonal to both after centering
  REQUIRE(g.edges().size() == 1);
  CHECK(g.edges()[0].weight == doctest::Approx(1.0));
  CHECK_THROWS_AS(graph_from_covariance(center(DataMatrix(m)), 1.5), DomainError);

  SUBCASE("matches a pairwise Pearson oracle") {
    const DataMatrix x = center(DataMatrix(oracle::random_matrix(4, 6, 90)));
    const GraphSpec r = graph_from_covariance(x, 0.0);
    MatrixXd expect = MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j)
          expect(i, j) = std::abs(oracle::pearson(x.values().row(i).transpose(),
                                                  x.values().row(j).transpose()));
    MatrixXd got = -r.laplacian();
    got.diagonal().setZero();
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}
