#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ccafuse/datamodel.hpp"
#include "ccafuse/errors.hpp"
#include "oracles.hpp"

using namespace ccafuse;

TEST_CASE("center examples") {
  MatrixXd m(3, 3);
  m << 1, 2, 3, 0, 0, 0, 5, 5, 5;
  const DataMatrix c = center(DataMatrix(m));
  CHECK(c.centered());
  CHECK(c.values().row(0).isApprox(Eigen::RowVector3d(-1, 0, 1)));
  CHECK(c.values().row(1).isZero());
  CHECK(c.values().row(2).isZero());
  MatrixXd two(1, 2);
  two << 5, 5;
  CHECK(center(DataMatrix(two)).values().isZero());
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(DataMatrix(MatrixXd(0, 3)), DimensionError);
  CHECK_THROWS_AS(DataMatrix(MatrixXd::Ones(3, 1)), DimensionError);
}

TEST_CASE("standardize examples") {
  MatrixXd m(3, 3);
  m << 0, 2, 0, 3, 3, 3, 1, 2, 3;
  m(0, 2) = 1;  // row [0, 2, 1]
  MatrixXd a(1, 2);
  a << 0, 2;
  CHECK(standardize(DataMatrix(a)).values().isApprox(Eigen::RowVector2d(-1, 1)));
  const MatrixXd s = standardize(DataMatrix(m)).values();
  CHECK(s.row(1).isZero());
  // (x - mu) / sigma with sigma = sqrt(2/3)
  const double z = std::sqrt(1.5);
  CHECK(s(2, 0) == doctest::Approx(-z).epsilon(1e-12));
  CHECK(s(2, 1) == doctest::Approx(0.0));
  CHECK(s(2, 2) == doctest::Approx(z).epsilon(1e-12));
}

TEST_CASE("center is idempotent and rows sum to zero") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DataMatrix x(oracle::random_matrix(4, 9, seed).array() + 3.0);
    const DataMatrix c1 = center(x);
    const DataMatrix c2 = center(c1);
    CHECK((c1.values() - c2.values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(c1.values().rowwise().sum().cwiseAbs().maxCoeff() < 1e-8 * 9);
  }
}

TEST_CASE("covariance_triple") {
  const DataMatrix x = center(DataMatrix(oracle::random_matrix(3, 5, 11)));
  const DataMatrix y = center(DataMatrix(oracle::random_matrix(4, 5, 12)));
  const CovarianceTriple c = covariance_triple(x, y);
  CHECK((c.cxy - oracle::cross_loops(x.values(), y.values())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c.cxx - oracle::cross_loops(x.values(), x.values())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((c.cyy - oracle::cross_loops(y.values(), y.values())).cwiseAbs().maxCoeff() < 1e-12);

  SUBCASE("identical inputs") {
    const CovarianceTriple s = covariance_triple(x, x);
    CHECK(s.cxy.isApprox(s.cxx));
    CHECK(s.cyy.isApprox(s.cxx));
    CHECK((s.cxy - s.cxy.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("single row dot product") {
    MatrixXd r(1, 2);
    r << 1, -1;
    CHECK(covariance_triple(DataMatrix(r), DataMatrix(r)).cxy(0, 0) == 2.0);
  }
  SUBCASE("psd and symmetric") {
    Eigen::SelfAdjointEigenSolver<MatrixXd> e(c.cxx);
    CHECK(e.eigenvalues().minCoeff() >= -1e-8 * e.eigenvalues().maxCoeff());
    CHECK((c.cxx - c.cxx.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(covariance_triple(x, DataMatrix(MatrixXd::Ones(2, 4))), DimensionError);
}

TEST_CASE("whitened_coupling") {
  const MatrixXd m = oracle::random_matrix(3, 2, 21);
  CovarianceTriple c{MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2), m};
  CHECK(whitened_coupling(c, 0.0).isApprox(m, 1e-14));
  c.cxx *= 4.0;
  CHECK(whitened_coupling(c, 0.0).isApprox(m / 2.0, 1e-14));

  SUBCASE("random SPD matches explicit eigendecomposition") {
    const MatrixXd a = oracle::random_matrix(3, 6, 22);
    const MatrixXd b = oracle::random_matrix(3, 6, 23);
    CovarianceTriple t{a * a.transpose(), b * b.transpose(), a * b.transpose()};
    const MatrixXd expect = oracle::inv_sqrt_eig(t.cxx) * t.cxy * oracle::inv_sqrt_eig(t.cyy);
    CHECK((whitened_coupling(t, 0.0) - expect).cwiseAbs().maxCoeff() < 1e-8);
  }
  SUBCASE("singular values bounded by one") {
    const DataMatrix x = center(DataMatrix(oracle::random_matrix(4, 30, 24)));
    const DataMatrix y = center(DataMatrix(oracle::random_matrix(5, 30, 25)));
    Eigen::JacobiSVD<MatrixXd> svd(whitened_coupling(covariance_triple(x, y), 0.0));
    CHECK(svd.singularValues()(0) <= 1.0 + 1e-6);
  }
  SUBCASE("singular input reports the smallest eigenvalue") {
    CovarianceTriple s{MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2), MatrixXd::Ones(2, 2)};
    s.cxx(0, 0) = 1.0;
    CHECK_THROWS_AS(whitened_coupling(s, 0.0), SingularityError);
    try {
      whitened_coupling(s, 0.0);
    } catch (const SingularityError& e) {
      CHECK(std::string(e.what()).find("smallest eigenvalue") != std::string::npos);
    }
    CHECK_NOTHROW(whitened_coupling(s, 1e-3));
  }
}

TEST_CASE("default ridge only when p >= n") {
  const MatrixXd c = 2.0 * MatrixXd::Identity(4, 4);
  CHECK(default_ridge(c, 10) == 0.0);
  CHECK(default_ridge(c, 4) == doctest::Approx(2e-6));
}

TEST_CASE("feature scaling uses training statistics") {
  MatrixXd train(1, 4);
  train << 1, 2, 3, 4;
  MatrixXd other(1, 2);
  other << 2.5, 4.5;
  const auto s = FeatureScaling::standardize(train);
  const double sd = std::sqrt(1.25);
  CHECK(s.apply(other)(0, 0) == doctest::Approx(0.0));
  CHECK(s.apply(other)(0, 1) == doctest::Approx(2.0 / sd));
}
