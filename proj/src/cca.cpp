#include "ccafuse/cca.hpp"

#include <cmath>
#include <sstream>

#include "ccafuse/errors.hpp"

namespace ccafuse {

double pearson(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) throw DimensionError("pearson: length mismatch");
  const VectorXd ac = a.array() - a.mean();
  const VectorXd bc = b.array() - b.mean();
  const double na = ac.norm();
  const double nb = bc.norm();
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return ac.dot(bc) / (na * nb);
}

double canonical_correlation(const VectorXd& u, const VectorXd& v, const DataMatrix& x,
                             const DataMatrix& y) {
  if (u.size() != x.n_features() || v.size() != y.n_features())
    throw DimensionError("canonical_correlation: weight length does not match features");
  if (x.n_samples() != y.n_samples())
    throw DimensionError("canonical_correlation: sample count mismatch");
  const VectorXd a = x.values().transpose() * u;
  const VectorXd b = y.values().transpose() * v;
  return pearson(a, b);
}

void fix_sign(VectorXd& u, VectorXd& v) {
  if (u.size() == 0) return;
  Eigen::Index idx = 0;
  u.cwiseAbs().maxCoeff(&idx);
  if (u(idx) < 0.0) {
    u = -u;
    v = -v;
  }
}

SingularTriplet leading_singular_triplet(const MatrixXd& m) {
  Eigen::BDCSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU().col(0), svd.matrixV().col(0), svd.singularValues()(0)};
}

std::vector<CanonicalPair> cca_fit(const DataMatrix& x, const DataMatrix& y, int k,
                                   double ridge, WeightNormalization norm) {
  const auto p = x.n_features();
  const auto q = y.n_features();
  if (k < 1 || k > std::min(p, q)) {
    std::ostringstream msg;
    msg << "cca_fit: k = " << k << " outside [1, " << std::min(p, q) << "]";
    throw DomainError(msg.str());
  }
  const CovarianceTriple c = covariance_triple(x, y);
  const SymmetricRoots rx = symmetric_roots(c.cxx, ridge);
  const SymmetricRoots ry = symmetric_roots(c.cyy, ridge);
  const MatrixXd a = rx.inv_sqrt * c.cxy * ry.inv_sqrt;

  Eigen::BDCSVD<MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;

  std::vector<CanonicalPair> pairs;
  pairs.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    CanonicalPair pair;
    pair.iteration = j;
    pair.u = rx.inv_sqrt * svd.matrixU().col(j);
    pair.v = ry.inv_sqrt * svd.matrixV().col(j);
    if (norm == WeightNormalization::unit_l2) {
      pair.u.normalize();
      pair.v.normalize();
    } else {
      const double su = std::sqrt(pair.u.dot(c.cxx * pair.u));
      const double sv2 = std::sqrt(pair.v.dot(c.cyy * pair.v));
      if (su > 0.0) pair.u /= su;
      if (sv2 > 0.0) pair.v /= sv2;
    }
    fix_sign(pair.u, pair.v);
    pair.degenerate = !(sv(j) > 1e-10 * top);
    pair.rho = pair.degenerate ? 0.0 : canonical_correlation(pair.u, pair.v, x, y);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace ccafuse
