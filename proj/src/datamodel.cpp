#include "ccafuse/datamodel.hpp"

#include <cmath>
#include <sstream>

#include "ccafuse/errors.hpp"

namespace ccafuse {

namespace {

void require_shape(const MatrixXd& values) {
  if (values.rows() < 1 || values.cols() < 2) {
    std::ostringstream msg;
    msg << "data matrix needs >= 1 feature and >= 2 samples, got " << values.rows()
        << "x" << values.cols();
    throw DimensionError(msg.str());
  }
}

}  // namespace

DataMatrix::DataMatrix(MatrixXd values, bool centered)
    : values_(std::move(values)), centered_(centered) {
  require_shape(values_);
}

VectorXd DataMatrix::row_means() const { return values_.rowwise().mean(); }

FeatureScaling FeatureScaling::center_only(const MatrixXd& values) {
  require_shape(values);
  return {values.rowwise().mean(), VectorXd::Ones(values.rows())};
}

FeatureScaling FeatureScaling::standardize(const MatrixXd& values) {
  require_shape(values);
  FeatureScaling s;
  s.mean = values.rowwise().mean();
  s.scale.resize(values.rows());
  const double n = static_cast<double>(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double var = (values.row(i).array() - s.mean(i)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale(i) = sd > 1e-12 ? sd : 0.0;
  }
  return s;
}

MatrixXd FeatureScaling::apply(const MatrixXd& values) const {
  if (values.rows() != mean.size())
    throw DimensionError("feature scaling fitted on a different feature count");
  MatrixXd out = values.colwise() - mean;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (scale(i) == 0.0)
      out.row(i).setZero();
    else if (scale(i) != 1.0)
      out.row(i) /= scale(i);
  }
  return out;
}

DataMatrix center(const DataMatrix& x) {
  if (x.values().size() == 0) throw DimensionError("cannot center an empty matrix");
  return DataMatrix(FeatureScaling::center_only(x.values()).apply(x.values()), true);
}

DataMatrix standardize(const DataMatrix& x) {
  if (x.values().size() == 0) throw DimensionError("cannot standardize an empty matrix");
  return DataMatrix(FeatureScaling::standardize(x.values()).apply(x.values()), true);
}

CovarianceTriple covariance_triple(const DataMatrix& x, const DataMatrix& y) {
  if (x.n_samples() != y.n_samples()) {
    std::ostringstream msg;
    msg << "sample count mismatch: " << x.n_samples() << " vs " << y.n_samples();
    throw DimensionError(msg.str());
  }
  const MatrixXd& xv = x.values();
  const MatrixXd& yv = y.values();
  CovarianceTriple c;
  c.cxx = xv * xv.transpose();
  c.cyy = yv * yv.transpose();
  c.cxy = xv * yv.transpose();
  // symmetrize away accumulation-order asymmetry
  c.cxx = 0.5 * (c.cxx + c.cxx.transpose()).eval();
  c.cyy = 0.5 * (c.cyy + c.cyy.transpose()).eval();
  return c;
}

SymmetricRoots symmetric_roots(const MatrixXd& c, double ridge) {
  if (ridge < 0.0) throw DomainError("ridge must be non-negative");
  if (c.rows() != c.cols()) throw DimensionError("symmetric_roots needs a square matrix");
  MatrixXd shifted = c;
  shifted.diagonal().array() += ridge;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(shifted);
  if (eig.info() != Eigen::Success) throw SingularityError("eigendecomposition failed");
  VectorXd lambda = eig.eigenvalues();
  const double largest = std::max(lambda.maxCoeff(), 0.0);
  const double smallest = lambda.minCoeff();
  if (ridge > 0.0) lambda = lambda.cwiseMax(ridge);
  const double floor = 1e-12 * std::max(largest, 1e-300);
  if (lambda.minCoeff() <= floor) {
    std::ostringstream msg;
    msg << "matrix is not positive definite after ridge " << ridge
        << " (smallest eigenvalue " << smallest << ", largest " << largest << ")";
    throw SingularityError(msg.str());
  }
  const MatrixXd& q = eig.eigenvectors();
  SymmetricRoots r;
  r.inv_sqrt = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  r.sqrt = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
  return r;
}

MatrixXd whitened_coupling(const CovarianceTriple& c, double ridge) {
  if (c.cxy.rows() != c.cxx.rows() || c.cxy.cols() != c.cyy.rows())
    throw DimensionError("covariance triple blocks disagree in shape");
  const MatrixXd kx = symmetric_roots(c.cxx, ridge).inv_sqrt;
  const MatrixXd ky = symmetric_roots(c.cyy, ridge).inv_sqrt;
  return kx * c.cxy * ky;
}

double default_ridge(const MatrixXd& cxx, Eigen::Index n_samples) {
  const auto p = cxx.rows();
  if (p < n_samples) return 0.0;
  return 1e-6 * cxx.trace() / static_cast<double>(p);
}

}  // namespace ccafuse
