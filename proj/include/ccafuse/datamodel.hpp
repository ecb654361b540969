#pragma once

#include <Eigen/Dense>

namespace ccafuse {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One modality: rows are features, columns are samples.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(MatrixXd values, bool centered = false);

  const MatrixXd& values() const noexcept { return values_; }
  Eigen::Index n_features() const noexcept { return values_.rows(); }
  Eigen::Index n_samples() const noexcept { return values_.cols(); }
  bool centered() const noexcept { return centered_; }

  /// Row means of the current values.
  VectorXd row_means() const;

 private:
  MatrixXd values_;
  bool centered_ = false;
};

/// Per-feature location/scale estimated on one sample set and applied to others.
struct FeatureScaling {
  VectorXd mean;
  VectorXd scale;  // 1 for centering only; 0 marks a constant row

  static FeatureScaling center_only(const MatrixXd& values);
  static FeatureScaling standardize(const MatrixXd& values);
  MatrixXd apply(const MatrixXd& values) const;
};

/// Unnormalized second-moment matrices of two centered modalities.
struct CovarianceTriple {
  MatrixXd cxx;
  MatrixXd cyy;
  MatrixXd cxy;
};

/// Subtract each row mean.
DataMatrix center(const DataMatrix& x);

/// Row-wise z-scores (population standard deviation). Constant rows become zero.
DataMatrix standardize(const DataMatrix& x);

/// cxx = X X^T, cyy = Y Y^T, cxy = X Y^T.
CovarianceTriple covariance_triple(const DataMatrix& x, const DataMatrix& y);

/// Symmetric (C + ridge I)^{-1/2} and (C + ridge I)^{1/2} through one
/// eigendecomposition. Throws SingularityError with the smallest eigenvalue
/// when the shifted matrix is not positive definite.
struct SymmetricRoots {
  MatrixXd inv_sqrt;
  MatrixXd sqrt;
};
SymmetricRoots symmetric_roots(const MatrixXd& c, double ridge);

/// (cxx + ridge I)^{-1/2} cxy (cyy + ridge I)^{-1/2}.
MatrixXd whitened_coupling(const CovarianceTriple& c, double ridge);

/// 1e-6 * trace(cxx) / p when p >= n (the auto-covariance is singular), else 0.
double default_ridge(const MatrixXd& cxx, Eigen::Index n_samples);

}  // namespace ccafuse
