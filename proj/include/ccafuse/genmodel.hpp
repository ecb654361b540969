#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ccafuse/cca.hpp"
#include "ccafuse/datamodel.hpp"

namespace ccafuse {

/// Two-modality Gaussian latent model: x = Wx z + e_x, y = Wy z + e_y with
/// z ~ N(0, I_d) and isotropic noise of standard deviation sigma_x, sigma_y.
struct ModelParams {
  MatrixXd wx;  // p x d
  MatrixXd wy;  // q x d
  double sigma_x = 1.0;
  double sigma_y = 1.0;

  Eigen::Index d() const noexcept { return wx.cols(); }
  void validate() const;
};

struct SampledData {
  MatrixXd z;  // d x n
  DataMatrix x;
  DataMatrix y;
};

/// Draws z_i, then the x noise, then the y noise for each sample in turn.
SampledData sample_dataset(const ModelParams& params, Eigen::Index n, std::uint64_t seed);

enum class EstimatorKind { single_x, single_y, mixed, joint };

/// Linear estimator z_hat = G obs, where obs is x, y or the stacked [x; y].
struct PosteriorEstimator {
  MatrixXd g;
  EstimatorKind kind = EstimatorKind::joint;
  double beta = 1.0;  // mixed only

  VectorXd apply(const VectorXd& obs) const { return g * obs; }
};

/// (W^T W / sigma^2 + I)^{-1} W^T / sigma^2
PosteriorEstimator posterior_single(const MatrixXd& w, double sigma,
                                    EstimatorKind kind = EstimatorKind::single_x);
/// [beta Gx | (1 - beta) Gy]
PosteriorEstimator posterior_mixed(const PosteriorEstimator& gx, const PosteriorEstimator& gy,
                                   double beta);
PosteriorEstimator posterior_joint(const ModelParams& params);

/// Conditional MSE of the estimator given z:
///   z^T (GW - I)^T (GW - I) z + trace(G Psi G^T)
/// Single-modality estimators are padded with zeros to act on [x; y].
double estimation_error(const PosteriorEstimator& est, const ModelParams& params,
                        const VectorXd& z);

/// Maximum-likelihood parameters recovered from the first d canonical pairs.
struct MLEstimate {
  MatrixXd wx_hat;
  MatrixXd wy_hat;
  MatrixXd mx;
  MatrixXd my;
  MatrixXd p_diag;
  // canonical weights rescaled to unit-variance variates
  MatrixXd u_mat;
  MatrixXd v_mat;
};

/// Wx = Cxx U Mx, Wy = Cyy V My with Mx My^T = P. Defaults to Mx = My = P^{1/2}.
MLEstimate mle_from_cca(const CovarianceTriple& c, const std::vector<CanonicalPair>& pairs,
                        const std::optional<MatrixXd>& mx = std::nullopt);

/// [Mx; My]^T [[I, P], [P, I]]^{-1} [emb_x; emb_y] with emb_x = U^T x, emb_y = V^T y.
VectorXd posterior_from_embeddings(const VectorXd& emb_x, const VectorXd& emb_y,
                                   const MLEstimate& m);

}  // namespace ccafuse
