#include "ccafuse/genmodel.hpp"

#include <cmath>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

void ModelParams::validate() const {
  if (wx.cols() != wy.cols()) throw DimensionError("Wx and Wy need the same latent dimension");
  if (wx.cols() < 1 || wx.rows() < 1 || wy.rows() < 1)
    throw DimensionError("empty model weights");
  if (!(sigma_x > 0.0) || !(sigma_y > 0.0)) throw DomainError("noise levels must be positive");
}

SampledData sample_dataset(const ModelParams& params, Eigen::Index n, std::uint64_t seed) {
  params.validate();
  if (n < 1) throw DomainError("need at least one sample");
  const auto d = params.d();
  const auto p = params.wx.rows();
  const auto q = params.wy.rows();
  Rng rng(seed);
  MatrixXd z(d, n);
  MatrixXd ex(p, n);
  MatrixXd ey(q, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index r = 0; r < d; ++r) z(r, i) = rng.normal();
    for (Eigen::Index r = 0; r < p; ++r) ex(r, i) = params.sigma_x * rng.normal();
    for (Eigen::Index r = 0; r < q; ++r) ey(r, i) = params.sigma_y * rng.normal();
  }
  MatrixXd x = params.wx * z + ex;
  MatrixXd y = params.wy * z + ey;
  return {std::move(z), DataMatrix(std::move(x)), DataMatrix(std::move(y))};
}

namespace {

// (W^T Psi^{-1} W + I)^{-1} W^T Psi^{-1} for diagonal Psi given by its inverse.
MatrixXd information_form(const MatrixXd& w, const VectorXd& precision) {
  const MatrixXd wt_prec = w.transpose() * precision.asDiagonal();
  MatrixXd a = wt_prec * w;
  a.diagonal().array() += 1.0;
  return a.llt().solve(wt_prec);
}

}  // namespace

PosteriorEstimator posterior_single(const MatrixXd& w, double sigma, EstimatorKind kind) {
  if (!(sigma > 0.0)) throw DomainError("posterior_single needs sigma > 0");
  if (kind != EstimatorKind::single_x && kind != EstimatorKind::single_y)
    throw DomainError("posterior_single builds single-modality estimators only");
  PosteriorEstimator est;
  est.kind = kind;
  est.g = information_form(w, VectorXd::Constant(w.rows(), 1.0 / (sigma * sigma)));
  return est;
}

PosteriorEstimator posterior_mixed(const PosteriorEstimator& gx, const PosteriorEstimator& gy,
                                   double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    std::ostringstream msg;
    msg << "beta = " << beta << " outside [0, 1]";
    throw DomainError(msg.str());
  }
  if (gx.kind != EstimatorKind::single_x || gy.kind != EstimatorKind::single_y)
    throw DomainError("posterior_mixed needs an x estimator and a y estimator");
  if (gx.g.rows() != gy.g.rows()) throw DimensionError("estimators disagree in latent dimension");
  PosteriorEstimator est;
  est.kind = EstimatorKind::mixed;
  est.beta = beta;
  est.g.resize(gx.g.rows(), gx.g.cols() + gy.g.cols());
  est.g << beta * gx.g, (1.0 - beta) * gy.g;
  return est;
}

PosteriorEstimator posterior_joint(const ModelParams& params) {
  params.validate();
  const auto p = params.wx.rows();
  const auto q = params.wy.rows();
  MatrixXd w(p + q, params.d());
  w << params.wx, params.wy;
  VectorXd precision(p + q);
  precision.head(p).setConstant(1.0 / (params.sigma_x * params.sigma_x));
  precision.tail(q).setConstant(1.0 / (params.sigma_y * params.sigma_y));
  PosteriorEstimator est;
  est.kind = EstimatorKind::joint;
  est.g = information_form(w, precision);
  return est;
}

double estimation_error(const PosteriorEstimator& est, const ModelParams& params,
                        const VectorXd& z) {
  params.validate();
  const auto d = params.d();
  const auto p = params.wx.rows();
  const auto q = params.wy.rows();
  if (z.size() != d || est.g.rows() != d) throw DimensionError("latent dimension mismatch");

  MatrixXd g = MatrixXd::Zero(d, p + q);
  switch (est.kind) {
    case EstimatorKind::single_x:
      if (est.g.cols() != p) throw DimensionError("x estimator width differs from p");
      g.leftCols(p) = est.g;
      break;
    case EstimatorKind::single_y:
      if (est.g.cols() != q) throw DimensionError("y estimator width differs from q");
      g.rightCols(q) = est.g;
      break;
    default:
      if (est.g.cols() != p + q) throw DimensionError("estimator width differs from p + q");
      g = est.g;
  }
  MatrixXd w(p + q, d);
  w << params.wx, params.wy;
  MatrixXd k = g * w;
  k.diagonal().array() -= 1.0;
  const double bias = (k * z).squaredNorm();
  const double noise = params.sigma_x * params.sigma_x * g.leftCols(p).squaredNorm() +
                       params.sigma_y * params.sigma_y * g.rightCols(q).squaredNorm();
  return bias + noise;
}

MLEstimate mle_from_cca(const CovarianceTriple& c, const std::vector<CanonicalPair>& pairs,
                        const std::optional<MatrixXd>& mx) {
  if (pairs.empty()) throw DomainError("mle_from_cca needs at least one canonical pair");
  const auto d = static_cast<Eigen::Index>(pairs.size());
  const auto p = c.cxx.rows();
  const auto q = c.cyy.rows();

  MLEstimate m;
  m.u_mat.resize(p, d);
  m.v_mat.resize(q, d);
  VectorXd rho(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto& pair = pairs[static_cast<std::size_t>(j)];
    if (pair.u.size() != p || pair.v.size() != q)
      throw DimensionError("canonical weights do not match the covariance blocks");
    const double su = std::sqrt(pair.u.dot(c.cxx * pair.u));
    const double sv = std::sqrt(pair.v.dot(c.cyy * pair.v));
    if (!(su > 0.0) || !(sv > 0.0)) throw DegenerateError("canonical variate with zero variance");
    m.u_mat.col(j) = pair.u / su;
    m.v_mat.col(j) = pair.v / sv;
    rho(j) = std::max(pair.rho, 0.0);
  }
  m.p_diag = rho.asDiagonal();

  if (mx) {
    if (mx->rows() != d || mx->cols() != d) throw DimensionError("mx must be d x d");
    Eigen::FullPivLU<MatrixXd> lu(*mx);
    if (!lu.isInvertible()) throw DomainError("mx is singular");
    m.mx = *mx;
    // Mx My^T = P  =>  My = P Mx^{-T}
    m.my = m.p_diag * lu.inverse().transpose();
  } else {
    m.mx = rho.cwiseSqrt().asDiagonal();
    m.my = m.mx;
  }
  m.wx_hat = c.cxx * m.u_mat * m.mx;
  m.wy_hat = c.cyy * m.v_mat * m.my;
  return m;
}

VectorXd posterior_from_embeddings(const VectorXd& emb_x, const VectorXd& emb_y,
                                   const MLEstimate& m) {
  const auto d = m.p_diag.rows();
  if (emb_x.size() != d || emb_y.size() != d) throw DimensionError("embedding length differs from d");
  VectorXd rho = m.p_diag.diagonal().cwiseMax(0.0);
  if (rho.size() > 0 && rho.maxCoeff() >= 1.0 - 1e-10) {
    std::ostringstream msg;
    msg << "canonical correlation " << rho.maxCoeff() << " leaves [[I, P], [P, I]] singular";
    throw SingularityError(msg.str());
  }
  MatrixXd block = MatrixXd::Identity(2 * d, 2 * d);
  block.topRightCorner(d, d) = rho.asDiagonal();
  block.bottomLeftCorner(d, d) = rho.asDiagonal();
  VectorXd emb(2 * d);
  emb << emb_x, emb_y;
  MatrixXd mm(2 * d, d);
  mm << m.mx, m.my;
  return mm.transpose() * block.llt().solve(emb);
}

}  // namespace ccafuse
