#include "ccafuse/metrics.hpp"

#include <cmath>
#include <limits>

#include "ccafuse/errors.hpp"
#include "ccafuse/io.hpp"
#include "json.hpp"

namespace ccafuse {

namespace {

constexpr double kResidualTol = 1e-8;

VectorXd residual(const MatrixXd& basis, Eigen::Index used, const VectorXd& w) {
  if (used == 0) return w;
  const auto b = basis.leftCols(used);
  VectorXd r = w - b * (b.transpose() * w);
  return r - b * (b.transpose() * r);
}

nlohmann::ordered_json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

VectorXd additional_correlations(const DataMatrix& x, const DataMatrix& y,
                                 const EmbeddingBasis& emb) {
  const auto k = emb.u_mat.cols();
  if (emb.u_mat.rows() != x.n_features() || emb.v_mat.rows() != y.n_features() ||
      emb.v_mat.cols() != k)
    throw DimensionError("embedding does not match the data");
  MatrixXd r_basis(x.n_features(), k);
  MatrixXd s_basis(y.n_features(), k);
  Eigen::Index nr = 0;
  Eigen::Index ns = 0;
  VectorXd out = VectorXd::Zero(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const VectorXd r = residual(r_basis, nr, emb.u_mat.col(j));
    const VectorXd s = residual(s_basis, ns, emb.v_mat.col(j));
    const double rn = r.norm();
    const double sn = s.norm();
    if (rn < kResidualTol || sn < kResidualTol) continue;
    r_basis.col(nr++) = r / rn;
    s_basis.col(ns++) = s / sn;
    out(j) = canonical_correlation(r / rn, s / sn, x, y);
  }
  return out;
}

MatrixXd orthogonality_matrix(const std::vector<MatrixXd>& cross_trace,
                              const EmbeddingBasis& emb) {
  const auto k = emb.u_mat.cols();
  if (static_cast<Eigen::Index>(cross_trace.size()) != k) {
    throw DimensionError("trace has " + std::to_string(cross_trace.size()) +
                         " matrices for " + std::to_string(k) + " embedding columns");
  }
  MatrixXd m = MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < k; ++i) {
    const MatrixXd& c = cross_trace[static_cast<std::size_t>(i)];
    if (c.rows() != emb.u_mat.rows() || c.cols() != emb.v_mat.rows())
      throw DimensionError("trace matrix shape does not match the weights");
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = 0.5 * ((c.transpose() * emb.u_mat.col(j)).norm() +
                       (c * emb.v_mat.col(j)).norm());
    }
  }
  return m;
}

double mse(const MatrixXd& pred, const MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw DimensionError("mse: prediction and truth differ in shape");
  if (pred.cols() == 0) throw DimensionError("mse: no samples");
  return (pred - truth).colwise().squaredNorm().mean();
}

std::string metric_report_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  auto rhos = nlohmann::ordered_json::array();
  for (double r : report.additional_rhos) rhos.push_back(number(r));
  j["additional_rhos"] = rhos;
  j["additional_sum"] = number(report.additional_sum());
  auto ortho = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < report.ortho_matrix.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < report.ortho_matrix.cols(); ++c)
      row.push_back(number(report.ortho_matrix(i, c)));
    ortho.push_back(row);
  }
  j["ortho_matrix"] = ortho;
  j["mse"] = report.mse ? number(*report.mse) : nullptr;
  return j.dump(2) + "\n";
}

MetricReport parse_metric_report(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto value = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  MetricReport r;
  const auto& rhos = j.at("additional_rhos");
  r.additional_rhos.resize(static_cast<Eigen::Index>(rhos.size()));
  for (std::size_t i = 0; i < rhos.size(); ++i)
    r.additional_rhos(static_cast<Eigen::Index>(i)) = value(rhos[i]);
  const auto& ortho = j.at("ortho_matrix");
  const auto k = static_cast<Eigen::Index>(ortho.size());
  r.ortho_matrix.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index c = 0; c < k; ++c)
      r.ortho_matrix(i, c) = value(ortho[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
  if (!j.at("mse").is_null()) r.mse = j.at("mse").get<double>();
  return r;
}

void save_ortho_csv(const MatrixXd& ortho, const std::filesystem::path& path) {
  write_matrix_csv(path, ortho, numbered_ids("i", ortho.rows(), 1),
                   numbered_ids("j", ortho.cols(), 1));
}

}  // namespace ccafuse
