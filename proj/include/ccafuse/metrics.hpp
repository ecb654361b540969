#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "ccafuse/datamodel.hpp"
#include "ccafuse/deflation.hpp"

namespace ccafuse {

/// rho~_k = corr(r_k^T X, s_k^T Y), where r_k is u_k with the span of the
/// earlier residuals removed. Residuals below 1e-8 give 0 and are not added
/// to the basis.
VectorXd additional_correlations(const DataMatrix& x, const DataMatrix& y,
                                 const EmbeddingBasis& emb);

/// Entry (i, j), i >= j: (||C_i^T u_j|| + ||C_i v_j||) / 2 with C_i the cross
/// matrix after deflation step i. Entries above the diagonal are NaN.
MatrixXd orthogonality_matrix(const std::vector<MatrixXd>& cross_trace,
                              const EmbeddingBasis& emb);

/// Mean over samples of the squared l2 error.
double mse(const MatrixXd& pred, const MatrixXd& truth);

struct MetricReport {
  VectorXd additional_rhos;
  MatrixXd ortho_matrix;  // may be empty when no trace is available
  std::optional<double> mse;

  double additional_sum() const { return additional_rhos.sum(); }
};

/// JSON text with NaN written as null.
std::string metric_report_json(const MetricReport& report);
MetricReport parse_metric_report(const std::string& text);
void save_ortho_csv(const MatrixXd& ortho, const std::filesystem::path& path);

}  // namespace ccafuse
