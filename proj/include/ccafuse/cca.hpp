#pragma once

#include <vector>

#include "ccafuse/datamodel.hpp"

namespace ccafuse {

/// One pair of canonical weights and the correlation of its variates.
struct CanonicalPair {
  VectorXd u;
  VectorXd v;
  double rho = 0.0;
  int iteration = 0;
  bool converged = true;
  // set when the pair carries no correlation signal (rank deficiency)
  bool degenerate = false;
};

enum class WeightNormalization {
  unit_l2,        // ||u||_2 = ||v||_2 = 1
  unit_variance,  // u^T Cxx u = v^T Cyy v = 1
};

/// Classical CCA from the top-k SVD of the whitened coupling matrix.
///
/// Pairs come back in decreasing singular-value order with the sign fixed so
/// the largest-magnitude entry of u is positive. Singular values below 1e-10
/// of the largest mark trailing pairs as degenerate with rho = 0.
std::vector<CanonicalPair> cca_fit(const DataMatrix& x, const DataMatrix& y, int k,
                                   double ridge,
                                   WeightNormalization norm = WeightNormalization::unit_l2);

/// Pearson correlation of u^T X and v^T Y; 0 when either variate vanishes.
double canonical_correlation(const VectorXd& u, const VectorXd& v, const DataMatrix& x,
                             const DataMatrix& y);
double pearson(const VectorXd& a, const VectorXd& b);

/// Flip (u, v) jointly so the largest-magnitude entry of u is positive.
void fix_sign(VectorXd& u, VectorXd& v);

struct SingularTriplet {
  VectorXd left;
  VectorXd right;
  double value = 0.0;
};
SingularTriplet leading_singular_triplet(const MatrixXd& m);

}  // namespace ccafuse
