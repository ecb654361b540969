#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ccafuse/cca.hpp"
#include "ccafuse/datamodel.hpp"
#include "ccafuse/pcca.hpp"

namespace ccafuse {

enum class DeflationScheme { hd, nhd, pd, opd };

std::string scheme_name(DeflationScheme s);
DeflationScheme parse_scheme(const std::string& name);

/// Working matrices of one deflation run. HD and NHD only touch c_cur, PD and
/// OPD only x_cur and y_cur. The bases are filled by OPD.
struct DeflationState {
  DeflationScheme scheme = DeflationScheme::opd;
  MatrixXd x_cur;
  MatrixXd y_cur;
  MatrixXd c_cur;
  MatrixXd r_basis;  // p x j
  MatrixXd s_basis;  // q x j
  int iteration = 0;
  // set by the last OPD step when a residual collapsed
  bool degenerate = false;

  static DeflationState for_data(DeflationScheme scheme, const MatrixXd& x, const MatrixXd& y);
};

/// C - (u^T C v) u v^T
MatrixXd hotelling_step(const MatrixXd& c, const VectorXd& u, const VectorXd& v);
/// C - (<C, u v^T> / ||u v^T||_F) u v^T
MatrixXd normalized_hotelling_step(const MatrixXd& c, const VectorXd& u, const VectorXd& v);

struct ProjectedPair {
  MatrixXd x;
  MatrixXd y;
};
/// ((I - u u^T) X, (I - v v^T) Y); u and v must be unit norm.
ProjectedPair projected_step(const MatrixXd& x, const MatrixXd& y, const VectorXd& u,
                             const VectorXd& v);

/// Projects against the part of (u, v) orthogonal to the accumulated bases
/// and extends them. A residual below 1e-8 leaves the state untouched apart
/// from setting `degenerate`.
DeflationState orthogonalized_projected_step(DeflationState state, const VectorXd& u,
                                             const VectorXd& v);

struct CcaSolver {
  double ridge = -1.0;  // negative: default_ridge per modality
};
struct SccaSolver {
  PenaltyConfig cfg;
};
struct GnSccaSolver {
  PenaltyConfig cfg;
  GraphSpec gu;
  GraphSpec gv;
};
using PairSolver = std::variant<CcaSolver, SccaSolver, GnSccaSolver>;

std::string solver_name(const PairSolver& solver);

struct IterationFlags {
  bool converged = true;
  bool degenerate = false;
};

/// Stacked weights from the deflation loop, one unit-norm column per iteration.
struct EmbeddingBasis {
  MatrixXd u_mat;
  MatrixXd v_mat;
  std::vector<double> rhos;
  std::vector<IterationFlags> flags;
  std::string solver;
  DeflationScheme scheme = DeflationScheme::hd;
  int requested_k = 0;
  // empty unless the loop stopped before requested_k
  std::string stop_reason;

  int k() const noexcept { return static_cast<int>(u_mat.cols()); }
  bool truncated() const noexcept { return k() < requested_k; }
};

/// Matrices recorded after each deflation step, in data coordinates. For HD
/// and NHD only `cross` is filled.
struct DeflationTrace {
  std::vector<MatrixXd> cross;
  std::vector<MatrixXd> x;
  std::vector<MatrixXd> y;
};

/// Runs k rounds of fit-normalize-deflate.
///
/// Classical CCA works on the whitened data (the deflation acts on
/// whitened coordinates and the trace is mapped back); the penalized solvers
/// work on the raw data and cross products. A failure in the first round is
/// rethrown; later failures truncate the basis.
EmbeddingBasis generate_embeddings(const DataMatrix& x, const DataMatrix& y,
                                   const PairSolver& solver, DeflationScheme scheme, int k,
                                   DeflationTrace* trace = nullptr);

/// Writes <prefix>U.csv, <prefix>V.csv and <prefix>embedding.json into dir.
void save_embedding(const EmbeddingBasis& basis, const std::filesystem::path& dir,
                    const std::string& prefix = "");
EmbeddingBasis load_embedding(const std::filesystem::path& dir, const std::string& prefix = "");

}  // namespace ccafuse
