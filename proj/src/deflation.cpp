#include "ccafuse/deflation.hpp"

#include <cmath>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/io.hpp"
#include "json.hpp"

namespace ccafuse {

namespace {

constexpr double kUnitTol = 1e-8;
constexpr double kResidualTol = 1e-8;

void require_unit(const VectorXd& w, const char* name) {
  if (std::abs(w.norm() - 1.0) > kUnitTol) {
    std::ostringstream msg;
    msg << name << " must have unit norm, got " << w.norm();
    throw ContractError(msg.str());
  }
}

// Component of w orthogonal to the columns of basis (two Gram-Schmidt passes).
VectorXd residual(const MatrixXd& basis, const VectorXd& w) {
  if (basis.cols() == 0) return w;
  VectorXd r = w - basis * (basis.transpose() * w);
  return r - basis * (basis.transpose() * r);
}

MatrixXd append_column(const MatrixXd& m, const VectorXd& c) {
  MatrixXd out(c.size(), m.cols() + 1);
  if (m.cols() > 0) out.leftCols(m.cols()) = m;
  out.col(m.cols()) = c;
  return out;
}

}  // namespace

std::string scheme_name(DeflationScheme s) {
  switch (s) {
    case DeflationScheme::hd: return "hd";
    case DeflationScheme::nhd: return "nhd";
    case DeflationScheme::pd: return "pd";
    case DeflationScheme::opd: return "opd";
  }
  return "?";
}

DeflationScheme parse_scheme(const std::string& name) {
  if (name == "hd") return DeflationScheme::hd;
  if (name == "nhd") return DeflationScheme::nhd;
  if (name == "pd") return DeflationScheme::pd;
  if (name == "opd") return DeflationScheme::opd;
  throw ConfigError("unknown deflation scheme '" + name + "' (hd, nhd, pd, opd)");
}

DeflationState DeflationState::for_data(DeflationScheme scheme, const MatrixXd& x,
                                        const MatrixXd& y) {
  DeflationState st;
  st.scheme = scheme;
  if (scheme == DeflationScheme::hd || scheme == DeflationScheme::nhd) {
    st.c_cur = x * y.transpose();
  } else {
    st.x_cur = x;
    st.y_cur = y;
  }
  st.r_basis.resize(x.rows(), 0);
  st.s_basis.resize(y.rows(), 0);
  return st;
}

MatrixXd hotelling_step(const MatrixXd& c, const VectorXd& u, const VectorXd& v) {
  if (u.size() != c.rows() || v.size() != c.cols()) throw DimensionError("hotelling_step: shape");
  const double coef = u.dot(c * v);
  return c - coef * u * v.transpose();
}

MatrixXd normalized_hotelling_step(const MatrixXd& c, const VectorXd& u, const VectorXd& v) {
  if (u.size() != c.rows() || v.size() != c.cols())
    throw DimensionError("normalized_hotelling_step: shape");
  // ||u v^T||_F = ||u|| ||v||, <C, u v^T> = u^T C v
  const double scale = u.norm() * v.norm();
  if (scale < 1e-12) throw DegenerateError("normalized Hotelling step with a vanishing u v^T");
  const double coef = u.dot(c * v) / scale;
  return c - coef * u * v.transpose();
}

ProjectedPair projected_step(const MatrixXd& x, const MatrixXd& y, const VectorXd& u,
                             const VectorXd& v) {
  if (u.size() != x.rows() || v.size() != y.rows()) throw DimensionError("projected_step: shape");
  require_unit(u, "u");
  require_unit(v, "v");
  ProjectedPair out;
  out.x = x - u * (u.transpose() * x);
  out.y = y - v * (v.transpose() * y);
  return out;
}

DeflationState orthogonalized_projected_step(DeflationState state, const VectorXd& u,
                                             const VectorXd& v) {
  if (state.scheme != DeflationScheme::opd)
    throw ContractError("orthogonalized_projected_step on a non-OPD state");
  if (u.size() != state.x_cur.rows() || v.size() != state.y_cur.rows())
    throw DimensionError("orthogonalized_projected_step: shape");
  require_unit(u, "u");
  require_unit(v, "v");
  const VectorXd rt = residual(state.r_basis, u);
  const VectorXd st = residual(state.s_basis, v);
  if (rt.norm() < kResidualTol || st.norm() < kResidualTol) {
    state.degenerate = true;
    return state;
  }
  // first step: r_1 = u_1 as given
  const VectorXd r = state.r_basis.cols() == 0 ? u : VectorXd(rt.normalized());
  const VectorXd s = state.s_basis.cols() == 0 ? v : VectorXd(st.normalized());
  state.x_cur -= r * (r.transpose() * state.x_cur);
  state.y_cur -= s * (s.transpose() * state.y_cur);
  state.r_basis = append_column(state.r_basis, r);
  state.s_basis = append_column(state.s_basis, s);
  state.degenerate = false;
  ++state.iteration;
  return state;
}

std::string solver_name(const PairSolver& solver) {
  switch (solver.index()) {
    case 0: return "cca";
    case 1: return "scca";
    default: return "gnscca";
  }
}

EmbeddingBasis generate_embeddings(const DataMatrix& x, const DataMatrix& y,
                                   const PairSolver& solver, DeflationScheme scheme, int k,
                                   DeflationTrace* trace) {
  if (k < 1) throw DomainError("need k >= 1 embedding dimensions");
  if (x.n_samples() != y.n_samples()) throw DimensionError("sample count mismatch");
  const DataMatrix xc = x.centered() ? x : center(x);
  const DataMatrix yc = y.centered() ? y : center(y);
  const auto p = xc.n_features();
  const auto q = yc.n_features();
  const bool classical = std::holds_alternative<CcaSolver>(solver);
  if (classical && k > std::min(p, q)) {
    std::ostringstream msg;
    msg << "k = " << k << " exceeds min(p, q) = " << std::min(p, q);
    throw DomainError(msg.str());
  }

  // Classical CCA runs in whitened coordinates x~ = Kx x. sx, sy map back.
  MatrixXd kx, ky, sx, sy;
  MatrixXd wx = xc.values();
  MatrixXd wy = yc.values();
  if (classical) {
    double ridge = std::get<CcaSolver>(solver).ridge;
    const MatrixXd cxx = wx * wx.transpose();
    const MatrixXd cyy = wy * wy.transpose();
    const double rx = ridge >= 0.0 ? ridge : default_ridge(cxx, xc.n_samples());
    const double ry = ridge >= 0.0 ? ridge : default_ridge(cyy, yc.n_samples());
    auto rootx = symmetric_roots(cxx, rx);
    auto rooty = symmetric_roots(cyy, ry);
    kx = std::move(rootx.inv_sqrt);
    sx = std::move(rootx.sqrt);
    ky = std::move(rooty.inv_sqrt);
    sy = std::move(rooty.sqrt);
    wx = kx * wx;
    wy = ky * wy;
  }

  EmbeddingBasis basis;
  basis.solver = solver_name(solver);
  basis.scheme = scheme;
  basis.requested_k = k;
  basis.u_mat.resize(p, 0);
  basis.v_mat.resize(q, 0);

  const bool hotelling = scheme == DeflationScheme::hd || scheme == DeflationScheme::nhd;
  DeflationState st = DeflationState::for_data(scheme, wx, wy);
  double first_norm = 0.0;
  double first_sigma = 0.0;

  for (int j = 0; j < k; ++j) {
    const MatrixXd cross = hotelling ? st.c_cur : MatrixXd(st.x_cur * st.y_cur.transpose());
    const double cnorm = cross.norm();
    if (j == 0) first_norm = cnorm;
    if (j > 0 && cnorm <= 1e-12 * first_norm) {
      basis.stop_reason = "cross matrix exhausted before iteration " + std::to_string(j + 1);
      break;
    }

    VectorXd u, v;
    IterationFlags flags;
    try {
      if (classical) {
        if (cnorm == 0.0) throw DegenerateError("zero cross matrix");
        SingularTriplet t = leading_singular_triplet(cross);
        if (j == 0) first_sigma = t.value;
        if (j > 0 && !(t.value > 1e-10 * first_sigma)) {
          basis.flags.push_back({true, true});
          basis.stop_reason = "whitened coupling exhausted at iteration " + std::to_string(j + 1);
          break;
        }
        u = std::move(t.left);
        v = std::move(t.right);
      } else {
        PairFit fit;
        if (const auto* s = std::get_if<SccaSolver>(&solver))
          fit = scca_solve(cross, s->cfg);
        else {
          const auto& g = std::get<GnSccaSolver>(solver);
          fit = gnscca_solve(cross, g.gu, g.gv, g.cfg);
        }
        u = std::move(fit.pair.u);
        v = std::move(fit.pair.v);
        flags.converged = fit.pair.converged;
      }
    } catch (const Error& e) {
      if (j == 0 || e.error_class() != ErrorClass::numerical) throw;
      basis.flags.push_back({false, true});
      basis.stop_reason = "iteration " + std::to_string(j + 1) + ": " + e.what();
      break;
    }
    u.normalize();
    v.normalize();

    VectorXd ud = classical ? VectorXd(kx * u) : u;
    VectorXd vd = classical ? VectorXd(ky * v) : v;
    ud.normalize();
    vd.normalize();
    fix_sign(ud, vd);

    switch (scheme) {
      case DeflationScheme::hd: st.c_cur = hotelling_step(st.c_cur, u, v); break;
      case DeflationScheme::nhd: st.c_cur = normalized_hotelling_step(st.c_cur, u, v); break;
      case DeflationScheme::pd: {
        auto pr = projected_step(st.x_cur, st.y_cur, u, v);
        st.x_cur = std::move(pr.x);
        st.y_cur = std::move(pr.y);
        break;
      }
      case DeflationScheme::opd:
        st = orthogonalized_projected_step(std::move(st), u, v);
        if (st.degenerate) {
          flags.degenerate = true;
          basis.flags.push_back(flags);
          basis.stop_reason =
              "weights repeat the accumulated basis at iteration " + std::to_string(j + 1);
          if (j == 0) throw DegenerateError(basis.stop_reason);
          break;
        }
        break;
    }
    if (st.degenerate) break;

    basis.u_mat = append_column(basis.u_mat, ud);
    basis.v_mat = append_column(basis.v_mat, vd);
    basis.rhos.push_back(canonical_correlation(ud, vd, xc, yc));
    basis.flags.push_back(flags);

    if (trace) {
      if (hotelling) {
        trace->cross.push_back(classical ? MatrixXd(sx * st.c_cur * sy) : st.c_cur);
      } else {
        MatrixXd xi = classical ? MatrixXd(sx * st.x_cur) : st.x_cur;
        MatrixXd yi = classical ? MatrixXd(sy * st.y_cur) : st.y_cur;
        trace->cross.push_back(xi * yi.transpose());
        trace->x.push_back(std::move(xi));
        trace->y.push_back(std::move(yi));
      }
    }
  }
  return basis;
}

void save_embedding(const EmbeddingBasis& basis, const std::filesystem::path& dir,
                    const std::string& prefix) {
  const auto cols = numbered_ids("k", basis.k(), 1);
  write_matrix_csv(dir / (prefix + "U.csv"), basis.u_mat, "x", cols);
  write_matrix_csv(dir / (prefix + "V.csv"), basis.v_mat, "y", cols);
  nlohmann::ordered_json meta;
  meta["solver"] = basis.solver;
  meta["scheme"] = scheme_name(basis.scheme);
  meta["requested_k"] = basis.requested_k;
  meta["k"] = basis.k();
  meta["rhos"] = basis.rhos;
  auto flags = nlohmann::ordered_json::array();
  for (const auto& f : basis.flags)
    flags.push_back({{"converged", f.converged}, {"degenerate", f.degenerate}});
  meta["flags"] = flags;
  meta["stop_reason"] = basis.stop_reason;
  write_text(dir / (prefix + "embedding.json"), meta.dump(2) + "\n");
}

EmbeddingBasis load_embedding(const std::filesystem::path& dir, const std::string& prefix) {
  EmbeddingBasis basis;
  const auto meta = nlohmann::json::parse(read_text(dir / (prefix + "embedding.json")));
  basis.solver = meta.at("solver").get<std::string>();
  basis.scheme = parse_scheme(meta.at("scheme").get<std::string>());
  basis.requested_k = meta.at("requested_k").get<int>();
  basis.rhos = meta.at("rhos").get<std::vector<double>>();
  for (const auto& f : meta.at("flags"))
    basis.flags.push_back({f.at("converged").get<bool>(), f.at("degenerate").get<bool>()});
  basis.stop_reason = meta.at("stop_reason").get<std::string>();
  basis.u_mat = read_matrix_csv(dir / (prefix + "U.csv")).values;
  basis.v_mat = read_matrix_csv(dir / (prefix + "V.csv")).values;
  if (basis.u_mat.cols() != meta.at("k").get<int>())
    throw DataError("embedding CSV and metadata disagree on k in " + dir.string());
  return basis;
}

}  // namespace ccafuse
