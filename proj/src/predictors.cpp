#include "ccafuse/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/io.hpp"
#include "ccafuse/pcca.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

// ---------------------------------------------------------------- MLP

namespace {

MatrixXd activate(const MatrixXd& h, Activation a) {
  if (a == Activation::relu) return h.cwiseMax(0.0);
  return h.array().tanh().matrix();
}

MatrixXd activation_slope(const MatrixXd& h, const MatrixXd& act, Activation a) {
  if (a == Activation::relu) return (h.array() > 0.0).cast<double>().matrix();
  return (1.0 - act.array().square()).matrix();
}

MLPModel zeros_like(const MLPModel& m) {
  MLPModel z;
  z.w1 = MatrixXd::Zero(m.w1.rows(), m.w1.cols());
  z.b1 = VectorXd::Zero(m.b1.size());
  z.w2 = MatrixXd::Zero(m.w2.rows(), m.w2.cols());
  z.b2 = VectorXd::Zero(m.b2.size());
  z.activation = m.activation;
  return z;
}

}  // namespace

double mlp_loss(const MLPModel& model, const MatrixXd& inputs, const MatrixXd& targets,
                MLPModel* grad) {
  if (inputs.rows() != model.n_inputs() || targets.rows() != model.n_outputs() ||
      inputs.cols() != targets.cols())
    throw DimensionError("mlp_loss: shapes do not match the model");
  const double n = static_cast<double>(inputs.cols());
  const MatrixXd h = (model.w1 * inputs).colwise() + model.b1;
  const MatrixXd a = activate(h, model.activation);
  const MatrixXd err = ((model.w2 * a).colwise() + model.b2) - targets;
  const double loss = err.squaredNorm() / (2.0 * n);
  if (grad) {
    *grad = zeros_like(model);
    const MatrixXd dy = err / n;
    grad->w2 = dy * a.transpose();
    grad->b2 = dy.rowwise().sum();
    const MatrixXd dh =
        (model.w2.transpose() * dy).cwiseProduct(activation_slope(h, a, model.activation));
    grad->w1 = dh * inputs.transpose();
    grad->b1 = dh.rowwise().sum();
  }
  return loss;
}

MatrixXd mlp_predict(const MLPModel& model, const MatrixXd& inputs) {
  if (inputs.rows() != model.n_inputs()) {
    std::ostringstream msg;
    msg << "model expects " << model.n_inputs() << " inputs, got " << inputs.rows();
    throw DimensionError(msg.str());
  }
  const MatrixXd a = activate((model.w1 * inputs).colwise() + model.b1, model.activation);
  return (model.w2 * a).colwise() + model.b2;
}

MLPModel mlp_fit(const MatrixXd& inputs, const MatrixXd& targets, const MLPOptions& opts,
                 const MatrixXd* val_inputs, const MatrixXd* val_targets) {
  const auto m = inputs.rows();
  const auto d = targets.rows();
  const auto n = inputs.cols();
  if (n < 2) throw DomainError("mlp_fit needs at least two samples");
  if (targets.cols() != n) throw DimensionError("inputs and targets differ in sample count");
  if (opts.hidden < 1 || opts.epochs < 1 || opts.batch_size < 1 || !(opts.lr > 0.0))
    throw DomainError("invalid MLP options");
  const bool validate = val_inputs && val_targets && val_inputs->cols() > 0;

  Rng rng(opts.seed);
  MLPModel model;
  model.activation = opts.activation;
  model.w1.resize(opts.hidden, m);
  model.w2.resize(d, opts.hidden);
  const double s1 = std::sqrt(2.0 / static_cast<double>(std::max<Eigen::Index>(m, 1)));
  const double s2 = std::sqrt(1.0 / static_cast<double>(opts.hidden));
  for (Eigen::Index i = 0; i < model.w1.size(); ++i) model.w1.data()[i] = s1 * rng.normal();
  for (Eigen::Index i = 0; i < model.w2.size(); ++i) model.w2.data()[i] = s2 * rng.normal();
  model.b1 = VectorXd::Zero(opts.hidden);
  model.b2 = VectorXd::Zero(d);

  MLPModel velocity = zeros_like(model);
  MLPModel grad;
  MLPModel best = model;
  double best_val = HUGE_VAL;
  int stale = 0;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  MatrixXd bx, by;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(std::span<Eigen::Index>(order));
    for (Eigen::Index start = 0; start < n; start += opts.batch_size) {
      const auto len = std::min<Eigen::Index>(opts.batch_size, n - start);
      bx.resize(m, len);
      by.resize(d, len);
      for (Eigen::Index c = 0; c < len; ++c) {
        const auto idx = order[static_cast<std::size_t>(start + c)];
        bx.col(c) = inputs.col(idx);
        by.col(c) = targets.col(idx);
      }
      const double loss = mlp_loss(model, bx, by, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("MLP loss became non-finite in epoch " + std::to_string(epoch + 1));
      velocity.w1 = opts.momentum * velocity.w1 - opts.lr * grad.w1;
      velocity.b1 = opts.momentum * velocity.b1 - opts.lr * grad.b1;
      velocity.w2 = opts.momentum * velocity.w2 - opts.lr * grad.w2;
      velocity.b2 = opts.momentum * velocity.b2 - opts.lr * grad.b2;
      model.w1 += velocity.w1;
      model.b1 += velocity.b1;
      model.w2 += velocity.w2;
      model.b2 += velocity.b2;
    }
    model.epochs_run = epoch + 1;
    if (validate) {
      const double val = mlp_loss(model, *val_inputs, *val_targets);
      if (!std::isfinite(val))
        throw TrainingError("MLP validation loss became non-finite in epoch " +
                            std::to_string(epoch + 1));
      if (val < best_val) {
        best_val = val;
        best = model;
        stale = 0;
      } else if (++stale >= opts.patience) {
        break;
      }
    }
  }
  if (validate) {
    const int epochs_run = model.epochs_run;
    model = best;
    model.epochs_run = epochs_run;
  }
  model.final_loss = mlp_loss(model, inputs, targets);
  if (!std::isfinite(model.final_loss))
    throw TrainingError("MLP loss became non-finite in epoch " + std::to_string(model.epochs_run));
  return model;
}

// ---------------------------------------------------------------- Cox

namespace {

void check_survival_inputs(const MatrixXd& features, const std::vector<SurvivalRecord>& records) {
  if (static_cast<Eigen::Index>(records.size()) != features.cols())
    throw DimensionError("feature columns and survival records differ in count");
  for (const auto& r : records)
    if (!(r.time > 0.0)) throw DataError("survival times must be positive");
}

// Sample indices by decreasing time.
std::vector<Eigen::Index> by_time_desc(const std::vector<SurvivalRecord>& records) {
  std::vector<Eigen::Index> order(records.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return records[static_cast<std::size_t>(a)].time > records[static_cast<std::size_t>(b)].time;
  });
  return order;
}

}  // namespace

PartialLikelihood cox_partial_loglik(const MatrixXd& features,
                                     const std::vector<SurvivalRecord>& records,
                                     const VectorXd& beta, bool with_hessian) {
  check_survival_inputs(features, records);
  const auto m = features.rows();
  const auto n = features.cols();
  if (beta.size() != m) throw DimensionError("coefficient length differs from feature count");

  const VectorXd eta = features.transpose() * beta;
  const double shift = n > 0 ? eta.maxCoeff() : 0.0;
  const auto order = by_time_desc(records);

  PartialLikelihood out;
  out.gradient = VectorXd::Zero(m);
  if (with_hessian) out.hessian = MatrixXd::Zero(m, m);
  double s0 = 0.0;
  VectorXd s1 = VectorXd::Zero(m);
  MatrixXd s2 = with_hessian ? MatrixXd::Zero(m, m) : MatrixXd();

  std::size_t pos = 0;
  while (pos < order.size()) {
    // admit every sample tied at this time before scoring its events (Breslow)
    const double t = records[static_cast<std::size_t>(order[pos])].time;
    std::size_t end = pos;
    while (end < order.size() && records[static_cast<std::size_t>(order[end])].time == t) {
      const auto i = order[end];
      const double w = std::exp(eta(i) - shift);
      s0 += w;
      s1 += w * features.col(i);
      if (with_hessian) s2.noalias() += w * features.col(i) * features.col(i).transpose();
      ++end;
    }
    const VectorXd mean = s1 / s0;
    for (std::size_t k = pos; k < end; ++k) {
      const auto i = order[k];
      if (!records[static_cast<std::size_t>(i)].event) continue;
      out.value += eta(i) - shift - std::log(s0);
      out.gradient += features.col(i) - mean;
      if (with_hessian) out.hessian -= s2 / s0 - mean * mean.transpose();
    }
    pos = end;
  }
  const double inv_n = 1.0 / static_cast<double>(std::max<Eigen::Index>(n, 1));
  out.value *= inv_n;
  out.gradient *= inv_n;
  if (with_hessian) out.hessian *= inv_n;
  return out;
}

CoxModel coxph_fit(const MatrixXd& features, const std::vector<SurvivalRecord>& records,
                   double penalizer, double l1_ratio) {
  check_survival_inputs(features, records);
  if (penalizer < 0.0) throw DomainError("penalizer must be non-negative");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) throw DomainError("l1_ratio must lie in [0, 1]");
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.event; }))
    throw DomainError("Cox fit needs at least one observed event");

  const auto m = features.rows();
  const double l1 = penalizer * l1_ratio;
  const double l2 = penalizer * (1.0 - l1_ratio);
  CoxModel model;
  model.penalizer = penalizer;
  model.l1_ratio = l1_ratio;
  model.coefficients = VectorXd::Zero(m);
  if (m == 0) {
    model.converged = true;
    return model;
  }

  auto objective = [&](const VectorXd& b) {
    return -cox_partial_loglik(features, records, b, false).value + 0.5 * l2 * b.squaredNorm() +
           l1 * b.lpNorm<1>();
  };

  VectorXd& beta = model.coefficients;
  double f = objective(beta);
  for (int it = 0; it < 100; ++it) {
    const PartialLikelihood pl = cox_partial_loglik(features, records, beta);
    const VectorXd g = -pl.gradient + l2 * beta;
    MatrixXd h = -pl.hessian;
    h.diagonal().array() += l2;

    // minimum-norm subgradient of the full objective
    VectorXd sub = g;
    if (l1 > 0.0) {
      for (Eigen::Index i = 0; i < m; ++i) {
        if (beta(i) != 0.0)
          sub(i) += l1 * (beta(i) > 0.0 ? 1.0 : -1.0);
        else
          sub(i) = std::copysign(std::max(std::abs(g(i)) - l1, 0.0), g(i));
      }
    }
    model.iterations = it;
    if (sub.norm() < 1e-6) {
      model.converged = true;
      break;
    }

    VectorXd target(m);
    if (l1 == 0.0) {
      MatrixXd hj = h;
      hj.diagonal().array() += 1e-12;
      target = beta - hj.ldlt().solve(g);
    } else {
      // coordinate descent on the quadratic model plus the l1 term
      target = beta;
      VectorXd hd = VectorXd::Zero(m);  // h (target - beta)
      for (int sweep = 0; sweep < 500; ++sweep) {
        double change = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double hii = h(i, i);
          if (hii <= 1e-14) continue;
          const double lin = g(i) + hd(i) - hii * (target(i) - beta(i));
          const double z = hii * beta(i) - lin;
          const double next = soft_threshold(z, l1) / hii;
          const double delta = next - target(i);
          if (delta != 0.0) {
            hd += delta * h.col(i);
            target(i) = next;
            change = std::max(change, std::abs(delta));
          }
        }
        if (change < 1e-12) break;
      }
    }

    const VectorXd step = target - beta;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const VectorXd trial = beta + t * step;
      const double ft = objective(trial);
      if (std::isfinite(ft) && ft <= f + 1e-14 * std::max(1.0, std::abs(f))) {
        beta = trial;
        f = ft;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    model.iterations = it + 1;
    if (!moved) break;
  }
  if (!beta.allFinite()) throw TrainingError("Cox coefficients became non-finite");
  return model;
}

VectorXd risk_scores(const CoxModel& model, const MatrixXd& features) {
  if (features.rows() != model.coefficients.size()) {
    std::ostringstream msg;
    msg << "model has " << model.coefficients.size() << " coefficients, features have "
        << features.rows() << " rows";
    throw DimensionError(msg.str());
  }
  return features.transpose() * model.coefficients;
}

double concordance_index(const std::vector<SurvivalRecord>& records, const VectorXd& scores) {
  if (static_cast<Eigen::Index>(records.size()) != scores.size())
    throw DimensionError("records and scores differ in length");
  long long pairs = 0;
  long long agree = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].event) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (!(records[j].time > records[i].time)) continue;
      ++pairs;
      if (scores(static_cast<Eigen::Index>(i)) > scores(static_cast<Eigen::Index>(j))) ++agree;
    }
  }
  if (pairs == 0) throw UndefinedError("concordance index needs at least one comparable pair");
  return static_cast<double>(agree) / static_cast<double>(pairs);
}

SurvivalLabels read_survival_labels(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty labels file");
  SurvivalLabels labels;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, event, time;
    if (!std::getline(fields, id, ',') || !std::getline(fields, event, ',') ||
        !std::getline(fields, time))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected id,event,time");
    SurvivalRecord r;
    if (event == "1" || event == "true")
      r.event = true;
    else if (event == "0" || event == "false")
      r.event = false;
    else
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad event '" + event + "'");
    r.time = parse_double(time);
    if (!(r.time > 0.0))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": time must be positive");
    labels.ids.push_back(id);
    labels.records.push_back(r);
  }
  return labels;
}

void write_survival_labels(const std::filesystem::path& path, const SurvivalLabels& labels) {
  if (labels.ids.size() != labels.records.size())
    throw DimensionError("label ids and records differ in count");
  std::ostringstream out;
  out << "sample_id,event,time\n";
  for (std::size_t i = 0; i < labels.ids.size(); ++i)
    out << labels.ids[i] << ',' << (labels.records[i].event ? 1 : 0) << ','
        << format_double(labels.records[i].time) << '\n';
  write_text(path, out.str());
}

}  // namespace ccafuse
