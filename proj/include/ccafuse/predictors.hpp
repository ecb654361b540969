#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ccafuse/datamodel.hpp"

namespace ccafuse {

enum class Activation { relu, tanh };

/// One-hidden-layer regressor: y = W2 act(W1 x + b1) + b2.
struct MLPModel {
  MatrixXd w1;  // hidden x inputs
  VectorXd b1;
  MatrixXd w2;  // outputs x hidden
  VectorXd b2;
  Activation activation = Activation::relu;
  int epochs_run = 0;
  double final_loss = 0.0;

  Eigen::Index hidden_size() const noexcept { return w1.rows(); }
  Eigen::Index n_inputs() const noexcept { return w1.cols(); }
  Eigen::Index n_outputs() const noexcept { return w2.rows(); }
};

struct MLPOptions {
  int hidden = 50;
  std::uint64_t seed = 0;
  int epochs = 500;
  double lr = 1e-3;
  double momentum = 0.9;
  int batch_size = 32;
  Activation activation = Activation::relu;
  // epochs without validation improvement before stopping
  int patience = 20;
};

/// Mini-batch gradient descent with momentum on (1/2n) sum ||y_hat - y||^2.
/// Samples are columns. With a validation set, training stops after
/// `patience` epochs without improvement and keeps the best weights.
MLPModel mlp_fit(const MatrixXd& inputs, const MatrixXd& targets, const MLPOptions& opts,
                 const MatrixXd* val_inputs = nullptr, const MatrixXd* val_targets = nullptr);
MatrixXd mlp_predict(const MLPModel& model, const MatrixXd& inputs);

/// Loss (1/2n) sum ||y_hat - y||^2; fills `grad` (same shapes as the model)
/// when non-null.
double mlp_loss(const MLPModel& model, const MatrixXd& inputs, const MatrixXd& targets,
                MLPModel* grad = nullptr);

struct SurvivalRecord {
  bool event = false;
  double time = 1.0;
};

struct CoxModel {
  VectorXd coefficients;
  double penalizer = 0.1;
  double l1_ratio = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Breslow partial log-likelihood divided by n, with gradient and Hessian.
struct PartialLikelihood {
  double value = 0.0;
  VectorXd gradient;
  MatrixXd hessian;
};
PartialLikelihood cox_partial_loglik(const MatrixXd& features,
                                     const std::vector<SurvivalRecord>& records,
                                     const VectorXd& beta, bool with_hessian = true);

/// Maximizes the partial likelihood minus
/// penalizer (l1_ratio ||b||_1 + (1 - l1_ratio) / 2 ||b||^2) by proximal
/// Newton steps. Features are rows, samples columns.
CoxModel coxph_fit(const MatrixXd& features, const std::vector<SurvivalRecord>& records,
                   double penalizer = 0.1, double l1_ratio = 0.0);

VectorXd risk_scores(const CoxModel& model, const MatrixXd& features);

/// Fraction of ordered pairs (i has an event, t_j > t_i) with o_i > o_j.
/// Score ties count as discordant.
double concordance_index(const std::vector<SurvivalRecord>& records, const VectorXd& scores);

struct SurvivalLabels {
  std::vector<std::string> ids;
  std::vector<SurvivalRecord> records;
};
/// CSV `sample_id,event,time` with header.
SurvivalLabels read_survival_labels(const std::filesystem::path& path);
void write_survival_labels(const std::filesystem::path& path, const SurvivalLabels& labels);

}  // namespace ccafuse
