#include "stackliver/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "stackliver/error.hpp"

namespace stackliver {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::RowVectorXd shifted = z.row(i).array() - z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = shifted.array().exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

}  // namespace

void MlpClassifier::initialize(Eigen::Index n_features, Rng& rng) {
  std::vector<Eigen::Index> sizes;
  sizes.push_back(n_features);
  for (const int h : params_.hidden) sizes.push_back(h);
  sizes.push_back(2);

  weights_.clear();
  biases_.clear();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const Eigen::Index fan_in = sizes[l];
    const Eigen::Index fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-limit, limit);
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

Eigen::MatrixXd MlpClassifier::forward(const Eigen::MatrixXd& X, std::vector<Eigen::MatrixXd>* zs,
                                       std::vector<Eigen::MatrixXd>* activations) const {
  Eigen::MatrixXd a = X;
  if (activations) activations->push_back(a);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (zs) zs->push_back(z);
    if (l + 1 < weights_.size()) {
      a = z.cwiseMax(0.0);  // ReLU
      if (activations) activations->push_back(a);
    } else {
      a = softmax_rows(z);
    }
  }
  return a;
}

double MlpClassifier::loss_and_gradients(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                                         Gradients* grads) const {
  const Eigen::Index n = X.rows();
  std::vector<Eigen::MatrixXd> zs, activations;
  const Eigen::MatrixXd proba = forward(X, &zs, &activations);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    loss -= std::log(std::max(proba(i, y[i]), 1e-15));
  loss /= static_cast<double>(n);
  for (const auto& w : weights_) loss += 0.5 * params_.alpha * w.squaredNorm();

  if (!grads) return loss;
  grads->weights.assign(weights_.size(), {});
  grads->biases.assign(biases_.size(), {});

  // Output delta: (softmax - onehot) / n.
  Eigen::MatrixXd delta = proba;
  for (Eigen::Index i = 0; i < n; ++i) delta(i, y[i]) -= 1.0;
  delta /= static_cast<double>(n);

  for (std::size_t l = weights_.size(); l-- > 0;) {
    grads->weights[l] = delta.transpose() * activations[l] + params_.alpha * weights_[l];
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd back = delta * weights_[l];
      delta = back.cwiseProduct((zs[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

void MlpClassifier::fit(const Eigen::MatrixXd& X, const Eigen::VectorXi& y, Rng& rng) {
  const Eigen::Index n = X.rows();
  if (n == 0 || X.cols() == 0) fail(ErrorCode::EmptyInput, "fit needs data");
  if (y.size() != n) fail(ErrorCode::LengthMismatch, "X and y differ in length");
  const auto n_pos = (y.array() == 1).count();
  if (n_pos == 0 || n_pos == n) fail(ErrorCode::SingleClass, "fit needs both classes");

  initialize(X.cols(), rng);
  epoch_losses_.clear();

  // Adam state per parameter tensor.
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  for (const auto& w : weights_) {
    m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : biases_) {
    m_b.push_back(Eigen::VectorXd::Zero(b.size()));
    v_b.push_back(Eigen::VectorXd::Zero(b.size()));
  }

  const auto batch = static_cast<Eigen::Index>(std::min<int>(params_.batch_size, static_cast<int>(n)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  double best_loss = std::numeric_limits<double>::infinity();
  int stall = 0;
  long t = 0;
  Gradients grads;
  for (int epoch = 0; epoch < params_.max_epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min(batch, n - start);
      Eigen::MatrixXd Xb(count, X.cols());
      Eigen::VectorXi yb(count);
      for (Eigen::Index i = 0; i < count; ++i) {
        Xb.row(i) = X.row(order[static_cast<std::size_t>(start + i)]);
        yb[i] = y[order[static_cast<std::size_t>(start + i)]];
      }
      const double loss = loss_and_gradients(Xb, yb, &grads);
      epoch_loss += loss * static_cast<double>(count);

      ++t;
      const double bc1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t));
      for (std::size_t l = 0; l < weights_.size(); ++l) {
        m_w[l] = params_.beta1 * m_w[l] + (1.0 - params_.beta1) * grads.weights[l];
        v_w[l] = params_.beta2 * v_w[l].array().matrix() +
                 (1.0 - params_.beta2) * grads.weights[l].array().square().matrix();
        weights_[l].array() -= params_.learning_rate * (m_w[l].array() / bc1) /
                               ((v_w[l].array() / bc2).sqrt() + params_.epsilon);
        m_b[l] = params_.beta1 * m_b[l] + (1.0 - params_.beta1) * grads.biases[l];
        v_b[l] = params_.beta2 * v_b[l].array().matrix() +
                 (1.0 - params_.beta2) * grads.biases[l].array().square().matrix();
        biases_[l].array() -= params_.learning_rate * (m_b[l].array() / bc1) /
                              ((v_b[l].array() / bc2).sqrt() + params_.epsilon);
      }
    }
    epoch_loss /= static_cast<double>(n);
    epoch_losses_.push_back(epoch_loss);

    if (epoch_loss > best_loss - params_.tol) {
      ++stall;
      if (stall >= params_.patience) break;
    } else {
      stall = 0;
    }
    best_loss = std::min(best_loss, epoch_loss);
  }
  fitted_ = true;
}

Eigen::MatrixXd MlpClassifier::predict_proba(const Eigen::MatrixXd& X) const {
  if (!fitted_) fail(ErrorCode::NotFitted, "MlpClassifier::predict_proba before fit");
  if (weights_.empty() || X.cols() != weights_.front().cols())
    fail(ErrorCode::DimensionMismatch, "feature count mismatch");
  return forward(X, nullptr, nullptr);
}

MlpClassifier MlpClassifier::restore(MlpParams params, std::vector<Eigen::MatrixXd> weights,
                                     std::vector<Eigen::VectorXd> biases) {
  MlpClassifier model(params);
  model.weights_ = std::move(weights);
  model.biases_ = std::move(biases);
  model.fitted_ = true;
  return model;
}

}  // namespace stackliver
