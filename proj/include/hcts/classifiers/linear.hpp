#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "../dataset.hpp"

namespace hcts {

/// One-vs-rest linear decision functions: scores = X * weights^T + bias.
struct LinearHead {
  Matrix weights;  // K x p
  Vector bias;     // K

  Matrix scores(const Matrix& X) const {
    Matrix s = X * weights.transpose();
    s.rowwise() += bias.transpose();
    return s;
  }
};

/// Row-wise softmax of decision scores.
inline Matrix softmax_rows(const Matrix& scores) {
  Matrix p(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    double z = 0.0;
    for (Eigen::Index k = 0; k < scores.cols(); ++k) z += p(i, k) = std::exp(scores(i, k) - m);
    p.row(i) /= z;
  }
  return p;
}

/// Ridge-regularized least squares against +/-1 one-vs-rest targets with an
/// unpenalized intercept. `y` holds class indices in 0..K-1.
inline LinearHead fit_ridge_ovr(const Matrix& X, std::span<const int> y, int num_classes, double alpha) {
  const Eigen::Index n = X.rows(), p = X.cols(), K = num_classes;
  Matrix targets = Matrix::Constant(n, K, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) targets(i, y[static_cast<std::size_t>(i)]) = 1.0;

  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const Eigen::RowVectorXd t_mean = targets.colwise().mean();
  const Matrix Xc = X.rowwise() - x_mean;
  const Matrix Tc = targets.rowwise() - t_mean;

  Matrix W;  // p x K
  if (n <= p) {
    Eigen::MatrixXd gram = Xc * Xc.transpose();
    gram.diagonal().array() += alpha;
    W = Xc.transpose() * gram.ldlt().solve(Eigen::MatrixXd(Tc));
  } else {
    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += alpha;
    W = gram.ldlt().solve(Eigen::MatrixXd(Xc.transpose() * Tc));
  }
  LinearHead head;
  head.weights = W.transpose();
  head.bias = (t_mean - x_mean * W).transpose();
  return head;
}

struct SvmOptions {
  double C = 1.0;
  int max_epochs = 1000;
  double tolerance = 1e-6;  // absolute duality gap
};

/// Binary L2-regularized hinge-loss SVM solved by dual coordinate descent.
///
/// Objective: 0.5*|w|^2 + (C/n) * sum_i max(0, 1 - y_i (w.x_i + b)), with
/// the bias treated as a weight on a constant feature. Scaling the loss by
/// 1/n makes the solution invariant to duplicating the training set.
/// Coordinates are visited cyclically, so the result is a pure function of
/// the input order.
struct BinarySvmResult {
  Vector w;
  double b = 0.0;
  int epochs = 0;
  double gap = 0.0;
};

inline BinarySvmResult fit_binary_svm(const Matrix& X, std::span<const double> sign, const SvmOptions& opt) {
  const Eigen::Index n = X.rows(), p = X.cols();
  const double upper = opt.C / static_cast<double>(n);
  Vector w = Vector::Zero(p);
  double b = 0.0;
  Vector alpha = Vector::Zero(n);
  Vector qdiag(n);
  for (Eigen::Index i = 0; i < n; ++i) qdiag(i) = X.row(i).squaredNorm() + 1.0;

  BinarySvmResult res;
  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = sign[static_cast<std::size_t>(i)];
      const double grad = yi * (X.row(i).dot(w) + b) - 1.0;
      const double a = alpha(i);
      double pg = grad;
      if (a <= 0.0) pg = std::min(grad, 0.0);
      else if (a >= upper) pg = std::max(grad, 0.0);
      if (pg == 0.0) continue;
      const double next = std::clamp(a - grad / qdiag(i), 0.0, upper);
      const double delta = (next - a) * yi;
      if (delta == 0.0) continue;
      alpha(i) = next;
      w.noalias() += delta * X.row(i).transpose();
      b += delta;
    }
    const double wnorm2 = w.squaredNorm() + b * b;
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      hinge += std::max(0.0, 1.0 - sign[static_cast<std::size_t>(i)] * (X.row(i).dot(w) + b));
    const double primal = 0.5 * wnorm2 + upper * hinge;
    const double dual = alpha.sum() - 0.5 * wnorm2;
    res.epochs = epoch;
    res.gap = primal - dual;
    if (res.gap < opt.tolerance) break;
  }
  res.w = std::move(w);
  res.b = b;
  return res;
}

/// One-vs-rest max-margin classifier. With two classes a single problem is
/// solved (class 1 positive) and the scores are (-f, f).
inline LinearHead fit_svm_ovr(const Matrix& X, std::span<const int> y, int num_classes, const SvmOptions& opt) {
  const Eigen::Index n = X.rows(), p = X.cols();
  LinearHead head;
  head.weights = Matrix::Zero(num_classes, p);
  head.bias = Vector::Zero(num_classes);
  std::vector<double> sign(static_cast<std::size_t>(n));
  if (num_classes == 2) {
    for (Eigen::Index i = 0; i < n; ++i) sign[i] = y[i] == 1 ? 1.0 : -1.0;
    auto r = fit_binary_svm(X, sign, opt);
    head.weights.row(1) = r.w.transpose();
    head.weights.row(0) = -r.w.transpose();
    head.bias(1) = r.b;
    head.bias(0) = -r.b;
    return head;
  }
  for (int k = 0; k < num_classes; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) sign[i] = y[i] == k ? 1.0 : -1.0;
    auto r = fit_binary_svm(X, sign, opt);
    head.weights.row(k) = r.w.transpose();
    head.bias(k) = r.b;
  }
  return head;
}

}  // namespace hcts
