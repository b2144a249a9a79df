#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "classifiers/interval_forest.hpp"
#include "classifiers/linear.hpp"
#include "classifiers/minirocket.hpp"
#include "dataset.hpp"
#include "error.hpp"

namespace hcts {

enum class ClassifierKind { MiniRocketStyle, IntervalForest, LinearSVM };

inline std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::MiniRocketStyle: return "minirocket";
    case ClassifierKind::IntervalForest: return "stsf";
    case ClassifierKind::LinearSVM: return "svm";
  }
  return "?";
}

inline ClassifierKind parse_classifier_kind(std::string_view s) {
  if (s == "minirocket") return ClassifierKind::MiniRocketStyle;
  if (s == "stsf") return ClassifierKind::IntervalForest;
  if (s == "svm") return ClassifierKind::LinearSVM;
  throw DomainError("unknown classifier '" + std::string(s) + "' (expected minirocket, stsf or svm)");
}

/// Classifier choice and hyperparameters. Defaults: 512 transform
/// features, 50 interval trees, regularization 1.
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::LinearSVM;
  int num_features = 512;
  int num_estimators = 50;
  double regularization = 1.0;
  std::uint64_t seed = 0;
  int max_epochs = 1000;
  double tolerance = 1e-6;

  ClassifierSpec with_seed(std::uint64_t s) const {
    ClassifierSpec out = *this;
    out.seed = s;
    return out;
  }
};

struct ConstantState {};

struct MiniRocketState {
  MiniRocketTransform transform;
  LinearHead head;
};

struct LinearSvmState {
  LinearHead head;
};

/// A fitted classifier. Outputs are expressed in `classes_seen`, the sorted
/// distinct training labels; predict_proba columns follow the same order.
struct ClassifierModel {
  ClassifierSpec spec;
  std::vector<int> classes_seen;
  std::size_t length = 0;
  std::variant<ConstantState, MiniRocketState, IntervalForest, LinearSvmState> state;

  /// A model that always predicts `label`.
  static ClassifierModel constant(int label, std::size_t length, const ClassifierSpec& spec = {}) {
    ClassifierModel m;
    m.spec = spec;
    m.classes_seen = {label};
    m.length = length;
    m.state = ConstantState{};
    return m;
  }

  bool is_constant() const { return std::holds_alternative<ConstantState>(state); }

  Matrix predict_proba(const Matrix& X) const {
    if (static_cast<std::size_t>(X.cols()) != length)
      throw DomainError("input width " + std::to_string(X.cols()) + " does not match the training length " +
                        std::to_string(length));
    return std::visit(
        [&](const auto& s) -> Matrix {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, ConstantState>) {
            return Matrix::Ones(X.rows(), 1);
          } else if constexpr (std::is_same_v<S, MiniRocketState>) {
            return softmax_rows(s.head.scores(apply_minirocket(s.transform, X)));
          } else if constexpr (std::is_same_v<S, IntervalForest>) {
            return interval_forest_votes(s, X);
          } else {
            return softmax_rows(s.head.scores(X));
          }
        },
        state);
  }

  /// Argmax of predict_proba; ties go to the lower class.
  std::vector<int> predict(const Matrix& X) const {
    const Matrix p = predict_proba(X);
    std::vector<int> out(static_cast<std::size_t>(p.rows()));
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < p.cols(); ++k)
        if (p(i, k) > p(i, best)) best = k;
      out[static_cast<std::size_t>(i)] = classes_seen[static_cast<std::size_t>(best)];
    }
    return out;
  }
};

/// Trains a classifier on X (n x L) with arbitrary integer labels y.
inline ClassifierModel fit(const ClassifierSpec& spec, const Matrix& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw DomainError("fit: X rows and label count differ");
  if (y.size() < 2) throw DomainError("fit: at least two samples required");
  ClassifierModel model;
  model.spec = spec;
  model.length = static_cast<std::size_t>(X.cols());
  model.classes_seen.assign(y.begin(), y.end());
  std::sort(model.classes_seen.begin(), model.classes_seen.end());
  model.classes_seen.erase(std::unique(model.classes_seen.begin(), model.classes_seen.end()), model.classes_seen.end());
  if (model.classes_seen.size() < 2) throw DomainError("fit: at least two distinct labels required");
  const int K = static_cast<int>(model.classes_seen.size());
  std::vector<int> index(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    index[i] = static_cast<int>(std::lower_bound(model.classes_seen.begin(), model.classes_seen.end(), y[i]) -
                                model.classes_seen.begin());

  switch (spec.kind) {
    case ClassifierKind::MiniRocketStyle: {
      MiniRocketState s;
      s.transform = fit_minirocket(X, spec.num_features, spec.seed);
      s.head = fit_ridge_ovr(apply_minirocket(s.transform, X), index, K, spec.regularization);
      model.state = std::move(s);
      break;
    }
    case ClassifierKind::IntervalForest:
      model.state = fit_interval_forest(X, index, K, spec.num_estimators, spec.seed);
      break;
    case ClassifierKind::LinearSVM:
      model.state = LinearSvmState{fit_svm_ovr(X, index, K, {spec.regularization, spec.max_epochs, spec.tolerance})};
      break;
  }
  return model;
}

// ---------------------------------------------------------------------------
// JSON persistence. Doubles are written by nlohmann::json in shortest
// round-trip form, so a save/load cycle reproduces every coefficient.

inline nlohmann::ordered_json spec_to_json(const ClassifierSpec& s) {
  return {{"kind", to_string(s.kind)},          {"num_features", s.num_features}, {"num_estimators", s.num_estimators},
          {"regularization", s.regularization}, {"seed", s.seed},                 {"max_epochs", s.max_epochs},
          {"tolerance", s.tolerance}};
}

inline ClassifierSpec spec_from_json(const nlohmann::ordered_json& j) {
  ClassifierSpec s;
  s.kind = parse_classifier_kind(j.at("kind").get<std::string>());
  s.num_features = j.at("num_features").get<int>();
  s.num_estimators = j.at("num_estimators").get<int>();
  s.regularization = j.at("regularization").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.max_epochs = j.value("max_epochs", 1000);
  s.tolerance = j.value("tolerance", 1e-6);
  return s;
}

namespace detail {

inline nlohmann::ordered_json matrix_to_json(const Matrix& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const nlohmann::ordered_json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = rows ? static_cast<Eigen::Index>(j[0].size()) : cols_if_empty;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(i)].size()) != cols) throw FormatError("ragged matrix in model document");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

inline nlohmann::ordered_json head_to_json(const LinearHead& h) {
  return {{"weights", matrix_to_json(h.weights)}, {"bias", std::vector<double>(h.bias.data(), h.bias.data() + h.bias.size())}};
}

inline LinearHead head_from_json(const nlohmann::ordered_json& j) {
  LinearHead h;
  h.weights = matrix_from_json(j.at("weights"));
  const auto b = j.at("bias").get<std::vector<double>>();
  h.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
  return h;
}

}  // namespace detail

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::ordered_json model_to_json(const ClassifierModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "hcts-classifier";
  j["version"] = kModelFormatVersion;
  j["spec"] = spec_to_json(m.spec);
  j["classes_seen"] = m.classes_seen;
  j["length"] = m.length;
  nlohmann::ordered_json state;
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, ConstantState>) {
          state["type"] = "constant";
        } else if constexpr (std::is_same_v<S, MiniRocketState>) {
          state["type"] = "minirocket";
          nlohmann::ordered_json groups = nlohmann::ordered_json::array();
          for (const auto& g : s.transform.groups)
            groups.push_back({{"kernel", g.kernel}, {"dilation", g.dilation}, {"padded", g.padded}, {"biases", g.biases}});
          state["groups"] = std::move(groups);
          state["head"] = detail::head_to_json(s.head);
        } else if constexpr (std::is_same_v<S, IntervalForest>) {
          state["type"] = "interval_forest";
          state["num_classes"] = s.num_classes;
          nlohmann::ordered_json trees = nlohmann::ordered_json::array();
          for (const auto& t : s.trees) {
            nlohmann::ordered_json feats = nlohmann::ordered_json::array();
            for (const auto& f : t.features)
              feats.push_back({static_cast<int>(f.interval.rep), f.interval.start, f.interval.end, static_cast<int>(f.stat)});
            nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
            for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.leaf_class});
            trees.push_back({{"features", std::move(feats)}, {"nodes", std::move(nodes)}});
          }
          state["trees"] = std::move(trees);
        } else {
          state["type"] = "linear_svm";
          state["head"] = detail::head_to_json(s.head);
        }
      },
      m.state);
  j["state"] = std::move(state);
  return j;
}

inline ClassifierModel model_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "hcts-classifier") throw FormatError("not a classifier document");
    if (j.at("version").get<int>() != kModelFormatVersion) throw FormatError("unsupported classifier document version");
    ClassifierModel m;
    m.spec = spec_from_json(j.at("spec"));
    m.classes_seen = j.at("classes_seen").get<std::vector<int>>();
    m.length = j.at("length").get<std::size_t>();
    const auto& st = j.at("state");
    const auto type = st.at("type").get<std::string>();
    if (type == "constant") {
      m.state = ConstantState{};
    } else if (type == "minirocket") {
      MiniRocketState s;
      s.transform.length = m.length;
      for (const auto& g : st.at("groups"))
        s.transform.groups.push_back({g.at("kernel").get<int>(), g.at("dilation").get<int>(), g.at("padded").get<bool>(),
                                      g.at("biases").get<std::vector<double>>()});
      s.head = detail::head_from_json(st.at("head"));
      m.state = std::move(s);
    } else if (type == "interval_forest") {
      IntervalForest f;
      f.length = m.length;
      f.num_classes = st.at("num_classes").get<int>();
      for (const auto& t : st.at("trees")) {
        IntervalTree tree;
        for (const auto& v : t.at("features"))
          tree.features.push_back({{static_cast<Representation>(v.at(0).get<int>()), v.at(1).get<int>(), v.at(2).get<int>()},
                                   static_cast<IntervalStat>(v.at(3).get<int>())});
        for (const auto& v : t.at("nodes"))
          tree.nodes.push_back({v.at(0).get<int>(), v.at(1).get<double>(), v.at(2).get<int>(), v.at(3).get<int>(), v.at(4).get<int>()});
        f.trees.push_back(std::move(tree));
      }
      m.state = std::move(f);
    } else if (type == "linear_svm") {
      m.state = LinearSvmState{detail::head_from_json(st.at("head"))};
    } else {
      throw FormatError("unknown classifier state type '" + type + "'");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed classifier document: ") + e.what());
  }
}

}  // namespace hcts
