#pragma once

// JSON views of library results. Requires nlohmann/json (json.hpp) on the
// include path.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lexifair/audit.hpp"
#include "lexifair/classification.hpp"
#include "lexifair/core.hpp"
#include "lexifair/regression.hpp"

namespace lexifair {

using Json = nlohmann::json;

inline Json to_json(const RoundSchedule& s) {
  Json j;
  j["round"] = s.round;
  j["T_scheduled"] = s.scheduled_iterations;
  j["T"] = s.iterations;
  j["T_clamped"] = s.iterations_clamped;
  j["B"] = s.dual_bound;
  if (s.scheduled_samples > 0.0) {
    j["m_scheduled"] = s.scheduled_samples;
    j["m"] = s.samples;
    j["m_clamped"] = s.samples_clamped;
  }
  return j;
}

template <class T>
Json optional_vector(const std::vector<std::optional<T>>& v) {
  Json out = Json::array();
  for (const auto& x : v) out.push_back(x ? Json(*x) : Json(nullptr));
  return out;
}

inline Json to_json(const LexifairCertificate& c) {
  Json j;
  j["alpha"] = c.alpha;
  j["ell"] = c.ell;
  j["eta"] = c.eta;
  j["opt"] = c.opt ? Json(*c.opt) : Json(nullptr);
  j["slack"] = c.opt ? Json(c.slack) : Json(nullptr);
  j["errors"] = c.errors;
  j["top_sums"] = c.top_sums;
  j["schedule_ok"] = c.schedule_ok;
  if (c.opt) {
    j["slack_ok"] = c.slack_ok;
    j["level_ok"] = c.level_ok;
  }
  if (!c.theorem_bound.empty()) j["theorem_bound"] = c.theorem_bound;
  if (c.parameters) {
    Json p;
    p["round"] = c.parameters->round;
    p["B"] = c.parameters->dual_bound;
    p["loss_bound"] = c.parameters->loss_bound;
    p["nu"] = c.parameters->nu ? Json(*c.parameters->nu) : Json(nullptr);
    j["parameters"] = p;
  }
  j["verdict"] = to_string(c.verdict);
  return j;
}

inline Json to_json(const GeneralizationReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["ell"] = r.ell;
  j["train_errors"] = r.train_errors;
  j["test_errors"] = optional_vector(r.test_errors);
  j["gaps"] = optional_vector(r.gaps);
  j["beta_hat"] = r.beta_hat;
  j["alpha_prime"] = r.alpha_prime;
  j["rate_constant"] = r.rate_constant;
  j["rate_bound"] = r.rate_bound;
  j["within_rate"] = r.within_rate;
  j["required_group_size"] = r.required_group_size;
  j["train_min_group"] = r.train_min_group;
  j["test_min_group"] = r.test_min_group;
  j["flags"] = r.flags;
  return j;
}

inline Json to_json(const InstabilityReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["matrix"] = r.matrix;
  j["gamma"] = r.gamma;
  j["uniform_mixture_errors"] = r.uniform_mixture_errors;
  j["relaxed_third"] = r.relaxed_third;
  j["uniform_top1_excess"] = r.uniform_top1_excess;
  j["uniform_third_gap"] = r.uniform_third_gap;
  return j;
}

inline Json to_json(const BaseClassifier& h) {
  Json j;
  if (h.kind == BaseClassifier::Kind::kConstant) {
    j["kind"] = "constant";
    j["value"] = h.constant;
  } else {
    j["kind"] = "stump";
    j["feature"] = h.feature;
    j["threshold"] = h.threshold;
    j["polarity"] = h.polarity == BaseClassifier::Polarity::kLeqOne ? "leq_one" : "leq_zero";
  }
  return j;
}

inline Json to_json(const RandomizedClassifier& p) {
  Json support = Json::array();
  for (std::size_t i = 0; i < p.support().size(); ++i) {
    Json h = to_json(p.support()[i]);
    h["weight"] = p.weights()[i];
    support.push_back(std::move(h));
  }
  Json j;
  j["type"] = "randomized_stumps";
  j["support"] = std::move(support);
  return j;
}

inline BaseClassifier classifier_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "constant") return BaseClassifier::constant_of(j.at("value").get<int>());
  if (kind != "stump") throw std::runtime_error("unknown classifier kind '" + kind + "'");
  const auto pol = j.at("polarity").get<std::string>();
  if (pol != "leq_one" && pol != "leq_zero") throw std::runtime_error("unknown polarity '" + pol + "'");
  return BaseClassifier::stump(j.at("feature").get<int>(), j.at("threshold").get<double>(),
                               pol == "leq_one" ? BaseClassifier::Polarity::kLeqOne : BaseClassifier::Polarity::kLeqZero);
}

inline RandomizedClassifier randomized_from_json(const Json& j) {
  if (j.at("type").get<std::string>() != "randomized_stumps") throw std::runtime_error("model is not a randomized classifier");
  std::vector<BaseClassifier> support;
  std::vector<double> weights;
  for (const auto& h : j.at("support")) {
    support.push_back(classifier_from_json(h));
    weights.push_back(h.at("weight").get<double>());
  }
  return RandomizedClassifier(std::move(support), std::move(weights));
}

inline const char* to_string(ConvexLoss::Kind k) {
  return k == ConvexLoss::Kind::kSquaredScaled ? "squared-scaled" : "logistic";
}

inline ConvexLoss::Kind loss_kind_from_string(const std::string& s) {
  if (s == "squared-scaled" || s == "squared") return ConvexLoss::Kind::kSquaredScaled;
  if (s == "logistic") return ConvexLoss::Kind::kLogistic;
  throw std::invalid_argument("unknown loss '" + s + "' (expected squared or logistic)");
}

inline Json linear_model_json(std::span<const double> theta, const ConvexLoss& loss, const ParamDomain& domain) {
  Json j;
  j["type"] = "linear";
  j["theta"] = std::vector<double>(theta.begin(), theta.end());
  j["loss"] = {{"kind", to_string(loss.kind())},
               {"scale", loss.scale()},
               {"loss_bound", loss.loss_bound()},
               {"grad_bound", loss.grad_bound()}};
  j["domain"] = {{"center", std::vector<double>(domain.center().begin(), domain.center().end())},
                 {"radius", domain.radius()}};
  return j;
}

}  // namespace lexifair
