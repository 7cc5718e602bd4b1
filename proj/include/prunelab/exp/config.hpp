// Copyright 2026 The prunelab Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "prunelab/core/errors.hpp"
#include "prunelab/core/network.hpp"
#include "prunelab/data/digits.hpp"
#include "prunelab/data/idx.hpp"
#include "prunelab/data/synthetic.hpp"
#include "prunelab/prune/criteria.hpp"
#include "prunelab/schedule/plan.hpp"
#include "prunelab/train/finetune.hpp"

namespace prunelab {

namespace detail {

/// Rejects unknown keys so config typos fail loudly instead of silently
/// falling back to defaults.
inline void check_keys(const nlohmann::json &js,
                       std::initializer_list<const char *> allowed,
                       const std::string &where) {
  if (!js.is_object())
    throw ConfigError(where + ": expected a JSON object");
  for (auto it = js.begin(); it != js.end(); ++it) {
    bool ok = false;
    for (const char *k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T get_or(const nlohmann::json &js, const char *key, T fallback) {
  auto it = js.find(key);
  if (it == js.end())
    return fallback;
  return it->get<T>();
}

} // namespace detail

// ============================================================================
// Models
// ============================================================================

inline std::vector<std::string> model_names() {
  return {"mlp_small", "cnn_small"};
}

/// Builds a registered architecture against the dataset's geometry.
///   mlp_small: dense in->48, relu, dense 48->48, relu, dense 48->classes
///   cnn_small: conv 3x3 ->8, relu, pool, conv 3x3 ->24, relu, flatten,
///              dense ->160, relu, dense ->classes
inline Network build_model(const std::string &name,
                           const std::vector<int> &input_shape, int classes) {
  if (classes < 2)
    throw ConfigError("build_model: need at least two classes");
  if (name == "mlp_small") {
    if (input_shape.size() != 1)
      throw ConfigError("build_model: mlp_small expects flat feature input");
    return NetworkBuilder(input_shape)
        .dense(48)
        .relu()
        .dense(48)
        .relu()
        .dense(classes)
        .build();
  }
  if (name == "cnn_small") {
    if (input_shape.size() != 3)
      throw ConfigError("build_model: cnn_small expects image input (C,H,W)");
    if (input_shape[1] < 12 || input_shape[2] < 12)
      throw ConfigError("build_model: cnn_small needs at least 12x12 images");
    return NetworkBuilder(input_shape)
        .conv2d(8, 3)
        .relu()
        .maxpool2x2()
        .conv2d(24, 3)
        .relu()
        .flatten()
        .dense(160)
        .relu()
        .dense(classes)
        .build();
  }
  throw ConfigError("build_model: unknown model '" + name + "'");
}

// ============================================================================
// Datasets
// ============================================================================

struct DatasetConfig {
  std::string name = "spirals"; // spirals | gaussians | digits | idx
  int n = 3000;                 // generated sample count
  int classes = 3;              // spirals/gaussians
  double noise = 0.15;
  int size = 16;                // digits image side
  std::uint64_t seed = 1;       // generation seed, fixed per suite
  std::string images_path;      // idx
  std::string labels_path;      // idx
  std::string normalize = "scale01"; // idx: scale01 | standardize

  static DatasetConfig from_json(const nlohmann::json &js) {
    detail::check_keys(js,
                       {"name", "n", "classes", "noise", "size", "seed",
                        "images_path", "labels_path", "normalize"},
                       "dataset");
    DatasetConfig c;
    c.name = detail::get_or<std::string>(js, "name", c.name);
    c.n = detail::get_or<int>(js, "n", c.n);
    c.classes = detail::get_or<int>(js, "classes", c.classes);
    c.noise = detail::get_or<double>(js, "noise", c.noise);
    c.size = detail::get_or<int>(js, "size", c.size);
    c.seed = detail::get_or<std::uint64_t>(js, "seed", c.seed);
    c.images_path = detail::get_or<std::string>(js, "images_path", "");
    c.labels_path = detail::get_or<std::string>(js, "labels_path", "");
    c.normalize = detail::get_or<std::string>(js, "normalize", c.normalize);
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json js{{"name", name}, {"seed", seed}};
    if (name == "spirals" || name == "gaussians") {
      js["n"] = n;
      js["classes"] = classes;
      js["noise"] = noise;
    } else if (name == "digits") {
      js["n"] = n;
      js["size"] = size;
      js["noise"] = noise;
    } else if (name == "idx") {
      js["images_path"] = images_path;
      js["labels_path"] = labels_path;
      js["normalize"] = normalize;
    }
    return js;
  }
};

inline Dataset build_dataset(const DatasetConfig &cfg) {
  if (cfg.name == "spirals")
    return gen_synthetic(SyntheticKind::spirals, cfg.n, cfg.classes, cfg.noise,
                         cfg.seed);
  if (cfg.name == "gaussians")
    return gen_synthetic(SyntheticKind::gaussians, cfg.n, cfg.classes,
                         cfg.noise, cfg.seed);
  if (cfg.name == "digits")
    return gen_digits(cfg.n, cfg.size, cfg.noise, cfg.seed);
  if (cfg.name == "idx") {
    if (cfg.images_path.empty() || cfg.labels_path.empty())
      throw ConfigError("dataset: idx needs images_path and labels_path");
    IdxNormalize norm;
    if (cfg.normalize == "scale01")
      norm = IdxNormalize::scale01;
    else if (cfg.normalize == "standardize")
      norm = IdxNormalize::standardize;
    else
      throw ConfigError("dataset: unknown normalize '" + cfg.normalize + "'");
    return load_idx(cfg.images_path, cfg.labels_path, norm);
  }
  throw ConfigError("dataset: unknown name '" + cfg.name + "'");
}

// ============================================================================
// Criteria
// ============================================================================

enum class CriterionKind { magnitude_l1, magnitude_l2, taylor, obd };

inline const char *criterion_name(CriterionKind k) {
  switch (k) {
  case CriterionKind::magnitude_l1:
    return "magnitude_l1";
  case CriterionKind::magnitude_l2:
    return "magnitude_l2";
  case CriterionKind::taylor:
    return "taylor";
  case CriterionKind::obd:
    return "obd";
  }
  return "?";
}

inline CriterionKind parse_criterion(const std::string &s) {
  if (s == "magnitude_l1" || s == "magnitude")
    return CriterionKind::magnitude_l1;
  if (s == "magnitude_l2")
    return CriterionKind::magnitude_l2;
  if (s == "taylor")
    return CriterionKind::taylor;
  if (s == "obd")
    return CriterionKind::obd;
  throw ConfigError("criterion: unknown name '" + s + "'");
}

inline RegimeKind parse_regime(const std::string &s) {
  if (s == "one_shot")
    return RegimeKind::one_shot;
  if (s == "iterative_constant")
    return RegimeKind::iterative_constant;
  if (s == "iterative_geometric")
    return RegimeKind::iterative_geometric;
  if (s == "hybrid")
    return RegimeKind::hybrid;
  throw ConfigError("regime: unknown kind '" + s + "'");
}

inline RetrainPolicy parse_retrain(const nlohmann::json &js,
                                   const std::string &where) {
  detail::check_keys(js, {"mode", "epochs", "patience", "min_delta"}, where);
  const std::string mode = detail::get_or<std::string>(js, "mode", "patience");
  if (mode == "fixed")
    return RetrainPolicy::fixed(detail::get_or<int>(js, "epochs", 1));
  if (mode == "patience")
    return RetrainPolicy::plateau(detail::get_or<int>(js, "patience", 5),
                                  detail::get_or<double>(js, "min_delta", 0.0));
  throw ConfigError(where + ": unknown mode '" + mode + "'");
}

inline RegimeConfig parse_regime_config(const nlohmann::json &js) {
  detail::check_keys(js,
                     {"kind", "target", "steps", "ratio", "oneshot_fraction",
                      "retrain", "iter_retrain"},
                     "regime");
  RegimeConfig c;
  c.kind = parse_regime(detail::get_or<std::string>(js, "kind", "one_shot"));
  c.target = detail::get_or<double>(js, "target", c.target);
  c.steps = detail::get_or<int>(js, "steps", c.steps);
  c.ratio = detail::get_or<double>(js, "ratio", c.ratio);
  c.oneshot_fraction =
      detail::get_or<double>(js, "oneshot_fraction", c.oneshot_fraction);
  if (js.contains("retrain"))
    c.retrain = parse_retrain(js.at("retrain"), "regime.retrain");
  if (js.contains("iter_retrain"))
    c.iter_retrain = parse_retrain(js.at("iter_retrain"), "regime.iter_retrain");
  return c;
}

inline nlohmann::json regime_to_json(const RegimeConfig &c) {
  nlohmann::json js{{"kind", regime_name(c.kind)},
                    {"target", c.target},
                    {"retrain", c.retrain.to_json()}};
  if (c.kind == RegimeKind::iterative_constant)
    js["steps"] = c.steps;
  if (c.kind == RegimeKind::iterative_geometric || c.kind == RegimeKind::hybrid)
    js["ratio"] = c.ratio;
  if (c.kind == RegimeKind::hybrid)
    js["oneshot_fraction"] = c.oneshot_fraction;
  if (c.iter_retrain)
    js["iter_retrain"] = c.iter_retrain->to_json();
  return js;
}

// ============================================================================
// Experiment
// ============================================================================

struct TrainPhaseConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 256;
  int patience = 10;
  double min_delta = 0.0;
  int max_epochs = 200;

  static TrainPhaseConfig from_json(const nlohmann::json &js) {
    detail::check_keys(js,
                       {"learning_rate", "momentum", "weight_decay",
                        "batch_size", "patience", "min_delta", "max_epochs"},
                       "train");
    TrainPhaseConfig c;
    c.learning_rate = detail::get_or<double>(js, "learning_rate", c.learning_rate);
    c.momentum = detail::get_or<double>(js, "momentum", c.momentum);
    c.weight_decay = detail::get_or<double>(js, "weight_decay", c.weight_decay);
    c.batch_size = detail::get_or<int>(js, "batch_size", c.batch_size);
    c.patience = detail::get_or<int>(js, "patience", c.patience);
    c.min_delta = detail::get_or<double>(js, "min_delta", c.min_delta);
    c.max_epochs = detail::get_or<int>(js, "max_epochs", c.max_epochs);
    return c;
  }

  nlohmann::json to_json() const {
    return {{"learning_rate", learning_rate}, {"momentum", momentum},
            {"weight_decay", weight_decay},   {"batch_size", batch_size},
            {"patience", patience},           {"min_delta", min_delta},
            {"max_epochs", max_epochs}};
  }

  SGDConfig sgd() const {
    SGDConfig s;
    s.learning_rate = learning_rate;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    s.batch_size = batch_size;
    return s;
  }
};

struct ExperimentConfig {
  std::string model = "mlp_small";
  DatasetConfig dataset;
  SplitSpec split;
  CriterionKind criterion = CriterionKind::magnitude_l1;
  Granularity granularity = Granularity::weight;
  int eval_batches = 4; // gradient batches for taylor/obd scoring
  RegimeConfig regime;
  std::map<std::string, double> structured_ratios; // empty: unstructured
  TrainPhaseConfig base_train;
  std::uint64_t seed = 1; // init + shuffle; dataset seed stays separate
  std::int64_t budget_epochs = -1; // retraining allowance; -1 unlimited

  static ExperimentConfig from_json(const nlohmann::json &js) {
    detail::check_keys(js,
                       {"model", "dataset", "split", "criterion", "granularity",
                        "eval_batches", "regime", "structured_ratios",
                        "base_train", "seed", "budget_epochs"},
                       "experiment");
    ExperimentConfig c;
    c.model = detail::get_or<std::string>(js, "model", c.model);
    if (js.contains("dataset"))
      c.dataset = DatasetConfig::from_json(js.at("dataset"));
    if (js.contains("split")) {
      const auto &sp = js.at("split");
      detail::check_keys(sp, {"train", "val", "test", "seed"}, "split");
      c.split.train = detail::get_or<double>(sp, "train", c.split.train);
      c.split.val = detail::get_or<double>(sp, "val", c.split.val);
      c.split.test = detail::get_or<double>(sp, "test", c.split.test);
      c.split.seed = detail::get_or<std::uint64_t>(sp, "seed", c.split.seed);
    }
    if (js.contains("criterion"))
      c.criterion = parse_criterion(js.at("criterion").get<std::string>());
    if (js.contains("granularity")) {
      const std::string g = js.at("granularity").get<std::string>();
      if (g == "weight")
        c.granularity = Granularity::weight;
      else if (g == "channel")
        c.granularity = Granularity::channel;
      else
        throw ConfigError("granularity: unknown value '" + g + "'");
    }
    c.eval_batches = detail::get_or<int>(js, "eval_batches", c.eval_batches);
    if (js.contains("regime"))
      c.regime = parse_regime_config(js.at("regime"));
    if (js.contains("structured_ratios")) {
      for (auto it = js.at("structured_ratios").begin();
           it != js.at("structured_ratios").end(); ++it)
        c.structured_ratios[it.key()] = it.value().get<double>();
    }
    if (js.contains("base_train"))
      c.base_train = TrainPhaseConfig::from_json(js.at("base_train"));
    c.seed = detail::get_or<std::uint64_t>(js, "seed", c.seed);
    c.budget_epochs =
        detail::get_or<std::int64_t>(js, "budget_epochs", c.budget_epochs);
    if (!c.structured_ratios.empty() && c.granularity != Granularity::channel)
      throw ConfigError("experiment: structured ratios require channel "
                        "granularity");
    return c;
  }

  nlohmann::json to_json() const {
    nlohmann::json js{
        {"model", model},
        {"dataset", dataset.to_json()},
        {"split",
         {{"train", split.train},
          {"val", split.val},
          {"test", split.test},
          {"seed", split.seed}}},
        {"criterion", criterion_name(criterion)},
        {"granularity",
         granularity == Granularity::weight ? "weight" : "channel"},
        {"eval_batches", eval_batches},
        {"regime", regime_to_json(regime)},
        {"base_train", base_train.to_json()},
        {"seed", seed},
        {"budget_epochs", budget_epochs}};
    if (!structured_ratios.empty())
      js["structured_ratios"] = structured_ratios;
    return js;
  }
};

/// Stable identifier: readable slug plus a hash of the full config, so two
/// runs collide only when every knob matches.
inline std::string run_id(const ExperimentConfig &cfg) {
  const std::string dump = cfg.to_json().dump();
  std::uint64_t h = 1469598103934665603ull; // FNV-1a
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << cfg.model << "-" << cfg.dataset.name << "-"
     << criterion_name(cfg.criterion) << "-" << regime_name(cfg.regime.kind)
     << "-p" << std::fixed << std::setprecision(3) << cfg.regime.target << "-s"
     << cfg.seed << "-" << std::hex << std::setw(8) << std::setfill('0')
     << static_cast<std::uint32_t>(h ^ (h >> 32));
  return os.str();
}

} // namespace prunelab
