// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/losses.hpp"
#include "glossplat/model.hpp"
#include "glossplat/optim.hpp"
#include "glossplat/pipeline.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace glossplat {

struct TrainConfig {
  int stage1_iters = 30000;
  int stage2_iters = 5000;
  LossWeights weights;
  std::uint64_t seed = 0;
  bool single_level_env = false;
  bool sh_residual = false;
  bool no_residual = false;
  Vec3 background = Vec3::Zero();
  std::optional<Aabb> bounding_box;
  double bounding_box_weight = 1.0;
  int log_every = 100;
  /// Fractions of stage 1 after which L_d and L_n switch on.
  double distortion_from = 0.1;
  double normal_from = 7.0 / 30.0;
  /// Stage-1 pruning of surfels with opacity below `prune_opacity` every
  /// `prune_every` iterations; 0 disables it.
  int prune_every = 0;
  double prune_opacity = 0.005;
  /// Learning-rate table; empty means default_param_groups(stage1_iters, stage1_iters).
  std::vector<ParamGroup> groups;

  /// 2000 + 500 iterations.
  static TrainConfig desk();
  void validate() const;
};

struct TrainLogRecord {
  int stage = 1;
  int iteration = 0;  // global, 1-based
  int view = 0;
  LossParts parts;
  double bounding_box = 0.0;
  double total = 0.0;
  double psnr = 0.0;
  std::map<std::string, double> learning_rates;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<TrainLogRecord> log;
  std::optional<double> last_stage1_loss;
  std::optional<double> first_stage2_loss;
};

/// Thrown on a non-finite loss or gradient; carries the last finite model.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, Model last_good) : std::runtime_error(what), last_good(std::move(last_good)) {}
  Model last_good;
};

using TrainCallback = std::function<void(const TrainLogRecord&, const Model&)>;

/// Stage 1: geometry, materials and env with the residual off and the env
/// re-prefiltered every step. Stage 2: env prefiltered once, only mipmap, mlp
/// and features (or SH coefficients) updated against L_c.
TrainResult train(Model model, const std::vector<TargetView>& views, const TrainConfig& config,
                  const TrainCallback& on_log = {});

/// Groups updated in each stage.
std::vector<std::string> stage1_groups();
std::vector<std::string> stage2_groups(ResidualKind kind);

/// Wall-clock time is left out so logs of identical runs are identical.
std::string train_log_jsonl(const TrainLogRecord& record);

}  // namespace glossplat
