// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/model.hpp"

#include <map>
#include <string>
#include <vector>

namespace glossplat {

/// lr(t) = start * (end / start)^(t / T), clamped to [0, T]. Constant when start == end.
struct ExpDecay {
  double start = 1e-3;
  double end = 1e-3;
  int total_steps = 1;

  static ExpDecay constant(double lr) { return {lr, lr, 1}; }
  double at(int step) const;
  void validate() const;
};

struct ParamGroup {
  std::string name;
  ExpDecay lr;
};

/// Default learning rates; position decays over `position_steps`, env over `env_steps`.
std::vector<ParamGroup> default_param_groups(int position_steps, int env_steps);

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-15;
};

/// Adam over a fixed list of parameter views. Only groups present in the group
/// table are updated; each group keeps its own step count.
class Adam {
 public:
  Adam(std::vector<ParamGroup> groups, AdamSettings settings = {});

  /// `params` and `grads` must list the same ranges on every call.
  void step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads);

  double learning_rate(const std::string& group) const;
  const std::map<std::string, ParamGroup>& groups() const { return groups_; }
  int steps(const std::string& group) const;

  /// Drops the moment buffers of views whose `keep` entry is false, so the
  /// shortened view list can be passed to later steps.
  void retain(const std::vector<bool>& keep);

 private:
  AdamSettings settings_;
  std::map<std::string, ParamGroup> groups_;
  std::map<std::string, int> steps_;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace glossplat
