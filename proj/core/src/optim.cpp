// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/optim.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace glossplat {

double ExpDecay::at(int step) const {
  if (start == end) return start;
  if (step <= 0) return start;
  if (step >= total_steps) return end;
  return start * std::pow(end / start, static_cast<double>(step) / total_steps);
}

void ExpDecay::validate() const {
  if (!(start > 0.0) || !(end > 0.0)) throw std::invalid_argument("ExpDecay: learning rates must be positive");
  if (end > start) throw std::invalid_argument("ExpDecay: end rate exceeds start rate");
  if (total_steps < 1) throw std::invalid_argument("ExpDecay: total_steps must be >= 1");
}

std::vector<ParamGroup> default_param_groups(int position_steps, int env_steps) {
  const int ps = std::max(position_steps, 1), es = std::max(env_steps, 1);
  return {
      {"position", {1.6e-4, 1.6e-6, ps}},
      {"rotation", ExpDecay::constant(1e-2)},
      {"scale", ExpDecay::constant(3e-3)},
      {"opacity", ExpDecay::constant(0.03)},
      {"diffuse", ExpDecay::constant(2.5e-3)},
      {"roughness", ExpDecay::constant(2.5e-3)},
      {"tint", ExpDecay::constant(2.5e-3)},
      {"feature", ExpDecay::constant(2.5e-3)},
      {"sh", ExpDecay::constant(2.5e-3)},
      {"env", {1e-2, 1e-3, es}},
      {"mipmap", ExpDecay::constant(1e-2)},
      {"mlp", ExpDecay::constant(1e-3)},
  };
}

Adam::Adam(std::vector<ParamGroup> groups, AdamSettings settings) : settings_(settings) {
  for (auto& g : groups) {
    g.lr.validate();
    steps_[g.name] = 0;
    groups_[g.name] = std::move(g);
  }
}

void Adam::step(const std::vector<ParamView>& params, const std::vector<ParamView>& grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("Adam: parameter and gradient lists differ");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.values.size(), 0.0);
      v_.emplace_back(p.values.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("Adam: parameter list changed between steps");

  std::set<std::string> touched;
  for (const auto& p : params)
    if (groups_.count(p.group)) touched.insert(p.group);
  for (const auto& g : touched) ++steps_[g];

  const double b1 = settings_.beta1, b2 = settings_.beta2;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto it = groups_.find(params[k].group);
    if (it == groups_.end()) continue;
    const auto pv = params[k].values;
    const auto gv = grads[k].values;
    if (pv.size() != gv.size() || pv.size() != m_[k].size())
      throw std::invalid_argument("Adam: view size mismatch in group " + params[k].group);
    const int t = steps_[params[k].group];
    const double lr = it->second.lr.at(t - 1);
    const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double g = gv[i];
      m_[k][i] = b1 * m_[k][i] + (1.0 - b1) * g;
      v_[k][i] = b2 * v_[k][i] + (1.0 - b2) * g * g;
      const double mh = m_[k][i] / c1, vh = v_[k][i] / c2;
      pv[i] -= lr * mh / (std::sqrt(vh) + settings_.epsilon);
    }
  }
}

double Adam::learning_rate(const std::string& group) const {
  const auto it = groups_.find(group);
  if (it == groups_.end()) throw std::invalid_argument("Adam: unknown group " + group);
  return it->second.lr.at(steps_.at(group));
}

void Adam::retain(const std::vector<bool>& keep) {
  if (m_.empty()) return;
  if (keep.size() != m_.size()) throw std::invalid_argument("Adam: retain mask does not match the view list");
  std::size_t out = 0;
  for (std::size_t k = 0; k < keep.size(); ++k)
    if (keep[k]) {
      if (out != k) {
        m_[out] = std::move(m_[k]);
        v_[out] = std::move(v_[k]);
      }
      ++out;
    }
  m_.resize(out);
  v_.resize(out);
}

int Adam::steps(const std::string& group) const {
  const auto it = steps_.find(group);
  return it == steps_.end() ? 0 : it->second;
}

}  // namespace glossplat
