// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/train.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

namespace glossplat {

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.stage1_iters = 2000;
  c.stage2_iters = 500;
  return c;
}

void TrainConfig::validate() const {
  if (stage1_iters < 0 || stage2_iters < 0) throw std::invalid_argument("TrainConfig: negative iteration count");
  if (prune_every < 0) throw std::invalid_argument("TrainConfig: prune_every must be >= 0");
  if (log_every < 1) throw std::invalid_argument("TrainConfig: log_every must be >= 1");
  if (!(distortion_from >= 0.0 && distortion_from <= 1.0) || !(normal_from >= 0.0 && normal_from <= 1.0))
    throw std::invalid_argument("TrainConfig: regularizer start fractions must lie in [0, 1]");
  weights.validate();
  for (const auto& g : groups) g.lr.validate();
}

std::vector<std::string> stage1_groups() {
  return {"position", "rotation", "scale", "opacity", "diffuse", "roughness", "tint", "env"};
}

std::vector<std::string> stage2_groups(ResidualKind kind) {
  if (kind == ResidualKind::kSh) return {"sh"};
  return {"mipmap", "mlp", "feature"};
}

namespace {

std::vector<ParamGroup> select(const std::vector<ParamGroup>& table, const std::vector<std::string>& names) {
  std::vector<ParamGroup> out;
  for (const auto& g : table)
    if (std::find(names.begin(), names.end(), g.name) != names.end()) out.push_back(g);
  return out;
}

void check_finite(const std::vector<ParamView>& grads, const Model& last_good, int iteration) {
  for (const auto& v : grads)
    for (double x : v.values)
      if (!std::isfinite(x))
        throw TrainingError("non-finite gradient in group '" + v.group + "' at iteration " + std::to_string(iteration),
                            last_good);
}

// Removes low-opacity surfels; returns the per-view keep mask of the old layout.
std::vector<bool> prune_surfels(Model& model, double min_opacity) {
  const std::size_t n = model.size();
  std::vector<bool> keep_surfel(n);
  for (std::size_t i = 0; i < n; ++i) keep_surfel[i] = model.surfels[i].opacity() >= min_opacity;
  const auto before = parameter_views(model);
  auto owner = [&](const double* p) -> std::ptrdiff_t {
    const auto* sp = reinterpret_cast<const unsigned char*>(p);
    const auto* s0 = reinterpret_cast<const unsigned char*>(model.surfels.data());
    if (sp >= s0 && sp < s0 + n * sizeof(Surfel)) return (sp - s0) / static_cast<std::ptrdiff_t>(sizeof(Surfel));
    const auto* h0 = reinterpret_cast<const unsigned char*>(model.sh.data());
    if (!model.sh.empty() && sp >= h0 && sp < h0 + model.sh.size() * sizeof(ShCoefficients))
      return (sp - h0) / static_cast<std::ptrdiff_t>(sizeof(ShCoefficients));
    return -1;
  };
  std::vector<bool> keep;
  for (const auto& v : before) {
    const std::ptrdiff_t i = owner(v.values.data());
    keep.push_back(i < 0 || keep_surfel[static_cast<std::size_t>(i)]);
  }
  std::size_t out = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (keep_surfel[i]) {
      model.surfels[out] = model.surfels[i];
      if (!model.sh.empty()) model.sh[out] = model.sh[i];
      ++out;
    }
  model.surfels.resize(out);
  if (!model.sh.empty()) model.sh.resize(out);
  return keep;
}

}  // namespace

TrainResult train(Model model, const std::vector<TargetView>& views, const TrainConfig& cfg,
                  const TrainCallback& on_log) {
  cfg.validate();
  if (views.empty()) throw std::invalid_argument("train: no training views");
  model.options.single_level_env = cfg.single_level_env;
  if (cfg.sh_residual && model.options.residual_kind != ResidualKind::kSh)
    throw std::invalid_argument("train: SH residual requested but the model has an MLP residual");
  model.validate();

  const auto table = cfg.groups.empty() ? default_param_groups(cfg.stage1_iters, cfg.stage1_iters) : cfg.groups;
  const PrefilterOperator prefilter(model.env.size(), model.options.prefilter);
  Rng rng(hash_combine(cfg.seed, 0x747261696e));
  TrainResult result;
  const auto t0 = std::chrono::steady_clock::now();
  int global = 0;

  auto run_stage = [&](int stage, int iters) {
    ObjectiveOptions obj;
    obj.weights = cfg.weights;
    obj.background = cfg.background;
    obj.geometry_losses = stage == 1;
    obj.residual = stage == 2;
    if (stage == 1) obj.bounding_box = cfg.bounding_box;
    obj.bounding_box_weight = cfg.bounding_box_weight;

    Adam adam(select(table, stage == 1 ? stage1_groups() : stage2_groups(model.options.residual_kind)));
    std::optional<ModelGrad> grad(std::in_place, model);
    auto params = parameter_views(model);
    auto grads = gradient_views(*grad);
    EnvCubeMipmap env = prefilter.apply(model.env);
    Model last_good = model;

    for (int it = 0; it < iters; ++it) {
      ++global;
      if (stage == 1 && it > 0) {
        env.levels[0] = model.env;
        prefilter.refresh(env);
      }
      if (stage == 1) {
        obj.weights.distortion = it >= cfg.distortion_from * iters ? cfg.weights.distortion : 0.0;
        obj.weights.normal = it >= cfg.normal_from * iters ? cfg.weights.normal : 0.0;
      }
      const int v = static_cast<int>(rng.below(views.size()));
      grad->zero();
      LossReport rep;
      try {
        rep = evaluate_objective(model, env, views[v], obj, &*grad, &prefilter);
      } catch (const std::invalid_argument& e) {
        throw TrainingError(std::string(e.what()) + " at iteration " + std::to_string(global), last_good);
      }
      if (!std::isfinite(rep.total))
        throw TrainingError("non-finite loss at iteration " + std::to_string(global), last_good);
      check_finite(grads, last_good, global);
      if (stage == 1) result.last_stage1_loss = rep.total;
      if (stage == 2 && it == 0) result.first_stage2_loss = rep.total;

      last_good = model;
      adam.step(params, grads);
      if (stage == 1) project_parameters(model);
      if (stage == 1 && cfg.prune_every > 0 && (it + 1) % cfg.prune_every == 0 && it + 1 < iters) {
        const std::size_t before = model.size();
        const std::vector<bool> keep = prune_surfels(model, cfg.prune_opacity);
        if (model.size() != before) {
          if (model.surfels.empty()) throw TrainingError("pruning removed every surfel", last_good);
          adam.retain(keep);
          grad.emplace(model);
          params = parameter_views(model);
          grads = gradient_views(*grad);
        }
      }

      if (global % cfg.log_every == 0 || it + 1 == iters) {
        TrainLogRecord rec;
        rec.stage = stage;
        rec.iteration = global;
        rec.view = v;
        rec.parts = rep.parts;
        rec.bounding_box = rep.bounding_box;
        rec.total = rep.total;
        rec.psnr = rep.psnr;
        for (const auto& [name, g] : adam.groups()) rec.learning_rates[name] = adam.learning_rate(name);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.log.push_back(rec);
        if (on_log) on_log(rec, model);
      }
    }
  };

  run_stage(1, cfg.stage1_iters);
  if (!cfg.no_residual) run_stage(2, cfg.stage2_iters);
  result.model = std::move(model);
  return result;
}

std::string train_log_jsonl(const TrainLogRecord& r) {
  nlohmann::json j = {{"stage", r.stage},
                      {"iteration", r.iteration},
                      {"view", r.view},
                      {"loss", r.total},
                      {"l_color", r.parts.color},
                      {"l_distortion", r.parts.distortion},
                      {"l_normal", r.parts.normal},
                      {"l_alpha", r.parts.alpha},
                      {"l_bbox", r.bounding_box},
                      {"psnr", r.psnr},
                      {"lr", r.learning_rates}};
  return j.dump();
}

}  // namespace glossplat
