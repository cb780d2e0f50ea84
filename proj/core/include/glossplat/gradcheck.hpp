// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glossplat/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace glossplat {

struct GradcheckSettings {
  double step = 1e-6;
  double min_denominator = 1e-8;
  // Entries per group; <= 0 checks all of them.
  int max_entries_per_group = 0;
  // Also accept one-sided second-order differences, so entries sitting on a
  // piecewise-smooth seam are judged against the branch they evaluate.
  bool one_sided_fallback = true;
};

struct GradcheckGroup {
  std::string group;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  double max_relative_error() const;
  /// Groups whose error is >= tolerance.
  std::vector<std::string> failing(double tolerance) const;
};

/// |a - n| / (|a| + |n|), or 0 when the denominator is below `min_denominator`.
double relative_error(double analytic, double numeric, double min_denominator = 1e-8);

/// Compares `analytic` (same layout as `params`) with central differences of
/// `loss`, which must read the current values behind `params`.
GradcheckReport gradcheck(const std::vector<ParamView>& params, const std::vector<ParamView>& analytic,
                          const std::function<double()>& loss, const GradcheckSettings& settings = {});

/// Same, for a loss given as a fixed-length list of terms whose sum is the
/// loss. Differences are taken term by term before summing, which keeps
/// untouched terms from adding rounding noise of the full sum.
GradcheckReport gradcheck_terms(const std::vector<ParamView>& params, const std::vector<ParamView>& analytic,
                                const std::function<std::vector<double>()>& terms,
                                const GradcheckSettings& settings = {});

}  // namespace glossplat
