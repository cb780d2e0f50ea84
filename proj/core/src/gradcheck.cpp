// Copyright Contributors to the glossplat project
// SPDX-License-Identifier: Apache-2.0

#include "glossplat/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace glossplat {

double relative_error(double a, double n, double min_denominator) {
  const double den = std::abs(a) + std::abs(n);
  if (den < min_denominator) return 0.0;
  return std::abs(a - n) / den;
}

double GradcheckReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_relative_error);
  return m;
}

std::vector<std::string> GradcheckReport::failing(double tol) const {
  std::vector<std::string> out;
  for (const auto& g : groups)
    if (g.max_relative_error >= tol) out.push_back(g.group);
  return out;
}

namespace {

using Terms = std::vector<double>;

// sum_j c1 * a_j + c2 * b_j + c3 * d_j, skipping terms whose combination is exactly zero
double combine(const Terms& a, double ca, const Terms& b, double cb, const Terms* d = nullptr, double cd = 0.0) {
  if (a.size() != b.size() || (d && d->size() != a.size()))
    throw std::invalid_argument("gradcheck: loss term count changed between evaluations");
  long double s = 0.0L;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] == b[j] && (!d || (*d)[j] == a[j])) continue;
    long double v = static_cast<long double>(ca) * a[j] + static_cast<long double>(cb) * b[j];
    if (d) v += static_cast<long double>(cd) * (*d)[j];
    s += v;
  }
  return static_cast<double>(s);
}

}  // namespace

GradcheckReport gradcheck_terms(const std::vector<ParamView>& params, const std::vector<ParamView>& analytic,
                                const std::function<Terms()>& terms, const GradcheckSettings& s) {
  if (params.size() != analytic.size()) throw std::invalid_argument("gradcheck: layout mismatch");
  std::map<std::string, GradcheckGroup> groups;
  std::vector<std::string> order;
  const double h = s.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& pv = params[k];
    if (pv.values.size() != analytic[k].values.size()) throw std::invalid_argument("gradcheck: view size mismatch");
    if (!groups.count(pv.group)) {
      groups[pv.group].group = pv.group;
      order.push_back(pv.group);
    }
    GradcheckGroup& g = groups[pv.group];
    for (std::size_t i = 0; i < pv.values.size(); ++i) {
      if (s.max_entries_per_group > 0 && g.checked >= static_cast<std::size_t>(s.max_entries_per_group)) break;
      double& x = pv.values[i];
      const double x0 = x;
      x = x0 + h;
      const Terms fp = terms();
      x = x0 - h;
      const Terms fm = terms();
      const double a = analytic[k].values[i];
      const double central = combine(fp, 1.0, fm, -1.0) / (2.0 * h);
      double err = relative_error(a, central, s.min_denominator);
      double numeric = central;
      if (s.one_sided_fallback && err > 0.0) {
        x = x0;
        const Terms f0 = terms();
        x = x0 + 2.0 * h;
        const Terms fpp = terms();
        x = x0 - 2.0 * h;
        const Terms fmm = terms();
        // (-f(2h) + 4 f(h) - 3 f(0)) / 2h and its mirror
        const double right = (combine(fp, 4.0, fpp, -1.0, &f0, -3.0)) / (2.0 * h);
        const double left = (combine(fmm, 1.0, fm, -4.0, &f0, 3.0)) / (2.0 * h);
        for (double n : {right, left}) {
          const double e = relative_error(a, n, s.min_denominator);
          if (e < err) {
            err = e;
            numeric = n;
          }
        }
      }
      x = x0;
      if (g.checked == 0 || err > g.max_relative_error) {
        g.max_relative_error = err;
        g.worst_index = g.checked;
        g.worst_analytic = a;
        g.worst_numeric = numeric;
      }
      ++g.checked;
    }
  }
  GradcheckReport rep;
  for (const auto& name : order) rep.groups.push_back(groups[name]);
  return rep;
}

GradcheckReport gradcheck(const std::vector<ParamView>& params, const std::vector<ParamView>& analytic,
                          const std::function<double()>& loss, const GradcheckSettings& s) {
  return gradcheck_terms(params, analytic, [&] { return Terms{loss()}; }, s);
}

}  // namespace glossplat
