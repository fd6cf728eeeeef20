#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "conetrx/rng.hpp"
#include "conetrx/tensor.hpp"

namespace conetrx {

/// One tensor to be checked: its value (perturbed in place) and the analytic
/// gradient computed at the unperturbed point.
struct FdTarget {
  std::string name;
  Tensor<double>* value = nullptr;
  const Tensor<double>* grad = nullptr;
};

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_target;
  int64_t worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int64_t coords_checked = 0;

  std::string to_string() const {
    return "max rel err " + std::to_string(max_rel_err) + " at " + worst_target + "[" +
           std::to_string(worst_index) + "] analytic=" + std::to_string(worst_analytic) +
           " numeric=" + std::to_string(worst_numeric) + " over " + std::to_string(coords_checked) + " coords";
  }
};

/// Central finite differences on a sampled subset of coordinates. `eval_loss`
/// must evaluate the scalar objective at the current value of every target
/// tensor. Targets are restored exactly after probing. Double precision only;
/// relative error uses an absolute floor so that near-zero coordinate pairs
/// do not dominate the report.
inline FdReport finite_difference_check(const std::function<double()>& eval_loss, std::vector<FdTarget> targets,
                                        double h = 1e-5, int64_t max_coords_per_target = 64,
                                        uint64_t seed = 0x5eedf00d, double rel_floor = 1e-7) {
  FdReport rep;
  Rng rng(seed);
  for (auto& t : targets) {
    const int64_t n = t.value->numel();
    require(t.grad != nullptr && t.grad->numel() == n,
            "finite_difference_check: analytic gradient missing or mis-shaped for " + t.name);
    std::vector<int64_t> coords;
    if (n <= max_coords_per_target) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      coords.reserve(static_cast<size_t>(max_coords_per_target));
      for (int64_t i = 0; i < max_coords_per_target; ++i)
        coords.push_back(static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(n)));
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
    }
    for (int64_t idx : coords) {
      double saved = (*t.value)[idx];
      (*t.value)[idx] = saved + h;
      double fp = eval_loss();
      (*t.value)[idx] = saved - h;
      double fm = eval_loss();
      (*t.value)[idx] = saved;
      double numeric = (fp - fm) / (2.0 * h);
      double analytic = (*t.grad)[idx];
      double denom = std::max({std::abs(numeric), std::abs(analytic), rel_floor});
      double rel = std::abs(numeric - analytic) / denom;
      ++rep.coords_checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_target = t.name;
        rep.worst_index = idx;
        rep.worst_analytic = analytic;
        rep.worst_numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace conetrx
