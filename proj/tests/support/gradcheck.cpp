#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace iqlut::testing {

GradCheckResult gradient_check(const Model& model, const TrainingSample& sample, const TrainConfig& cfg,
                               const TeacherTargets* teacher, const QuantizationContext& analytic,
                               const QuantizationContext& numeric, double floor) {
  Model grad = make_model(model.spec);
  sample_gradient(model, sample, cfg, teacher, analytic, &grad);
  const std::vector<double> g = flatten_parameters(grad);
  const std::vector<double> base = flatten_parameters(model);

  std::vector<std::string> names;
  for (const ConstParamTensor& t : parameter_tensors(model)) {
    names.insert(names.end(), t.values.size(), t.name);
  }

  Model probe = model;
  std::vector<double> x = base;
  auto loss_at = [&](std::size_t i, double v) {
    x[i] = v;
    assign_parameters(probe, x);
    const double l = sample_gradient(probe, sample, cfg, teacher, numeric).total;
    x[i] = base[i];
    return l;
  };

  GradCheckResult r;
  for (std::size_t i = 0; i < base.size(); ++i) {
    double best = INFINITY;
    for (double h : {1e-6, 1e-7, 1e-5}) {
      const double n = (loss_at(i, base[i] + h) - loss_at(i, base[i] - h)) / (2 * h);
      const double rel = std::abs(g[i] - n) / std::max({std::abs(g[i]), std::abs(n), floor});
      best = std::min(best, rel);
      if (best <= 1e-4) break;
    }
    if (best > r.worst_relative) {
      r.worst_relative = best;
      r.worst_tensor = names[i];
    }
    ++r.checked;
  }
  return r;
}

}  // namespace iqlut::testing
