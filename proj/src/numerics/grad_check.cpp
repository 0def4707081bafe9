#include "treetx/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "treetx/core/errors.hpp"

namespace treetx::num {

GradCheckReport grad_check(const ObjectiveFn& f, const ParamStore& params, double eps) {
  GradMap analytic = zeros_like(params);
  const double base = f(params, &analytic);
  if (!std::isfinite(base)) throw NumericError("grad_check: objective is not finite");

  GradCheckReport report;
  ParamStore probe = params;
  for (auto& [name, tensor] : probe.learnable()) {
    const Tensor& grad = analytic.at(name);
    double tensor_max = 0.0;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + eps;
      const double plus = f(probe, nullptr);
      tensor[i] = saved - eps;
      const double minus = f(probe, nullptr);
      tensor[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("grad_check: non-finite objective while probing " + name + "[" +
                           std::to_string(i) + "]");
      }
      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = grad[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coordinates;
      report.entries.push_back({name, i, a, numeric, rel});
      tensor_max = std::max(tensor_max, rel);
      if (rel > report.max_relative_error || report.worst_param.empty()) {
        report.max_relative_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
    report.per_tensor[name] = tensor_max;
  }
  return report;
}

}  // namespace treetx::num
