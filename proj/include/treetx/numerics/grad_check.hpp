#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "treetx/numerics/param_store.hpp"

namespace treetx::num {

/// Scalar objective over a parameter store. When `grads` is non-null the
/// function also adds its analytic gradient into it.
using ObjectiveFn = std::function<double(const ParamStore& params, GradMap* grads)>;

struct GradCheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  std::map<std::string, double> per_tensor;  // max relative error per learnable tensor
  std::vector<GradCheckEntry> entries;       // every probed coordinate, in probe order
};

/// Compares the analytic gradient against central differences with step
/// `eps` on every learnable coordinate. Relative error per coordinate is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
/// Throws NumericError if a probe produces a non-finite value.
GradCheckReport grad_check(const ObjectiveFn& f, const ParamStore& params, double eps = 1e-5);

}  // namespace treetx::num
