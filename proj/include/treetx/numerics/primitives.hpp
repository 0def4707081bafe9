#pragma once

#include <span>
#include <vector>

#include "treetx/numerics/tensor.hpp"

namespace treetx::num {

inline constexpr double kLayerNormEps = 1e-5;

/// Max-subtracted softmax. Throws NumericError on non-finite input.
std::vector<double> softmax(std::span<const double> x);
void softmax_inplace(std::span<double> x);

/// Population-variance layer norm: (x - mean) / sqrt(var + eps) * gamma + beta.
std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gamma,
                               std::span<const double> beta, double eps = kLayerNormEps);

/// Row-wise layer norm. Writes the normalized (pre-affine) rows to `normalized`
/// and 1/sqrt(var + eps) per row to `inv_std` when those are non-null.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                       Tensor* normalized = nullptr, std::vector<double>* inv_std = nullptr);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
/// Adds `row` to every row of `m` (the `1 * v` broadcast).
Tensor broadcast_add_row(const Tensor& m, const Tensor& row);
/// x W + b, with x given as rows.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor transpose(const Tensor& m);

// Raw kernels; C is n x m and must already be sized. `accumulate` adds into C.
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);  // C = A B
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);  // C = A^T B
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate);  // C = A B^T

}  // namespace treetx::num
