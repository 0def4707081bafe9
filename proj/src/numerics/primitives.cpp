#include "treetx/numerics/primitives.hpp"

#include <algorithm>
#include <cmath>

#include "treetx/core/errors.hpp"

namespace treetx::num {

void softmax_inplace(std::span<double> x) {
  if (x.empty()) return;
  double max = x[0];
  for (double v : x) {
    if (std::isnan(v)) throw NumericError("softmax input contains NaN");
    max = std::max(max, v);
  }
  if (!std::isfinite(max)) throw NumericError("softmax input is not finite");
  double sum = 0.0;
  for (double& v : x) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : x) v /= sum;
}

std::vector<double> softmax(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  softmax_inplace(out);
  return out;
}

std::vector<double> layer_norm(std::span<const double> x, std::span<const double> gamma,
                               std::span<const double> beta, double eps) {
  if (x.size() != gamma.size() || x.size() != beta.size()) {
    throw ShapeError("layer_norm: input, gamma and beta widths differ");
  }
  if (!(eps > 0.0)) throw NumericError("layer_norm: eps must be positive");
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
  return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                       Tensor* normalized, std::vector<double>* inv_std) {
  const std::size_t d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw ShapeError("layer_norm: gamma/beta width " + std::to_string(gamma.size()) +
                     " does not match input width " + std::to_string(d));
  }
  Tensor out(x.shape());
  if (normalized) *normalized = Tensor(x.shape());
  if (inv_std) inv_std->assign(x.rows(), 0.0);
  const auto n = static_cast<double>(d);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double z = (in[i] - mean) * inv;
      if (normalized) normalized->at(r, i) = z;
      o[i] = z * gamma[i] + beta[i];
    }
    if (inv_std) (*inv_std)[r] = inv;
  }
  return out;
}

void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k || c.rows() != n || c.cols() != m) {
    throw ShapeError("matmul: " + a.shape_string() + " x " + b.shape_string() + " -> " +
                     c.shape_string());
  }
  if (!accumulate) c.fill(0.0);
  const double* A = a.raw();
  const double* B = b.raw();
  double* C = c.raw();
  // Four rows of C at a time share each row of B. Every C element still
  // accumulates its products in increasing p, so results match the plain loop.
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* __restrict c0 = C + i * m;
    double* __restrict c1 = c0 + m;
    double* __restrict c2 = c1 + m;
    double* __restrict c3 = c2 + m;
    const double* a0 = A + i * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      const double* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bj = brow[j];
        c0[j] += s0 * bj;
        c1[j] += s1 * bj;
        c2[j] += s2 * bj;
        c3[j] += s3 * bj;
      }
    }
  }
  for (; i < n; ++i) {
    double* __restrict crow = C + i * m;
    const double* arow = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = arow[p];
      const double* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != n || c.rows() != k || c.cols() != m) {
    throw ShapeError("matmul_tn: " + a.shape_string() + "^T x " + b.shape_string() + " -> " +
                     c.shape_string());
  }
  if (!accumulate) c.fill(0.0);
  const double* A = a.raw();
  const double* B = b.raw();
  double* C = c.raw();
  // Four rows of A and B per pass; each C element adds them in increasing r.
  std::size_t r = 0;
  for (; r + 4 <= n; r += 4) {
    const double* a0 = A + r * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    const double* b0 = B + r * m;
    const double* b1 = b0 + m;
    const double* b2 = b1 + m;
    const double* b3 = b2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s0 = a0[p], s1 = a1[p], s2 = a2[p], s3 = a3[p];
      double* __restrict crow = C + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        double acc = crow[j];
        acc += s0 * b0[j];
        acc += s1 * b1[j];
        acc += s2 * b2[j];
        acc += s3 * b3[j];
        crow[j] = acc;
      }
    }
  }
  for (; r < n; ++r) {
    const double* arow = A + r * k;
    const double* brow = B + r * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = arow[p];
      double* __restrict crow = C + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += s * brow[j];
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c, bool accumulate) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + a.shape_string() + " x " + b.shape_string() + "^T");
  }
  gemm_nn(a, transpose(b), c, accumulate);
}

Tensor transpose(const Tensor& m) {
  Tensor t = Tensor::matrix(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) t.at(c, r) = m.at(r, c);
  }
  return t;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c = Tensor::matrix(a.rows(), b.cols());
  gemm_nn(a, b, c, false);
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor broadcast_add_row(const Tensor& m, const Tensor& row) {
  if (row.size() != m.cols()) {
    throw ShapeError("broadcast_add_row: row width " + std::to_string(row.size()) +
                     " vs matrix " + m.shape_string());
  }
  Tensor out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += row[c];
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  return broadcast_add_row(matmul(x, w), b);
}

}  // namespace treetx::num
