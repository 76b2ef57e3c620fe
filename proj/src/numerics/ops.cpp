#include "dggat/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dggat/errors.hpp"

namespace dggat::numerics {

namespace {

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = Tape::active();
  if (tape == nullptr) return nullptr;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return tape;
  }
  return nullptr;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()) + " differ");
  }
}

// Adds `g` into the gradient of `t` when it participates in differentiation.
template <typename F>
void accumulate(Tensor t, F&& fill) {
  if (!t.requires_grad()) return;
  fill(t.mutable_grad());
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || a.rank() > 2 || b.rank() > 2) {
    throw DimensionError("matmul: cannot multiply " + shape_string(a.shape()) + " by " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  Tensor result({m, n}, std::move(out));
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(result, [a, b, m, k, n](std::span<const double> g) {
      accumulate(a, [&](std::span<double> ga) {
        const auto B = b.data();
        // dA = dC * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * B[p * n + j];
            ga[i * k + p] += acc;
          }
      });
      accumulate(b, [&](std::span<double> gb) {
        const auto A = a.data();
        // dB = A^T * dC
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
          }
      });
    });
  }
  return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(result, [a, b](std::span<const double> g) {
      accumulate(a, [&](std::span<double> ga) {
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      });
      accumulate(b, [&](std::span<double> gb) {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
      });
    });
  }
  return result;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.rows(), f = x.cols();
  if (bias.numel() != f) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not fit rows of " + shape_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto b = bias.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) out[i * f + j] += b[j];
  Tensor result(x.shape(), std::move(out));
  if (Tape* tape = recording_tape({&x, &bias})) {
    tape->record(result, [x, bias, n, f](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      });
      accumulate(bias, [&](std::span<double> gb) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < f; ++j) gb[j] += g[i * f + j];
      });
    });
  }
  return result;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  Tensor result(a.shape(), std::move(out));
  if (Tape* tape = recording_tape({&a, &b})) {
    tape->record(result, [a, b](std::span<const double> g) {
      accumulate(a, [&](std::span<double> ga) {
        const auto B = b.data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
      });
      accumulate(b, [&](std::span<double> gb) {
        const auto A = a.data();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
      });
    });
  }
  return result;
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  Tensor result(x.shape(), std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    tape->record(result, [x, factor](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
      });
    });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor result = Tensor::scalar(total);
  if (Tape* tape = recording_tape({&x})) {
    tape->record(result, [x](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        for (double& v : gx) v += g[0];
      });
    });
  }
  return result;
}

Tensor leaky_relu(const Tensor& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw ContractViolation("leaky_relu: slope must lie in (0, 1), got " + std::to_string(slope));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0.0 ? v : slope * v;
  Tensor result(x.shape(), std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    tape->record(result, [x, slope](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        const auto X = x.data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += X[i] > 0.0 ? g[i] : slope * g[i];
      });
    });
  }
  return result;
}

Tensor elu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v = v > 0.0 ? v : std::expm1(v);
  Tensor result(x.shape(), std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    tape->record(result, [x](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        const auto X = x.data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += X[i] > 0.0 ? g[i] : g[i] * std::exp(X[i]);
      });
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  const std::size_t n = x.rows(), f = x.cols();
  std::vector<double> out(index.size() * f);
  const auto X = x.data();
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= n) {
      throw IndexError("gather_rows: row " + std::to_string(index[e]) + " out of range for " +
                       shape_string(x.shape()));
    }
    std::copy_n(X.data() + index[e] * f, f, out.data() + e * f);
  }
  Tensor result({index.size(), f}, std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    tape->record(result, [x, idx = std::move(idx), f](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        for (std::size_t e = 0; e < idx.size(); ++e)
          for (std::size_t j = 0; j < f; ++j) gx[idx[e] * f + j] += g[e * f + j];
      });
    });
  }
  return result;
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segments) {
  const std::size_t e_count = scores.numel();
  if (segments.size() != e_count) {
    throw DimensionError("segment_softmax: " + std::to_string(e_count) + " scores but " +
                         std::to_string(segments.size()) + " segment ids");
  }
  if (e_count == 0) return Tensor(scores.shape(), {});
  const std::size_t n_seg = *std::max_element(segments.begin(), segments.end()) + 1;
  const auto S = scores.data();

  std::vector<double> seg_max(n_seg, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < e_count; ++e) seg_max[segments[e]] = std::max(seg_max[segments[e]], S[e]);
  std::vector<double> out(e_count);
  std::vector<double> seg_sum(n_seg, 0.0);
  for (std::size_t e = 0; e < e_count; ++e) {
    out[e] = std::exp(S[e] - seg_max[segments[e]]);
    seg_sum[segments[e]] += out[e];
  }
  for (std::size_t e = 0; e < e_count; ++e) out[e] /= seg_sum[segments[e]];

  Tensor result(scores.shape(), std::move(out));
  if (Tape* tape = recording_tape({&scores})) {
    std::vector<std::size_t> seg(segments.begin(), segments.end());
    Tensor probs = result.detach();
    tape->record(result, [scores, probs, seg = std::move(seg), n_seg](std::span<const double> g) {
      accumulate(scores, [&](std::span<double> gs) {
        // d s_e = p_e * (g_e - sum_{k in seg} p_k g_k)
        const auto P = probs.data();
        std::vector<double> dot(n_seg, 0.0);
        for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += P[e] * g[e];
        for (std::size_t e = 0; e < seg.size(); ++e) gs[e] += P[e] * (g[e] - dot[seg[e]]);
      });
    });
  }
  return result;
}

Tensor segment_weighted_sum(const Tensor& weights, const Tensor& values,
                            std::span<const std::size_t> segments, std::size_t num_segments) {
  const std::size_t e_count = values.rows(), f = values.cols();
  if (weights.numel() != e_count || segments.size() != e_count) {
    throw DimensionError("segment_weighted_sum: weights " + shape_string(weights.shape()) +
                         ", values " + shape_string(values.shape()) + ", " +
                         std::to_string(segments.size()) + " segment ids");
  }
  const auto W = weights.data();
  const auto V = values.data();
  std::vector<double> out(num_segments * f, 0.0);
  for (std::size_t e = 0; e < e_count; ++e) {
    const std::size_t s = segments[e];
    if (s >= num_segments) {
      throw IndexError("segment_weighted_sum: segment id " + std::to_string(s) +
                       " out of range for " + std::to_string(num_segments) + " segments");
    }
    for (std::size_t j = 0; j < f; ++j) out[s * f + j] += W[e] * V[e * f + j];
  }
  Tensor result({num_segments, f}, std::move(out));
  if (Tape* tape = recording_tape({&weights, &values})) {
    std::vector<std::size_t> seg(segments.begin(), segments.end());
    tape->record(result, [weights, values, seg = std::move(seg), f](std::span<const double> g) {
      accumulate(weights, [&](std::span<double> gw) {
        const auto V = values.data();
        for (std::size_t e = 0; e < seg.size(); ++e) {
          double acc = 0.0;
          for (std::size_t j = 0; j < f; ++j) acc += g[seg[e] * f + j] * V[e * f + j];
          gw[e] += acc;
        }
      });
      accumulate(values, [&](std::span<double> gv) {
        const auto W = weights.data();
        for (std::size_t e = 0; e < seg.size(); ++e)
          for (std::size_t j = 0; j < f; ++j) gv[e * f + j] += W[e] * g[seg[e] * f + j];
      });
    });
  }
  return result;
}

Tensor concat_features(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractViolation("concat_features: no parts");
  const std::size_t n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != n) {
      throw DimensionError("concat_features: row count " + std::to_string(p.rows()) +
                           " differs from " + std::to_string(n));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto P = parts[k].data();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(P.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    offset += widths[k];
  }
  Tensor result({n, total}, std::move(out));

  Tape* tape = Tape::active();
  const bool any_grad =
      std::any_of(parts.begin(), parts.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (tape != nullptr && any_grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape->record(result, [inputs = std::move(inputs), widths = std::move(widths), n,
                          total](std::span<const double> g) {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < inputs.size(); ++k) {
        accumulate(inputs[k], [&](std::span<double> gp) {
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < widths[k]; ++j)
              gp[i * widths[k] + j] += g[i * total + offset + j];
        });
        offset += widths[k];
      }
    });
  }
  return result;
}

Tensor mean_rows(const Tensor& x, std::span<const std::size_t> groups, std::size_t num_groups) {
  const std::size_t n = x.rows(), f = x.cols();
  if (groups.size() != n) {
    throw DimensionError("mean_rows: " + std::to_string(groups.size()) + " group ids for " +
                         std::to_string(n) + " rows");
  }
  std::vector<double> counts(num_groups, 0.0);
  for (std::size_t g : groups) {
    if (g >= num_groups) throw IndexError("mean_rows: group id " + std::to_string(g) + " out of range");
    counts[g] += 1.0;
  }
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (counts[g] == 0.0) throw ContractViolation("mean_rows: group " + std::to_string(g) + " is empty");
  }
  const auto X = x.data();
  std::vector<double> out(num_groups * f, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < f; ++j) out[groups[i] * f + j] += X[i * f + j];
  for (std::size_t g = 0; g < num_groups; ++g)
    for (std::size_t j = 0; j < f; ++j) out[g * f + j] /= counts[g];
  Tensor result({num_groups, f}, std::move(out));
  if (Tape* tape = recording_tape({&x})) {
    std::vector<std::size_t> grp(groups.begin(), groups.end());
    tape->record(result, [x, grp = std::move(grp), counts = std::move(counts), f](std::span<const double> g) {
      accumulate(x, [&](std::span<double> gx) {
        for (std::size_t i = 0; i < grp.size(); ++i)
          for (std::size_t j = 0; j < f; ++j) gx[i * f + j] += g[grp[i] * f + j] / counts[grp[i]];
      });
    });
  }
  return result;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.numel() != target.numel()) {
    throw DimensionError("mse_loss: prediction " + shape_string(pred.shape()) + " vs target " +
                         shape_string(target.shape()));
  }
  const std::size_t n = pred.numel();
  if (n == 0) throw ContractViolation("mse_loss: empty input");
  const auto P = pred.data();
  const auto T = target.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (P[i] - T[i]) * (P[i] - T[i]);
  Tensor result = Tensor::scalar(total / static_cast<double>(n));
  if (Tape* tape = recording_tape({&pred, &target})) {
    tape->record(result, [pred, target, n](std::span<const double> g) {
      const double c = 2.0 * g[0] / static_cast<double>(n);
      accumulate(pred, [&](std::span<double> gp) {
        const auto P = pred.data();
        const auto T = target.data();
        for (std::size_t i = 0; i < n; ++i) gp[i] += c * (P[i] - T[i]);
      });
      accumulate(target, [&](std::span<double> gt) {
        const auto P = pred.data();
        const auto T = target.data();
        for (std::size_t i = 0; i < n; ++i) gt[i] -= c * (P[i] - T[i]);
      });
    });
  }
  return result;
}

}  // namespace dggat::numerics
