// SPDX-License-Identifier: Apache-2.0
#include "attrikit/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace attrikit {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXf>;
using MapCV = Eigen::Map<const Eigen::VectorXf>;

int conv_out_extent(int extent, int kernel, int stride, int padding) {
  int padded = extent + 2 * padding;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

void Tape::clear() { nodes_.clear(); }

TensorPtr Tape::track_output(const TensorPtr& output) { return output; }

void Tape::record(const TensorPtr& output, std::function<void()> backprop) {
  if (!recording_) return;
  nodes_.push_back(Node{output, std::move(backprop)});
}

void Tape::backward(const TensorPtr& loss) {
  if (!loss || loss->size() != 1)
    throw NumericError("backward requires a scalar loss tensor");
  // Non-leaf gradients are scratch space for the replay; reset them so a
  // second backward() does not reuse stale values. Leaves keep accumulating.
  for (auto& node : nodes_) {
    node.output->ensure_grad();
    node.output->zero_grad();
  }
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backprop) it->backprop();
  }
}

namespace {

// Gathers conv patches of one NCHW sample into a (C*Kh*Kw) x (Ho*Wo) matrix.
void im2col(const float* x, int C, int H, int W, int Kh, int Kw, int stride, int pad,
            int Ho, int Wo, float* cols) {
  for (int c = 0; c < C; ++c) {
    const float* xc = x + static_cast<int64_t>(c) * H * W;
    for (int kh = 0; kh < Kh; ++kh) {
      for (int kw = 0; kw < Kw; ++kw) {
        float* row = cols + (static_cast<int64_t>((c * Kh + kh) * Kw + kw)) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + kh;
          float* out = row + static_cast<int64_t>(oh) * Wo;
          if (ih < 0 || ih >= H) {
            std::memset(out, 0, sizeof(float) * static_cast<size_t>(Wo));
            continue;
          }
          const float* xr = xc + static_cast<int64_t>(ih) * W;
          // valid ow range: 0 <= ow*stride - pad + kw < W
          int lo = 0, hi = Wo;
          while (lo < Wo && lo * stride - pad + kw < 0) ++lo;
          while (hi > lo && (hi - 1) * stride - pad + kw >= W) --hi;
          if (lo > 0) std::memset(out, 0, sizeof(float) * static_cast<size_t>(lo));
          if (hi < Wo) std::memset(out + hi, 0, sizeof(float) * static_cast<size_t>(Wo - hi));
          if (stride == 1) {
            if (hi > lo)
              std::memcpy(out + lo, xr + (lo - pad + kw), sizeof(float) * static_cast<size_t>(hi - lo));
          } else {
            for (int ow = lo; ow < hi; ++ow) out[ow] = xr[ow * stride - pad + kw];
          }
        }
      }
    }
  }
}

// Scatter-adds a column matrix back onto the input gradient.
void col2im_add(const float* cols, int C, int H, int W, int Kh, int Kw, int stride, int pad,
                int Ho, int Wo, float* dx) {
  for (int c = 0; c < C; ++c) {
    float* xc = dx + static_cast<int64_t>(c) * H * W;
    for (int kh = 0; kh < Kh; ++kh) {
      for (int kw = 0; kw < Kw; ++kw) {
        const float* row = cols + (static_cast<int64_t>((c * Kh + kh) * Kw + kw)) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + kh;
          if (ih < 0 || ih >= H) continue;
          float* xr = xc + static_cast<int64_t>(ih) * W;
          const float* in = row + static_cast<int64_t>(oh) * Wo;
          int lo = 0, hi = Wo;
          while (lo < Wo && lo * stride - pad + kw < 0) ++lo;
          while (hi > lo && (hi - 1) * stride - pad + kw >= W) --hi;
          for (int ow = lo; ow < hi; ++ow) xr[ow * stride - pad + kw] += in[ow];
        }
      }
    }
  }
}

}  // namespace

TensorPtr Tape::conv2d(const TensorPtr& input, const TensorPtr& kernel, const TensorPtr& bias,
                       int stride, int padding) {
  if (input->rank() != 4 || kernel->rank() != 4)
    throw ShapeError("conv2d expects NCHW input and OIKhKw kernel, got " +
                     dims_to_string(input->dims) + " and " + dims_to_string(kernel->dims));
  if (stride < 1) throw ShapeError("conv2d stride must be positive");
  if (padding < 0) throw ShapeError("conv2d padding must be nonnegative");
  const int N = input->dim(0), C = input->dim(1), H = input->dim(2), W = input->dim(3);
  const int O = kernel->dim(0), I = kernel->dim(1), Kh = kernel->dim(2), Kw = kernel->dim(3);
  if (I != C)
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(C) +
                     " channels, kernel expects " + std::to_string(I));
  const int Ho = conv_out_extent(H, Kh, stride, padding);
  const int Wo = conv_out_extent(W, Kw, stride, padding);
  if (Ho < 1 || Wo < 1)
    throw ShapeError("conv2d input " + dims_to_string(input->dims) +
                     " admits no kernel placement for kernel " + dims_to_string(kernel->dims) +
                     " stride " + std::to_string(stride) + " padding " + std::to_string(padding));
  if (bias && (bias->rank() != 1 || bias->dim(0) != O))
    throw ShapeError("conv2d bias must have one value per output channel");

  auto out = Tensor::zeros({N, O, Ho, Wo});
  out->requires_grad = input->requires_grad || kernel->requires_grad ||
                       (bias && bias->requires_grad);

  const int ckk = C * Kh * Kw;
  const int span = Ho * Wo;
  std::vector<float> cols(static_cast<size_t>(ckk) * span);
  MapCM wmat(kernel->data.data(), O, ckk);
  for (int n = 0; n < N; ++n) {
    im2col(input->data.data() + static_cast<int64_t>(n) * C * H * W, C, H, W, Kh, Kw, stride,
           padding, Ho, Wo, cols.data());
    MapM omat(out->data.data() + static_cast<int64_t>(n) * O * span, O, span);
    omat.noalias() = wmat * MapCM(cols.data(), ckk, span);
    if (bias) omat.colwise() += MapCV(bias->data.data(), O);
  }

  if (!out->requires_grad || !recording_) return out;
  record(out, [input, kernel, bias, out, stride, padding, N, C, H, W, O, Kh, Kw, Ho, Wo, ckk,
               span]() {
    std::vector<float> cols(static_cast<size_t>(ckk) * span);
    MapCM wmat(kernel->data.data(), O, ckk);
    if (kernel->requires_grad) kernel->ensure_grad();
    if (input->requires_grad) input->ensure_grad();
    if (bias && bias->requires_grad) bias->ensure_grad();
    for (int n = 0; n < N; ++n) {
      MapCM dout(out->grad.data() + static_cast<int64_t>(n) * O * span, O, span);
      if (bias && bias->requires_grad) {
        MapV db(bias->grad.data(), O);
        db.noalias() += dout.rowwise().sum();
      }
      if (kernel->requires_grad) {
        im2col(input->data.data() + static_cast<int64_t>(n) * C * H * W, C, H, W, Kh, Kw,
               stride, padding, Ho, Wo, cols.data());
        MapM dw(kernel->grad.data(), O, ckk);
        dw.noalias() += dout * MapCM(cols.data(), ckk, span).transpose();
      }
      if (input->requires_grad) {
        MapM dcols(cols.data(), ckk, span);
        dcols.noalias() = wmat.transpose() * dout;
        col2im_add(cols.data(), C, H, W, Kh, Kw, stride, padding, Ho, Wo,
                   input->grad.data() + static_cast<int64_t>(n) * C * H * W);
      }
    }
  });
  return out;
}

TensorPtr Tape::batch_norm2d(const TensorPtr& input, const TensorPtr& scale,
                             const TensorPtr& shift, const TensorPtr& running_mean,
                             const TensorPtr& running_var, bool training, float momentum,
                             float epsilon) {
  if (input->rank() != 4) throw ShapeError("batch_norm2d expects NCHW input");
  const int N = input->dim(0), C = input->dim(1), H = input->dim(2), W = input->dim(3);
  if (scale->size() != C || shift->size() != C || running_mean->size() != C ||
      running_var->size() != C)
    throw ShapeError("batch_norm2d parameter size must equal channel count");
  if (epsilon <= 0.0f) throw ShapeError("batch_norm2d epsilon must be positive");
  const int64_t m = static_cast<int64_t>(N) * H * W;
  if (training && m < 2)
    throw NumericError("batch_norm2d train mode needs at least two values per channel "
                       "(degenerate variance)");

  auto out = Tensor::zeros(input->dims);
  out->requires_grad = input->requires_grad || scale->requires_grad || shift->requires_grad;

  const int64_t hw = static_cast<int64_t>(H) * W;
  auto mean = std::make_shared<std::vector<float>>(static_cast<size_t>(C));
  auto invstd = std::make_shared<std::vector<float>>(static_cast<size_t>(C));

  if (training) {
    for (int c = 0; c < C; ++c) {
      double sum = 0.0, sumsq = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* x = input->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          sum += x[i];
          sumsq += static_cast<double>(x[i]) * x[i];
        }
      }
      double mu = sum / static_cast<double>(m);
      double var = sumsq / static_cast<double>(m) - mu * mu;
      if (var < 0.0) var = 0.0;  // guard the subtraction form against rounding
      (*mean)[c] = static_cast<float>(mu);
      (*invstd)[c] = static_cast<float>(1.0 / std::sqrt(var + epsilon));
      running_mean->data[c] =
          momentum * running_mean->data[c] + (1.0f - momentum) * static_cast<float>(mu);
      running_var->data[c] =
          momentum * running_var->data[c] + (1.0f - momentum) * static_cast<float>(var);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      (*mean)[c] = running_mean->data[c];
      (*invstd)[c] = 1.0f / std::sqrt(running_var->data[c] + epsilon);
    }
  }

  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const float* x = input->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
      float* y = out->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
      const float mu = (*mean)[c], is = (*invstd)[c];
      const float g = scale->data[c], b = shift->data[c];
      for (int64_t i = 0; i < hw; ++i) y[i] = (x[i] - mu) * is * g + b;
    }
  }

  if (!out->requires_grad || !recording_) return out;
  record(out, [input, scale, shift, out, mean, invstd, training, N, C, hw, m]() {
    if (input->requires_grad) input->ensure_grad();
    if (scale->requires_grad) scale->ensure_grad();
    if (shift->requires_grad) shift->ensure_grad();
    for (int c = 0; c < C; ++c) {
      const float mu = (*mean)[c], is = (*invstd)[c];
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* x = input->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
        const float* dy = out->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) {
          sum_dy += dy[i];
          sum_dy_xhat += static_cast<double>(dy[i]) * ((x[i] - mu) * is);
        }
      }
      if (scale->requires_grad) scale->grad[c] += static_cast<float>(sum_dy_xhat);
      if (shift->requires_grad) shift->grad[c] += static_cast<float>(sum_dy);
      if (!input->requires_grad) continue;
      const float g = scale->data[c];
      if (training) {
        const float inv_m = 1.0f / static_cast<float>(m);
        const float k1 = static_cast<float>(sum_dy) * inv_m;
        const float k2 = static_cast<float>(sum_dy_xhat) * inv_m;
        for (int n = 0; n < N; ++n) {
          const float* x = input->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
          const float* dy = out->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
          float* dx = input->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
          for (int64_t i = 0; i < hw; ++i) {
            float xhat = (x[i] - mu) * is;
            dx[i] += g * is * (dy[i] - k1 - xhat * k2);
          }
        }
      } else {
        for (int n = 0; n < N; ++n) {
          const float* dy = out->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
          float* dx = input->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
          for (int64_t i = 0; i < hw; ++i) dx[i] += dy[i] * g * is;
        }
      }
    }
  });
  return out;
}

TensorPtr Tape::relu(const TensorPtr& input) {
  auto out = Tensor::zeros(input->dims);
  out->requires_grad = input->requires_grad;
  for (int64_t i = 0; i < input->size(); ++i)
    out->data[static_cast<size_t>(i)] = std::max(0.0f, input->data[static_cast<size_t>(i)]);
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out]() {
    input->ensure_grad();
    for (size_t i = 0; i < input->data.size(); ++i)
      if (out->data[i] > 0.0f) input->grad[i] += out->grad[i];
  });
  return out;
}

TensorPtr Tape::residual_add(const TensorPtr& a, const TensorPtr& b) {
  if (!a->same_dims(*b))
    throw ShapeError("residual_add dims differ: " + dims_to_string(a->dims) + " vs " +
                     dims_to_string(b->dims));
  auto out = Tensor::zeros(a->dims);
  out->requires_grad = a->requires_grad || b->requires_grad;
  for (size_t i = 0; i < a->data.size(); ++i) out->data[i] = a->data[i] + b->data[i];
  if (!out->requires_grad || !recording_) return out;
  record(out, [a, b, out]() {
    if (a->requires_grad) {
      a->ensure_grad();
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i];
    }
  });
  return out;
}

TensorPtr Tape::global_average_pool(const TensorPtr& input) {
  if (input->rank() != 4) throw ShapeError("global_average_pool expects NCHW input");
  const int N = input->dim(0), C = input->dim(1), H = input->dim(2), W = input->dim(3);
  const int64_t hw = static_cast<int64_t>(H) * W;
  auto out = Tensor::zeros({N, C});
  out->requires_grad = input->requires_grad;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const float* x = input->data.data() + (static_cast<int64_t>(n) * C + c) * hw;
      double sum = 0.0;
      for (int64_t i = 0; i < hw; ++i) sum += x[i];
      out->data[static_cast<size_t>(n) * C + c] =
          static_cast<float>(sum / static_cast<double>(hw));
    }
  }
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out, N, C, hw]() {
    input->ensure_grad();
    const float inv = 1.0f / static_cast<float>(hw);
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const float g = out->grad[static_cast<size_t>(n) * C + c] * inv;
        float* dx = input->grad.data() + (static_cast<int64_t>(n) * C + c) * hw;
        for (int64_t i = 0; i < hw; ++i) dx[i] += g;
      }
    }
  });
  return out;
}

TensorPtr Tape::affine(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias) {
  if (input->rank() != 2 || weight->rank() != 2 || bias->rank() != 1)
    throw ShapeError("affine expects input (N,F), weight (F,M), bias (M)");
  const int N = input->dim(0), F = input->dim(1);
  const int M = weight->dim(1);
  if (weight->dim(0) != F || bias->dim(0) != M)
    throw ShapeError("affine inner dims disagree: input " + dims_to_string(input->dims) +
                     ", weight " + dims_to_string(weight->dims) + ", bias " +
                     dims_to_string(bias->dims));
  auto out = Tensor::zeros({N, M});
  out->requires_grad = input->requires_grad || weight->requires_grad || bias->requires_grad;
  {
    MapCM x(input->data.data(), N, F);
    MapCM w(weight->data.data(), F, M);
    MapM y(out->data.data(), N, M);
    y.noalias() = x * w;
    y.rowwise() += MapCV(bias->data.data(), M).transpose();
  }
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, weight, bias, out, N, F, M]() {
    MapCM dy(out->grad.data(), N, M);
    if (input->requires_grad) {
      input->ensure_grad();
      MapM dx(input->grad.data(), N, F);
      dx.noalias() += dy * MapCM(weight->data.data(), F, M).transpose();
    }
    if (weight->requires_grad) {
      weight->ensure_grad();
      MapM dw(weight->grad.data(), F, M);
      dw.noalias() += MapCM(input->data.data(), N, F).transpose() * dy;
    }
    if (bias->requires_grad) {
      bias->ensure_grad();
      MapV db(bias->grad.data(), M);
      db.noalias() += dy.colwise().sum().transpose();
    }
  });
  return out;
}

TensorPtr Tape::sigmoid(const TensorPtr& input) {
  auto out = Tensor::zeros(input->dims);
  out->requires_grad = input->requires_grad;
  // Clamp the saturated side one ulp inside so the output stays in the open
  // interval (0,1) even where float rounding would reach 1.
  const float one_minus = std::nextafter(1.0f, 0.0f);
  for (size_t i = 0; i < input->data.size(); ++i) {
    const float x = input->data[i];
    if (x >= 0.0f) {
      out->data[i] = std::min(one_minus, 1.0f / (1.0f + std::exp(-x)));
    } else {
      const float e = std::exp(x);
      out->data[i] = e / (1.0f + e);
    }
  }
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out]() {
    input->ensure_grad();
    for (size_t i = 0; i < input->grad.size(); ++i) {
      const float y = out->data[i];
      input->grad[i] += out->grad[i] * y * (1.0f - y);
    }
  });
  return out;
}

TensorPtr Tape::dropout(const TensorPtr& input, float rate, bool training, Rng& rng) {
  if (rate < 0.0f || rate >= 1.0f) throw ShapeError("dropout rate must be in [0,1)");
  if (!training || rate == 0.0f) return input;
  auto out = Tensor::zeros(input->dims);
  out->requires_grad = input->requires_grad;
  auto mask = std::make_shared<std::vector<float>>(input->data.size());
  const float keep_scale = 1.0f / (1.0f - rate);
  for (size_t i = 0; i < input->data.size(); ++i) {
    (*mask)[i] = rng.bernoulli(rate) ? 0.0f : keep_scale;
    out->data[i] = input->data[i] * (*mask)[i];
  }
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out, mask]() {
    input->ensure_grad();
    for (size_t i = 0; i < input->grad.size(); ++i) input->grad[i] += out->grad[i] * (*mask)[i];
  });
  return out;
}

TensorPtr Tape::multiply(const TensorPtr& a, const TensorPtr& b) {
  if (!a->same_dims(*b))
    throw ShapeError("multiply dims differ: " + dims_to_string(a->dims) + " vs " +
                     dims_to_string(b->dims));
  auto out = Tensor::zeros(a->dims);
  out->requires_grad = a->requires_grad || b->requires_grad;
  for (size_t i = 0; i < a->data.size(); ++i) out->data[i] = a->data[i] * b->data[i];
  if (!out->requires_grad || !recording_) return out;
  record(out, [a, b, out]() {
    if (a->requires_grad) {
      a->ensure_grad();
      for (size_t i = 0; i < a->grad.size(); ++i) a->grad[i] += out->grad[i] * b->data[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (size_t i = 0; i < b->grad.size(); ++i) b->grad[i] += out->grad[i] * a->data[i];
    }
  });
  return out;
}

TensorPtr Tape::reduce_sum(const TensorPtr& input) {
  auto out = Tensor::zeros({1});
  out->requires_grad = input->requires_grad;
  double sum = 0.0;
  for (float v : input->data) sum += v;
  out->data[0] = static_cast<float>(sum);
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out]() {
    input->ensure_grad();
    const float g = out->grad[0];
    for (size_t i = 0; i < input->grad.size(); ++i) input->grad[i] += g;
  });
  return out;
}

TensorPtr Tape::select_scalar(const TensorPtr& input, int64_t flat_index) {
  if (flat_index < 0 || flat_index >= input->size())
    throw ShapeError("select_scalar index out of range");
  auto out = Tensor::zeros({1});
  out->requires_grad = input->requires_grad;
  out->data[0] = input->data[static_cast<size_t>(flat_index)];
  if (!out->requires_grad || !recording_) return out;
  record(out, [input, out, flat_index]() {
    input->ensure_grad();
    input->grad[static_cast<size_t>(flat_index)] += out->grad[0];
  });
  return out;
}

}  // namespace attrikit
