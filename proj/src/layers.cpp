#include "genreforge/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

namespace {

void require_rank3(const Tensor& x, const char* who) {
    if (x.rank() != 3) throw ShapeError(std::string(who) + ": expected [b, c, t], got " +
                                        shape_str(x.shape));
}

}  // namespace

void he_uniform_fill(Tensor& t, std::size_t fan_in, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : t.data) v = dist(rng);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(int in_channels, int out_channels, int kernel)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      pad_left_((kernel - 1) / 2),
      pad_right_(kernel - 1 - (kernel - 1) / 2) {
    if (in_channels < 1 || out_channels < 1 || kernel < 1)
        throw ConfigError("conv1d: channels and kernel must be >= 1");
    params_.weights = Tensor({std::size_t(out_channels), std::size_t(in_channels),
                              std::size_t(kernel)});
    params_.bias = Tensor({std::size_t(out_channels)});
    params_.grad_weights = Tensor(params_.weights.shape);
    params_.grad_bias = Tensor(params_.bias.shape);
}

void Conv1d::init(std::mt19937_64& rng) {
    he_uniform_fill(params_.weights, std::size_t(in_channels_) * kernel_, rng);
    params_.bias.zero();
}

Tensor Conv1d::forward(const Tensor& x, bool) {
    require_rank3(x, "conv1d");
    if (x.dim(1) != std::size_t(in_channels_))
        throw ShapeError("conv1d " + name_ + ": expected " + std::to_string(in_channels_) +
                         " input channels, got " + std::to_string(x.dim(1)));

    const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
    const std::size_t Tp = T + kernel_ - 1;

    padded_ = Tensor({B, C, Tp});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const double* src = x.data.data() + (b * C + c) * T;
            double* dst = padded_.data.data() + (b * C + c) * Tp + pad_left_;
            std::copy(src, src + T, dst);
        }

    const std::size_t O = out_channels_;
    Tensor y({B, O, T});
    const double* w = params_.weights.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < O; ++o) {
            double* yrow = y.data.data() + (b * O + o) * T;
            std::fill(yrow, yrow + T, params_.bias.data[o]);
            for (std::size_t c = 0; c < C; ++c) {
                const double* prow = padded_.data.data() + (b * C + c) * Tp;
                const double* wrow = w + (o * C + c) * kernel_;
                for (int j = 0; j < kernel_; ++j) {
                    const double wj = wrow[j];
                    const double* xs = prow + j;
                    for (std::size_t t = 0; t < T; ++t) yrow[t] += wj * xs[t];
                }
            }
        }
    }
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const std::size_t B = padded_.dim(0), C = padded_.dim(1), Tp = padded_.dim(2);
    const std::size_t T = Tp - kernel_ + 1;
    const std::size_t O = out_channels_;
    if (grad_out.shape != std::vector<std::size_t>{B, O, T})
        throw ShapeError("conv1d backward: gradient shape " + shape_str(grad_out.shape) +
                         " does not match forward output");

    Tensor dpad({B, C, Tp});
    double* dw = params_.grad_weights.data.data();
    const double* w = params_.weights.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t o = 0; o < O; ++o) {
            const double* gyrow = grad_out.data.data() + (b * O + o) * T;
            double gb = 0.0;
            for (std::size_t t = 0; t < T; ++t) gb += gyrow[t];
            params_.grad_bias.data[o] += gb;
            for (std::size_t c = 0; c < C; ++c) {
                const double* prow = padded_.data.data() + (b * C + c) * Tp;
                double* dprow = dpad.data.data() + (b * C + c) * Tp;
                const std::size_t wbase = (o * C + c) * kernel_;
                for (int j = 0; j < kernel_; ++j) {
                    const double* xs = prow + j;
                    double* dxs = dprow + j;
                    const double wj = w[wbase + j];
                    double acc = 0.0;
                    for (std::size_t t = 0; t < T; ++t) {
                        acc += gyrow[t] * xs[t];
                        dxs[t] += wj * gyrow[t];
                    }
                    dw[wbase + j] += acc;
                }
            }
        }
    }

    Tensor dx({B, C, T});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) {
            const double* src = dpad.data.data() + (b * C + c) * Tp + pad_left_;
            double* dst = dx.data.data() + (b * C + c) * T;
            std::copy(src, src + T, dst);
        }
    return dx;
}

void Conv1d::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weights", &params_.weights, &params_.grad_weights, true});
    out.push_back({name_ + ".bias", &params_.bias, &params_.grad_bias, false});
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_features, int out_features)
    : in_features_(in_features), out_features_(out_features) {
    if (in_features < 1 || out_features < 1)
        throw ConfigError("dense: feature counts must be >= 1");
    params_.weights = Tensor({std::size_t(out_features), std::size_t(in_features)});
    params_.bias = Tensor({std::size_t(out_features)});
    params_.grad_weights = Tensor(params_.weights.shape);
    params_.grad_bias = Tensor(params_.bias.shape);
}

void Dense::init(std::mt19937_64& rng) {
    he_uniform_fill(params_.weights, std::size_t(in_features_), rng);
    params_.bias.zero();
}

Tensor Dense::forward(const Tensor& x, bool) {
    if (x.rank() != 2 || x.dim(1) != std::size_t(in_features_))
        throw ShapeError("dense " + name_ + ": expected [b, " + std::to_string(in_features_) +
                         "], got " + shape_str(x.shape));
    input_ = x;
    const std::size_t B = x.dim(0), N = in_features_, M = out_features_;
    Tensor y({B, M});
    const double* w = params_.weights.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        const double* xrow = x.data.data() + b * N;
        double* yrow = y.data.data() + b * M;
        for (std::size_t m = 0; m < M; ++m) {
            const double* wrow = w + m * N;
            double acc = params_.bias.data[m];
            for (std::size_t n = 0; n < N; ++n) acc += wrow[n] * xrow[n];
            yrow[m] = acc;
        }
    }
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const std::size_t B = input_.dim(0), N = in_features_, M = out_features_;
    if (grad_out.shape != std::vector<std::size_t>{B, M})
        throw ShapeError("dense backward: gradient shape mismatch");

    Tensor dx({B, N});
    double* dw = params_.grad_weights.data.data();
    const double* w = params_.weights.data.data();
    for (std::size_t b = 0; b < B; ++b) {
        const double* gyrow = grad_out.data.data() + b * M;
        const double* xrow = input_.data.data() + b * N;
        double* dxrow = dx.data.data() + b * N;
        for (std::size_t m = 0; m < M; ++m) {
            const double g = gyrow[m];
            if (g == 0.0) continue;
            params_.grad_bias.data[m] += g;
            double* dwrow = dw + m * N;
            const double* wrow = w + m * N;
            for (std::size_t n = 0; n < N; ++n) {
                dwrow[n] += g * xrow[n];
                dxrow[n] += g * wrow[n];
            }
        }
    }
    return dx;
}

void Dense::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weights", &params_.weights, &params_.grad_weights, true});
    out.push_back({name_ + ".bias", &params_.bias, &params_.grad_bias, false});
}

// ------------------------------------------------------------------ Relu

Tensor Relu::forward(const Tensor& x, bool) {
    input_ = x;
    Tensor y = x;
    for (double& v : y.data) v = std::max(0.0, v);
    return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
    if (!grad_out.same_shape(input_)) throw ShapeError("relu backward: shape mismatch");
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (input_.data[i] <= 0.0) dx.data[i] = 0.0;  // subgradient 0 at the kink
    return dx;
}

// ------------------------------------------------------------- MaxPool1d

MaxPool1d::MaxPool1d(int pool) : pool_(pool) {
    if (pool < 1) throw ConfigError("maxpool1d: pool must be >= 1");
}

Tensor MaxPool1d::forward(const Tensor& x, bool) {
    require_rank3(x, "maxpool1d");
    const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
    if (std::size_t(pool_) > T)
        throw ShapeError("maxpool1d: pool " + std::to_string(pool_) + " exceeds time length " +
                         std::to_string(T));
    const std::size_t To = T / pool_;
    in_shape_ = x.shape;
    Tensor y({B, C, To});
    argmax_.resize(y.numel());
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double* xrow = x.data.data() + bc * T;
        double* yrow = y.data.data() + bc * To;
        std::size_t* arow = argmax_.data() + bc * To;
        for (std::size_t t = 0; t < To; ++t) {
            const std::size_t start = t * pool_;
            double best = xrow[start];
            std::size_t best_i = start;
            for (int j = 1; j < pool_; ++j)
                if (xrow[start + j] > best) {  // first maximum wins ties
                    best = xrow[start + j];
                    best_i = start + j;
                }
            yrow[t] = best;
            arow[t] = best_i;
        }
    }
    return y;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    const std::size_t B = in_shape_[0], C = in_shape_[1], T = in_shape_[2];
    const std::size_t To = T / pool_;
    if (grad_out.shape != std::vector<std::size_t>{B, C, To})
        throw ShapeError("maxpool1d backward: shape mismatch");
    Tensor dx({B, C, T});
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double* gyrow = grad_out.data.data() + bc * To;
        double* dxrow = dx.data.data() + bc * T;
        const std::size_t* arow = argmax_.data() + bc * To;
        for (std::size_t t = 0; t < To; ++t) dxrow[arow[t]] += gyrow[t];
    }
    return dx;
}

// -------------------------------------------------------- GlobalMaxPool1d

Tensor GlobalMaxPool1d::forward(const Tensor& x, bool) {
    require_rank3(x, "globalmax");
    const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2);
    in_shape_ = x.shape;
    Tensor y({B, C});
    argmax_.resize(B * C);
    for (std::size_t bc = 0; bc < B * C; ++bc) {
        const double* xrow = x.data.data() + bc * T;
        double best = xrow[0];
        std::size_t best_i = 0;
        for (std::size_t t = 1; t < T; ++t)
            if (xrow[t] > best) {
                best = xrow[t];
                best_i = t;
            }
        y.data[bc] = best;
        argmax_[bc] = best_i;
    }
    return y;
}

Tensor GlobalMaxPool1d::backward(const Tensor& grad_out) {
    const std::size_t B = in_shape_[0], C = in_shape_[1], T = in_shape_[2];
    if (grad_out.shape != std::vector<std::size_t>{B, C})
        throw ShapeError("globalmax backward: shape mismatch");
    Tensor dx({B, C, T});
    for (std::size_t bc = 0; bc < B * C; ++bc)
        dx.data[bc * T + argmax_[bc]] = grad_out.data[bc];
    return dx;
}

// ------------------------------------------------------------ BatchNorm1d

BatchNorm1d::BatchNorm1d(int channels) : channels_(channels) {
    if (channels < 1) throw ConfigError("batchnorm: channels must be >= 1");
    const std::vector<std::size_t> s{std::size_t(channels)};
    state_.gamma = Tensor(s);
    std::fill(state_.gamma.data.begin(), state_.gamma.data.end(), 1.0);
    state_.beta = Tensor(s);
    state_.grad_gamma = Tensor(s);
    state_.grad_beta = Tensor(s);
    state_.running_mean = Tensor(s);
    state_.running_var = Tensor(s);
    std::fill(state_.running_var.data.begin(), state_.running_var.data.end(), 1.0);
}

Tensor BatchNorm1d::forward(const Tensor& x, bool training) {
    if (x.rank() != 2 && x.rank() != 3)
        throw ShapeError("batchnorm: expected [b, c] or [b, c, t], got " + shape_str(x.shape));
    if (x.dim(1) != std::size_t(channels_))
        throw ShapeError("batchnorm " + name_ + ": expected " + std::to_string(channels_) +
                         " channels, got " + std::to_string(x.dim(1)));

    const std::size_t B = x.dim(0), C = x.dim(1), T = x.rank() == 3 ? x.dim(2) : 1;
    const std::size_t N = B * T;
    Tensor y(x.shape);

    if (!training) {
        trained_forward_ = false;
        for (std::size_t c = 0; c < C; ++c) {
            const double scale =
                state_.gamma.data[c] / std::sqrt(state_.running_var.data[c] + state_.epsilon);
            const double shift = state_.beta.data[c] - scale * state_.running_mean.data[c];
            for (std::size_t b = 0; b < B; ++b) {
                const double* xrow = x.data.data() + (b * C + c) * T;
                double* yrow = y.data.data() + (b * C + c) * T;
                for (std::size_t t = 0; t < T; ++t) yrow[t] = scale * xrow[t] + shift;
            }
        }
        return y;
    }

    if (N < 2)
        throw std::invalid_argument("batchnorm: training needs more than one value per channel");

    trained_forward_ = true;
    xhat_ = Tensor(x.shape);
    inv_std_.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double mean = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double* xrow = x.data.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t) mean += xrow[t];
        }
        mean /= static_cast<double>(N);
        double var = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double* xrow = x.data.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t) {
                const double d = xrow[t] - mean;
                var += d * d;
            }
        }
        var /= static_cast<double>(N);

        const double istd = 1.0 / std::sqrt(var + state_.epsilon);
        inv_std_[c] = istd;
        const double g = state_.gamma.data[c], be = state_.beta.data[c];
        for (std::size_t b = 0; b < B; ++b) {
            const double* xrow = x.data.data() + (b * C + c) * T;
            double* hrow = xhat_.data.data() + (b * C + c) * T;
            double* yrow = y.data.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t) {
                const double h = (xrow[t] - mean) * istd;
                hrow[t] = h;
                yrow[t] = g * h + be;
            }
        }
        state_.running_mean.data[c] =
            state_.momentum * state_.running_mean.data[c] + (1.0 - state_.momentum) * mean;
        state_.running_var.data[c] =
            state_.momentum * state_.running_var.data[c] + (1.0 - state_.momentum) * var;
    }
    return y;
}

Tensor BatchNorm1d::backward(const Tensor& grad_out) {
    if (!trained_forward_)
        throw std::logic_error("batchnorm backward: requires a training-mode forward");
    if (!grad_out.same_shape(xhat_)) throw ShapeError("batchnorm backward: shape mismatch");

    const std::size_t B = xhat_.dim(0), C = xhat_.dim(1),
                      T = xhat_.rank() == 3 ? xhat_.dim(2) : 1;
    const auto N = static_cast<double>(B * T);
    Tensor dx(xhat_.shape);

    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double* gy = grad_out.data.data() + (b * C + c) * T;
            const double* h = xhat_.data.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t) {
                sum_dy += gy[t];
                sum_dy_xhat += gy[t] * h[t];
            }
        }
        state_.grad_beta.data[c] += sum_dy;
        state_.grad_gamma.data[c] += sum_dy_xhat;

        const double k = state_.gamma.data[c] * inv_std_[c] / N;
        for (std::size_t b = 0; b < B; ++b) {
            const double* gy = grad_out.data.data() + (b * C + c) * T;
            const double* h = xhat_.data.data() + (b * C + c) * T;
            double* dxrow = dx.data.data() + (b * C + c) * T;
            for (std::size_t t = 0; t < T; ++t)
                dxrow[t] = k * (N * gy[t] - sum_dy - h[t] * sum_dy_xhat);
        }
    }
    return dx;
}

void BatchNorm1d::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".gamma", &state_.gamma, &state_.grad_gamma, false});
    out.push_back({name_ + ".beta", &state_.beta, &state_.grad_beta, false});
}

void BatchNorm1d::collect_buffers(std::vector<Tensor*>& out) {
    out.push_back(&state_.running_mean);
    out.push_back(&state_.running_var);
}

// --------------------------------------------------------------- Dropout

Dropout::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout: rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, bool training) {
    if (!training || rate_ == 0.0) {
        masked_ = false;
        return x;
    }
    masked_ = true;
    mask_.resize(x.numel());
    const double keep_scale = 1.0 / (1.0 - rate_);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Tensor y = x;
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = dist(rng_) < rate_ ? 0.0 : keep_scale;
        y.data[i] *= mask_[i];
    }
    return y;
}

Tensor Dropout::backward(const Tensor& grad_out) {
    if (!masked_) return grad_out;
    if (grad_out.numel() != mask_.size()) throw ShapeError("dropout backward: shape mismatch");
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < mask_.size(); ++i) dx.data[i] *= mask_[i];
    return dx;
}

// ------------------------------------------------------ loss and glue ops

Tensor softmax_rows(const Tensor& logits) {
    if (logits.rank() != 2) throw ShapeError("softmax: expected [b, k]");
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    Tensor p(logits.shape);
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = logits.data.data() + b * K;
        double* prow = p.data.data() + b * K;
        const double m = *std::max_element(row, row + K);
        double z = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            prow[k] = std::exp(row[k] - m);
            z += prow[k];
        }
        for (std::size_t k = 0; k < K; ++k) prow[k] /= z;
    }
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    if (logits.rank() != 2) throw ShapeError("softmax_cross_entropy: expected [b, k] logits");
    const std::size_t B = logits.dim(0), K = logits.dim(1);
    if (labels.size() != B) throw ShapeError("softmax_cross_entropy: label count mismatch");
    for (int y : labels)
        if (y < 0 || std::size_t(y) >= K)
            throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(K) + ")");

    Tensor grad = softmax_rows(logits);
    double loss = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        double* prow = grad.data.data() + b * K;
        loss -= std::log(std::max(prow[labels[b]], 1e-300));
        prow[labels[b]] -= 1.0;
    }
    const double inv_b = 1.0 / static_cast<double>(B);
    for (double& v : grad.data) v *= inv_b;
    return {loss * inv_b, std::move(grad)};
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3) throw ShapeError("concat: expected rank-3 tensors");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        throw ShapeError("concat: batch/time mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    const std::size_t B = a.dim(0), C1 = a.dim(1), C2 = b.dim(1), T = a.dim(2);
    Tensor y({B, C1 + C2, T});
    for (std::size_t bb = 0; bb < B; ++bb) {
        std::copy(a.data.data() + bb * C1 * T, a.data.data() + (bb + 1) * C1 * T,
                  y.data.data() + bb * (C1 + C2) * T);
        std::copy(b.data.data() + bb * C2 * T, b.data.data() + (bb + 1) * C2 * T,
                  y.data.data() + bb * (C1 + C2) * T + C1 * T);
    }
    return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& grad, std::size_t c1) {
    if (grad.rank() != 3 || grad.dim(1) < c1) throw ShapeError("split: bad channel split");
    const std::size_t B = grad.dim(0), C = grad.dim(1), T = grad.dim(2), C2 = C - c1;
    Tensor a({B, c1, T}), b({B, C2, T});
    for (std::size_t bb = 0; bb < B; ++bb) {
        std::copy(grad.data.data() + bb * C * T, grad.data.data() + bb * C * T + c1 * T,
                  a.data.data() + bb * c1 * T);
        std::copy(grad.data.data() + bb * C * T + c1 * T, grad.data.data() + (bb + 1) * C * T,
                  b.data.data() + bb * C2 * T);
    }
    return {std::move(a), std::move(b)};
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw ShapeError("add: shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    Tensor y = a;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
    return y;
}

}  // namespace genreforge
