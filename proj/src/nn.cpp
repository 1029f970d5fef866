#include "hqfnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hqfnn {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

RealTensor RealTensor::zeros(std::vector<std::size_t> shape) {
    RealTensor t;
    t.values.assign(shape_product(shape), 0.0);
    t.shape = std::move(shape);
    return t;
}

std::size_t RealTensor::size() const { return values.size(); }

void RealTensor::validate() const {
    require(values.size() == shape_product(shape), "tensor values do not match its shape");
    require(grad.empty() || grad.size() == values.size(), "tensor grad size mismatch");
}

// -- dense -------------------------------------------------------------------

RealTensor dense_forward(const RealTensor& w, const RealTensor& b, const RealTensor& x) {
    require(w.shape.size() == 2 && b.shape.size() == 1 && x.shape.size() == 2,
            "dense expects w: out x in, b: out, x: batch x in");
    const std::size_t out = w.shape[0], in = w.shape[1], batch = x.shape[0];
    require(b.shape[0] == out && x.shape[1] == in, "dense shape mismatch");

    RealTensor y = RealTensor::zeros({batch, out});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* xr = x.values.data() + bi * in;
        double* yr = y.values.data() + bi * out;
        for (std::size_t o = 0; o < out; ++o) {
            const double* wr = w.values.data() + o * in;
            double acc = b.values[o];
            for (std::size_t i = 0; i < in; ++i) acc += wr[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

DenseGrads dense_backward(const RealTensor& w, const RealTensor& x, const RealTensor& upstream) {
    const std::size_t out = w.shape[0], in = w.shape[1], batch = x.shape[0];
    require(upstream.shape.size() == 2 && upstream.shape[0] == batch && upstream.shape[1] == out,
            "dense upstream shape mismatch");

    DenseGrads g;
    g.dw = RealTensor::zeros({out, in});
    g.db = RealTensor::zeros({out});
    g.dx = RealTensor::zeros({batch, in});
    for (std::size_t bi = 0; bi < batch; ++bi) {
        const double* xr = x.values.data() + bi * in;
        const double* ur = upstream.values.data() + bi * out;
        double* dxr = g.dx.values.data() + bi * in;
        for (std::size_t o = 0; o < out; ++o) {
            const double u = ur[o];
            g.db.values[o] += u;
            if (u == 0.0) continue;
            double* dwr = g.dw.values.data() + o * in;
            const double* wr = w.values.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) {
                dwr[i] += u * xr[i];
                dxr[i] += u * wr[i];
            }
        }
    }
    return g;
}

// -- relu --------------------------------------------------------------------

RealTensor relu(const RealTensor& x) {
    RealTensor y = x;
    y.grad.clear();
    for (double& v : y.values) v = v > 0.0 ? v : 0.0;
    return y;
}

RealTensor relu_backward(const RealTensor& x, const RealTensor& upstream) {
    require(upstream.values.size() == x.values.size(), "relu upstream shape mismatch");
    RealTensor dx = RealTensor::zeros(x.shape);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        dx.values[i] = x.values[i] > 0.0 ? upstream.values[i] : 0.0;
    }
    return dx;
}

// -- conv --------------------------------------------------------------------

RealTensor conv2d_forward(const RealTensor& kernels, const RealTensor& x) {
    require(kernels.shape.size() == 4 && x.shape.size() == 4,
            "conv expects kernels: outC x inC x kh x kw, x: batch x inC x H x W");
    const std::size_t oc = kernels.shape[0], ic = kernels.shape[1];
    const std::size_t kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t batch = x.shape[0], h = x.shape[2], w = x.shape[3];
    require(x.shape[1] == ic, "conv channel mismatch");
    require(h >= kh && w >= kw, "conv input smaller than the kernel");
    const std::size_t oh = h - kh + 1, ow = w - kw + 1;

    RealTensor y = RealTensor::zeros({batch, oc, oh, ow});
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            double* yp = y.values.data() + ((b * oc + o) * oh) * ow;
            for (std::size_t c = 0; c < ic; ++c) {
                const double* xp = x.values.data() + ((b * ic + c) * h) * w;
                const double* kp = kernels.values.data() + ((o * ic + c) * kh) * kw;
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t s = 0; s < ow; ++s) {
                        double acc = 0.0;
                        for (std::size_t u = 0; u < kh; ++u) {
                            const double* xrow = xp + (r + u) * w + s;
                            const double* krow = kp + u * kw;
                            for (std::size_t v = 0; v < kw; ++v) acc += krow[v] * xrow[v];
                        }
                        yp[r * ow + s] += acc;
                    }
                }
            }
        }
    }
    return y;
}

ConvGrads conv2d_backward(const RealTensor& kernels, const RealTensor& x,
                          const RealTensor& upstream) {
    const std::size_t oc = kernels.shape[0], ic = kernels.shape[1];
    const std::size_t kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t batch = x.shape[0], h = x.shape[2], w = x.shape[3];
    const std::size_t oh = h - kh + 1, ow = w - kw + 1;
    require(upstream.shape.size() == 4 && upstream.shape[0] == batch &&
                upstream.shape[1] == oc && upstream.shape[2] == oh && upstream.shape[3] == ow,
            "conv upstream shape mismatch");

    ConvGrads g;
    g.dk = RealTensor::zeros(kernels.shape);
    g.dx = RealTensor::zeros(x.shape);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            const double* up = upstream.values.data() + ((b * oc + o) * oh) * ow;
            for (std::size_t c = 0; c < ic; ++c) {
                const double* xp = x.values.data() + ((b * ic + c) * h) * w;
                double* dxp = g.dx.values.data() + ((b * ic + c) * h) * w;
                const double* kp = kernels.values.data() + ((o * ic + c) * kh) * kw;
                double* dkp = g.dk.values.data() + ((o * ic + c) * kh) * kw;
                for (std::size_t r = 0; r < oh; ++r) {
                    for (std::size_t s = 0; s < ow; ++s) {
                        const double u = up[r * ow + s];
                        if (u == 0.0) continue;
                        for (std::size_t p = 0; p < kh; ++p) {
                            const std::size_t row = (r + p) * w + s;
                            for (std::size_t q = 0; q < kw; ++q) {
                                dkp[p * kw + q] += u * xp[row + q];
                                dxp[row + q] += u * kp[p * kw + q];
                            }
                        }
                    }
                }
            }
        }
    }
    return g;
}

// -- pooling -----------------------------------------------------------------

PoolResult maxpool2(const RealTensor& x) {
    require(x.shape.size() == 4, "maxpool expects batch x C x H x W");
    const std::size_t batch = x.shape[0], ch = x.shape[1], h = x.shape[2], w = x.shape[3];
    require(h % 2 == 0 && w % 2 == 0, "maxpool needs even spatial dims");
    const std::size_t oh = h / 2, ow = w / 2;

    PoolResult res;
    res.out = RealTensor::zeros({batch, ch, oh, ow});
    res.argmax.resize(res.out.size());
    std::size_t oi = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t plane = (b * ch + c) * h * w;
            for (std::size_t r = 0; r < oh; ++r) {
                for (std::size_t s = 0; s < ow; ++s, ++oi) {
                    std::size_t best = plane + (2 * r) * w + 2 * s;
                    double best_v = x.values[best];
                    // strict > keeps the first cell on ties
                    const std::size_t cands[3] = {best + 1, best + w, best + w + 1};
                    for (std::size_t cand : cands) {
                        if (x.values[cand] > best_v) {
                            best_v = x.values[cand];
                            best = cand;
                        }
                    }
                    res.out.values[oi] = best_v;
                    res.argmax[oi] = best;
                }
            }
        }
    }
    return res;
}

RealTensor maxpool2_backward(const PoolResult& cached, const RealTensor& x,
                             const RealTensor& upstream) {
    require(upstream.values.size() == cached.out.values.size(), "maxpool upstream shape mismatch");
    RealTensor dx = RealTensor::zeros(x.shape);
    for (std::size_t i = 0; i < cached.argmax.size(); ++i) {
        dx.values[cached.argmax[i]] += upstream.values[i];
    }
    return dx;
}

// -- dropout -------------------------------------------------------------------

DropoutResult dropout(const RealTensor& x, const DropoutSpec& spec, Rng& rng) {
    require(spec.p >= 0.0 && spec.p < 1.0, "dropout probability must be in [0, 1)");
    DropoutResult res;
    res.out = x;
    res.out.grad.clear();
    res.mask.assign(x.values.size(), 1.0);
    if (!spec.training || spec.p == 0.0) return res;

    const double keep_scale = 1.0 / (1.0 - spec.p);
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double m = rng.uniform() < spec.p ? 0.0 : keep_scale;
        res.mask[i] = m;
        res.out.values[i] = x.values[i] * m;
    }
    return res;
}

RealTensor dropout_backward(const DropoutResult& cached, const RealTensor& upstream) {
    require(upstream.values.size() == cached.mask.size(), "dropout upstream shape mismatch");
    RealTensor dx = RealTensor::zeros(upstream.shape);
    for (std::size_t i = 0; i < upstream.values.size(); ++i) {
        dx.values[i] = upstream.values[i] * cached.mask[i];
    }
    return dx;
}

// -- loss ----------------------------------------------------------------------

RealTensor softmax(const RealTensor& logits) {
    require(logits.shape.size() == 2, "softmax expects batch x k");
    const std::size_t batch = logits.shape[0], k = logits.shape[1];
    RealTensor y = RealTensor::zeros(logits.shape);
    for (std::size_t b = 0; b < batch; ++b) {
        const double* zr = logits.values.data() + b * k;
        double* yr = y.values.data() + b * k;
        double zmax = zr[0];
        for (std::size_t j = 1; j < k; ++j) zmax = std::max(zmax, zr[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            yr[j] = std::exp(zr[j] - zmax);
            denom += yr[j];
        }
        for (std::size_t j = 0; j < k; ++j) yr[j] /= denom;
    }
    return y;
}

LossResult softmax_cross_entropy(const RealTensor& logits, const RealTensor& labels) {
    require(logits.shape.size() == 2 && labels.shape == logits.shape,
            "loss expects matching batch x k logits and one-hot labels");
    const std::size_t batch = logits.shape[0], k = logits.shape[1];
    for (std::size_t b = 0; b < batch; ++b) {
        int ones = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const double y = labels.values[b * k + j];
            if (y == 1.0) {
                ++ones;
            } else {
                require(y == 0.0, "labels must be one-hot");
            }
        }
        require(ones == 1, "labels must be one-hot");
    }

    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    RealTensor probs = softmax(logits);
    LossResult res;
    res.grad = RealTensor::zeros(logits.shape);

    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double* yr = labels.values.data() + b * k;
        const double* pr = probs.values.data() + b * k;
        double* gr = res.grad.values.data() + b * k;

        // dl/d(prob), zeroed where the clamp saturates
        double dot = 0.0;  // sum_j g_j * p_j, for the softmax Jacobian
        for (std::size_t j = 0; j < k; ++j) {
            const double p = std::clamp(pr[j], lo, hi);
            total += -yr[j] * std::log(p) - (1.0 - yr[j]) * std::log(1.0 - p);
            const double g = (pr[j] > lo && pr[j] < hi)
                                 ? -yr[j] / p + (1.0 - yr[j]) / (1.0 - p)
                                 : 0.0;
            gr[j] = g;
            dot += g * pr[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            gr[j] = pr[j] * (gr[j] - dot) / static_cast<double>(batch);
        }
    }
    res.loss = total / static_cast<double>(batch);
    return res;
}

// -- initialization -------------------------------------------------------------

double init_uniform_inverse_sqrt(std::size_t fan_in) {
    require(fan_in >= 1, "fan_in must be at least 1");
    return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

double init_kaiming_uniform(std::size_t fan_in) {
    require(fan_in >= 1, "fan_in must be at least 1");
    return std::sqrt(6.0 / static_cast<double>(fan_in));
}

void fill_uniform(RealTensor& t, double bound, Rng& rng) {
    for (double& v : t.values) v = rng.uniform(-bound, bound);
}

// -- optimizer --------------------------------------------------------------------

double lr_for_epoch(const SgdState& state, int epoch) {
    double lr = state.initial_lr;
    for (int m : state.milestones) {
        if (epoch >= m) lr *= state.decay_factor;
    }
    return lr;
}

void sgd_step(RealTensor& params, const RealTensor& grads, SgdState& state, int epoch) {
    require(grads.values.size() == params.values.size(), "sgd shape mismatch");
    state.lr = lr_for_epoch(state, epoch);
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        params.values[i] -= state.lr * grads.values[i];
    }
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, SgdState& state,
              int epoch) {
    require(grads.size() == params.size(), "sgd shape mismatch");
    state.lr = lr_for_epoch(state, epoch);
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= state.lr * grads[i];
    }
}

}  // namespace hqfnn
