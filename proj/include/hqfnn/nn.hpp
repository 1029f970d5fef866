#pragma once

#include <cstddef>
#include <vector>

#include "hqfnn/rng.hpp"

namespace hqfnn {

/// Dense row-major tensor. `grad` is either empty or exactly the size of
/// `values`; layers that need activation caches keep them externally.
struct RealTensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;

    static RealTensor zeros(std::vector<std::size_t> shape);

    std::size_t size() const;
    void validate() const;
};

// -- dense -------------------------------------------------------------------

/// w: out x in, b: out, x: batch x in  ->  batch x out.
RealTensor dense_forward(const RealTensor& w, const RealTensor& b, const RealTensor& x);

struct DenseGrads {
    RealTensor dw, db, dx;
};
DenseGrads dense_backward(const RealTensor& w, const RealTensor& x, const RealTensor& upstream);

// -- relu --------------------------------------------------------------------

RealTensor relu(const RealTensor& x);
/// Passes upstream where x > 0; the kink at 0 routes to the zero side.
RealTensor relu_backward(const RealTensor& x, const RealTensor& upstream);

// -- conv --------------------------------------------------------------------

/// kernels: outC x inC x kh x kw, x: batch x inC x H x W; stride 1, no
/// padding  ->  batch x outC x (H-kh+1) x (W-kw+1). Cross-correlation, no bias.
RealTensor conv2d_forward(const RealTensor& kernels, const RealTensor& x);

struct ConvGrads {
    RealTensor dk, dx;
};
ConvGrads conv2d_backward(const RealTensor& kernels, const RealTensor& x,
                          const RealTensor& upstream);

// -- pooling -----------------------------------------------------------------

/// 2x2 max pooling, stride 2; H and W must be even. Ties inside a block go to
/// the first cell in row-major order.
struct PoolResult {
    RealTensor out;
    std::vector<std::size_t> argmax;  // flat index into the input per output cell
};
PoolResult maxpool2(const RealTensor& x);
RealTensor maxpool2_backward(const PoolResult& cached, const RealTensor& x,
                             const RealTensor& upstream);

// -- dropout -------------------------------------------------------------------

struct DropoutSpec {
    double p = 0.4;
    bool training = true;
};

/// Inverted dropout: survivors are scaled by 1/(1-p) at train time so that
/// evaluation is an exact pass-through.
struct DropoutResult {
    RealTensor out;
    std::vector<double> mask;  // per-element multiplier: 0 or 1/(1-p)
};
DropoutResult dropout(const RealTensor& x, const DropoutSpec& spec, Rng& rng);
RealTensor dropout_backward(const DropoutResult& cached, const RealTensor& upstream);

// -- loss ----------------------------------------------------------------------

RealTensor softmax(const RealTensor& logits);

/// Softmax followed by the summed per-class binary cross-entropy
/// (1/m) sum_b sum_j [-y log p - (1-y) log(1-p)], with p clamped to
/// [1e-12, 1-1e-12]. The gradient is the exact chain rule through the clamp.
struct LossResult {
    double loss = 0.0;
    RealTensor grad;  // d(loss)/d(logits)
};
LossResult softmax_cross_entropy(const RealTensor& logits, const RealTensor& labels);

// -- initialization -------------------------------------------------------------

/// Bound for w ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)].
double init_uniform_inverse_sqrt(std::size_t fan_in);
/// Bound for Kaiming-uniform, w ~ U[-sqrt(6/fan_in), sqrt(6/fan_in)].
double init_kaiming_uniform(std::size_t fan_in);
void fill_uniform(RealTensor& t, double bound, Rng& rng);

// -- optimizer --------------------------------------------------------------------

/// Step-decay SGD. The effective rate for an epoch is
/// initial_lr * decay_factor^(milestones passed), recomputed on every call so
/// repeated steps within an epoch agree.
struct SgdState {
    double lr = 0.01;
    double initial_lr = 0.01;
    double decay_factor = 0.1;
    std::vector<int> milestones;
};

double lr_for_epoch(const SgdState& state, int epoch);
void sgd_step(RealTensor& params, const RealTensor& grads, SgdState& state, int epoch);
void sgd_step(std::vector<double>& params, const std::vector<double>& grads, SgdState& state,
              int epoch);

}  // namespace hqfnn
