#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqfnn/data.hpp"
#include "hqfnn/fuzzy.hpp"
#include "hqfnn/metrics.hpp"
#include "hqfnn/nn.hpp"
#include "hqfnn/rng.hpp"

namespace hqfnn {

enum class ModelKind { Hqfnn, Fdnn, Cnn, Dnn };

ModelKind model_kind_from_name(const std::string& name);
std::string model_kind_name(ModelKind kind);

/// Architecture description. `hidden`/`fuzzy_sets` of 0 mean "use the
/// default": hidden 128 for images and 256 for features, fuzzy_sets = classes.
struct ModelSpec {
    ModelKind kind = ModelKind::Hqfnn;
    DataKind input = DataKind::Image;
    std::size_t image_hw = 28;     // images are 1 x image_hw x image_hw
    std::size_t feature_dim = 0;   // d, feature input only
    int classes = 10;              // k
    std::size_t hidden = 0;        // h
    int fuzzy_sets = 0;
    int qnn_layers = 2;
    int qnn_qubits = 1;
    double dropout_p = 0.4;

    bool has_fuzzy() const { return kind == ModelKind::Hqfnn || kind == ModelKind::Fdnn; }
    bool uses_conv_branch() const {
        return input == DataKind::Image && kind != ModelKind::Dnn;
    }
    std::size_t input_dim() const {
        return input == DataKind::Image ? image_hw * image_hw : feature_dim;
    }
    std::size_t hidden_dim() const {
        if (hidden != 0) return hidden;
        return input == DataKind::Image ? 128 : 256;
    }
    int fuzzy_count() const { return fuzzy_sets != 0 ? fuzzy_sets : classes; }
    /// Flattened length after conv -> pool -> conv -> pool on the input frame.
    std::size_t conv_flat_dim() const;
    void validate() const;
};

/// conv(1 -> 10, 5x5) -> pool2 -> ReLU -> conv(10 -> 20, 5x5) -> pool2 ->
/// ReLU -> flatten -> dense(-> h) -> ReLU -> dropout.
struct ConvBranch {
    RealTensor k1;    // 10 x 1 x 5 x 5
    RealTensor k2;    // 20 x 10 x 5 x 5
    RealTensor fc_w;  // h x flat
    RealTensor fc_b;  // h
};

/// Three dense layers (d -> h, then h -> h twice), each ReLU + dropout.
struct DenseBranch {
    std::vector<RealTensor> ws;
    std::vector<RealTensor> bs;
};

struct Model {
    ModelSpec spec;
    FuzzyLayer fuzzy;               // engaged iff spec.has_fuzzy()
    RealTensor fuzzy_w, fuzzy_b;    // h x fuzzy_sets, h
    ConvBranch conv;                // engaged iff spec.uses_conv_branch()
    DenseBranch dense;              // engaged otherwise
    RealTensor cls_w, cls_b;        // k x h, k
};

/// Fresh model. Tensor initializers draw from per-tensor seed streams, so two
/// kinds built from the same seed share bitwise-identical neural parameters.
Model make_model(const ModelSpec& spec, std::uint64_t seed);

/// Everything the backward pass needs, kept out of the model itself.
struct ForwardCache {
    std::size_t batch = 0;
    RealTensor flat;           // batch x d view of the input
    FuzzyActivations fuzzy;
    RealTensor fuzzy_lin;      // batch x h
    // conv branch
    RealTensor conv_in, c1_out, p1_act, c2_in, c2_out, p2_act, fc_in, fc_out;
    PoolResult pool1, pool2;
    // dense branch
    std::vector<RealTensor> d_in;   // input of every dense layer
    std::vector<RealTensor> d_out;  // pre-activation output
    std::vector<DropoutResult> drops;  // one per dropout site (either branch)
    RealTensor neural_out;     // batch x h
    RealTensor fused;          // batch x h
    RealTensor logits;         // batch x k
};

/// Runs the model. A non-null rng enables training mode (live dropout);
/// nullptr runs deterministic inference with dropout as a pass-through.
ForwardCache forward(const Model& m, const RealTensor& inputs, Rng* rng);

std::vector<int> predict_labels(const RealTensor& logits);

/// Parameter gradients, same shapes as the corresponding model tensors.
struct ModelGrads {
    FuzzyGrads fuzzy;
    RealTensor fuzzy_w, fuzzy_b;
    RealTensor conv_k1, conv_k2, conv_fc_w, conv_fc_b;
    std::vector<RealTensor> dense_ws, dense_bs;
    RealTensor cls_w, cls_b;
};

ModelGrads backward(const Model& m, const ForwardCache& cache, const RealTensor& loss_grad);

struct TrainConfig {
    int epochs = 200;
    std::size_t batch_size = 128;
    double lr = 0.01;
    double decay = 0.1;
    double milestone_fraction = 0.58;  // lr decays after round(fraction * epochs)
    double val_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;       // 1-based
    double loss = 0.0;   // mean over the epoch's batches
    double train_acc = 0.0;
    double val_acc = 0.0;
};

struct Evaluation {
    ConfusionMatrix confusion;
    MetricBundle metrics;
};

/// Post-training state needed to reproduce or resume a run.
struct Checkpoint {
    Model model;
    int epoch = 0;
    SgdState sgd;
    std::string rng_state;  // dropout stream, engine token text
};

struct TrainResult {
    std::vector<EpochRecord> trace;
    Checkpoint checkpoint;
};

/// SGD over shuffled batches; quantum parameters step by the parameter-shift
/// chain rule, everything else by backprop.
TrainResult train(Model& m, const Dataset& ds, const TrainConfig& cfg);

/// Dropout-free forward over the whole set; counts land in a k x k confusion.
Evaluation evaluate(const Model& m, const Dataset& ds);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hqfnn
