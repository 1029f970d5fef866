#include "hqfnn/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hqfnn/errors.hpp"

namespace hqfnn {

namespace {

// Per-tensor seed streams. Fixed tags keep the neural branch bitwise
// reproducible across model kinds built from the same seed.
constexpr std::uint64_t kStreamConvK1 = 10;
constexpr std::uint64_t kStreamConvK2 = 11;
constexpr std::uint64_t kStreamConvFc = 12;
constexpr std::uint64_t kStreamDense0 = 20;  // 20, 21, 22
constexpr std::uint64_t kStreamClassifier = 30;
constexpr std::uint64_t kStreamFuzzyLinear = 40;
constexpr std::uint64_t kStreamThetas = 41;

RealTensor filled_uniform(std::vector<std::size_t> shape, double bound, std::uint64_t seed,
                          std::uint64_t stream) {
    RealTensor t = RealTensor::zeros(std::move(shape));
    Rng rng(derive_seed(seed, stream));
    fill_uniform(t, bound, rng);
    return t;
}

void check_input_shape(const ModelSpec& spec, const RealTensor& x) {
    if (x.shape.empty() || x.shape[0] == 0) {
        throw std::invalid_argument("forward needs a non-empty batch");
    }
    if (spec.input == DataKind::Image) {
        const bool ok = x.shape.size() == 4 && x.shape[1] == 1 && x.shape[2] == spec.image_hw &&
                        x.shape[3] == spec.image_hw;
        if (!ok) throw std::invalid_argument("input shape does not match the image spec");
    } else {
        const bool ok = x.shape.size() == 2 && x.shape[1] == spec.feature_dim;
        if (!ok) throw std::invalid_argument("input shape does not match the feature spec");
    }
}

void check_dataset(const ModelSpec& spec, const Dataset& ds) {
    if ((spec.input == DataKind::Image) != (ds.kind == DataKind::Image)) {
        throw std::invalid_argument("dataset kind does not match the model input");
    }
    check_input_shape(spec, ds.inputs);
    for (int l : ds.labels) {
        if (l < 0 || l >= spec.classes) {
            throw std::invalid_argument("dataset label outside the model's classes");
        }
    }
}

RealTensor rule_tensor(const ModelSpec& spec, const FuzzyActivations& acts) {
    RealTensor t;
    t.shape = {acts.batch, static_cast<std::size_t>(spec.fuzzy_count())};
    t.values = acts.rule;
    return t;
}

void sgd_step_model(Model& m, const ModelGrads& g, SgdState& sgd, int epoch) {
    if (m.spec.has_fuzzy()) {
        if (auto* q = std::get_if<QuantumFuzzyLayer>(&m.fuzzy)) {
            for (std::size_t i = 0; i < q->circuits.size(); ++i) {
                sgd_step(q->circuits[i].thetas, g.fuzzy.thetas[i], sgd, epoch);
            }
        } else {
            auto& gl = std::get<GaussianFuzzyLayer>(m.fuzzy);
            sgd_step(gl.means, g.fuzzy.means, sgd, epoch);
            sgd_step(gl.sigmas, g.fuzzy.sigmas, sgd, epoch);
        }
        sgd_step(m.fuzzy_w, g.fuzzy_w, sgd, epoch);
        sgd_step(m.fuzzy_b, g.fuzzy_b, sgd, epoch);
    }
    if (m.spec.uses_conv_branch()) {
        sgd_step(m.conv.k1, g.conv_k1, sgd, epoch);
        sgd_step(m.conv.k2, g.conv_k2, sgd, epoch);
        sgd_step(m.conv.fc_w, g.conv_fc_w, sgd, epoch);
        sgd_step(m.conv.fc_b, g.conv_fc_b, sgd, epoch);
    } else {
        for (std::size_t l = 0; l < m.dense.ws.size(); ++l) {
            sgd_step(m.dense.ws[l], g.dense_ws[l], sgd, epoch);
            sgd_step(m.dense.bs[l], g.dense_bs[l], sgd, epoch);
        }
    }
    sgd_step(m.cls_w, g.cls_w, sgd, epoch);
    sgd_step(m.cls_b, g.cls_b, sgd, epoch);
}

}  // namespace

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "hqfnn") return ModelKind::Hqfnn;
    if (name == "fdnn") return ModelKind::Fdnn;
    if (name == "cnn") return ModelKind::Cnn;
    if (name == "dnn") return ModelKind::Dnn;
    throw std::invalid_argument("unknown model kind: " + name);
}

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Hqfnn: return "hqfnn";
        case ModelKind::Fdnn: return "fdnn";
        case ModelKind::Cnn: return "cnn";
        case ModelKind::Dnn: return "dnn";
    }
    throw std::invalid_argument("unknown model kind");
}

std::size_t ModelSpec::conv_flat_dim() const {
    const std::size_t a = (image_hw - 4) / 2;  // after conv 5x5 + pool
    const std::size_t b = (a - 4) / 2;         // after the second pair
    return 20 * b * b;
}

void ModelSpec::validate() const {
    if (classes < 2) throw std::invalid_argument("model needs at least two classes");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
        throw std::invalid_argument("dropout probability must be in [0, 1)");
    }
    if (input == DataKind::Image) {
        // Two rounds of conv 5x5 + pool2 must come out even and non-empty.
        const bool geometry_ok = image_hw >= 12 && (image_hw - 4) % 2 == 0 &&
                                 ((image_hw - 4) / 2) >= 5 && ((image_hw - 4) / 2 - 4) % 2 == 0;
        if (uses_conv_branch() && !geometry_ok) {
            throw std::invalid_argument("image frame is incompatible with the conv stack");
         }
        if (image_hw == 0) throw std::invalid_argument("image frame must be non-empty");
    } else {
        if (feature_dim == 0) throw std::invalid_argument("feature input needs a dimension");
        if (kind == ModelKind::Cnn) {
            throw std::invalid_argument("the conv model requires image input");
        }
    }
    if (has_fuzzy()) {
        if (fuzzy_count() < 1) throw std::invalid_argument("fuzzy set count must be positive");
        if (qnn_layers < 1) throw std::invalid_argument("circuit layer count must be positive");
        if (qnn_qubits < 1 || qnn_qubits > 8) {
            throw std::invalid_argument("qubit count must be within [1, 8]");
        }
    }
}

Model make_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;
    const std::size_t h = spec.hidden_dim();
    const std::size_t d = spec.input_dim();
    const int k_sets = spec.fuzzy_count();

    if (spec.uses_conv_branch()) {
        m.conv.k1 = filled_uniform({10, 1, 5, 5}, init_kaiming_uniform(25), seed, kStreamConvK1);
        m.conv.k2 = filled_uniform({20, 10, 5, 5}, init_kaiming_uniform(250), seed, kStreamConvK2);
        const std::size_t flat = spec.conv_flat_dim();
        m.conv.fc_w = filled_uniform({h, flat}, init_kaiming_uniform(flat), seed, kStreamConvFc);
        m.conv.fc_b = RealTensor::zeros({h});
    } else {
        std::size_t in = d;
        for (int l = 0; l < 3; ++l) {
            m.dense.ws.push_back(filled_uniform({h, in}, init_kaiming_uniform(in), seed,
                                                kStreamDense0 + static_cast<std::uint64_t>(l)));
            m.dense.bs.push_back(RealTensor::zeros({h}));
            in = h;
        }
    }

    if (spec.has_fuzzy()) {
        if (spec.kind == ModelKind::Hqfnn) {
            QuantumFuzzyLayer layer;
            layer.num_sets = k_sets;
            layer.input_dim = static_cast<int>(d);
            Rng rng(derive_seed(seed, kStreamThetas));
            const double bound = init_kaiming_uniform(1);
            for (int i = 0; i < k_sets; ++i) {
                MembershipCircuit circ;
                circ.qubits = spec.qnn_qubits;
                circ.layers = spec.qnn_layers;
                circ.thetas.resize(MembershipCircuit::theta_count(circ.qubits, circ.layers));
                for (double& t : circ.thetas) t = rng.uniform(-bound, bound);
                layer.circuits.push_back(std::move(circ));
            }
            layer.validate();
            m.fuzzy = std::move(layer);
        } else {
            GaussianFuzzyLayer layer;
            layer.num_sets = k_sets;
            layer.input_dim = static_cast<int>(d);
            layer.sigmas.assign(static_cast<std::size_t>(k_sets), 0.5);
            layer.means.resize(static_cast<std::size_t>(k_sets));
            for (int i = 0; i < k_sets; ++i) {
                // Peaks evenly spaced over the input range.
                layer.means[static_cast<std::size_t>(i)] =
                    k_sets == 1 ? 0.0 : -1.0 + 2.0 * i / (k_sets - 1);
            }
            layer.validate();
            m.fuzzy = std::move(layer);
        }
        m.fuzzy_w = filled_uniform({h, static_cast<std::size_t>(k_sets)},
                                   init_kaiming_uniform(static_cast<std::size_t>(k_sets)), seed,
                                   kStreamFuzzyLinear);
        m.fuzzy_b = RealTensor::zeros({h});
    }

    m.cls_w = filled_uniform({static_cast<std::size_t>(spec.classes), h},
                             init_uniform_inverse_sqrt(h), seed, kStreamClassifier);
    m.cls_b = RealTensor::zeros({static_cast<std::size_t>(spec.classes)});
    return m;
}

ForwardCache forward(const Model& m, const RealTensor& inputs, Rng* rng) {
    const ModelSpec& spec = m.spec;
    check_input_shape(spec, inputs);

    ForwardCache c;
    c.batch = inputs.shape[0];
    c.flat.shape = {c.batch, spec.input_dim()};
    c.flat.values = inputs.values;

    const bool training = rng != nullptr;
    Rng unused;
    Rng& dr = training ? *rng : unused;
    const DropoutSpec dspec{spec.dropout_p, training};

    if (spec.has_fuzzy()) {
        c.fuzzy = membership_forward(m.fuzzy, c.flat.values, c.batch);
        rule_forward(c.fuzzy);
        c.fuzzy_lin = dense_forward(m.fuzzy_w, m.fuzzy_b, rule_tensor(spec, c.fuzzy));
    }

    if (spec.uses_conv_branch()) {
        c.conv_in = inputs;
        c.conv_in.grad.clear();
        c.c1_out = conv2d_forward(m.conv.k1, c.conv_in);
        c.pool1 = maxpool2(c.c1_out);
        c.p1_act = relu(c.pool1.out);
        c.c2_in = c.p1_act;
        c.c2_out = conv2d_forward(m.conv.k2, c.c2_in);
        c.pool2 = maxpool2(c.c2_out);
        c.p2_act = relu(c.pool2.out);
        c.fc_in.shape = {c.batch, spec.conv_flat_dim()};
        c.fc_in.values = c.p2_act.values;
        c.fc_out = dense_forward(m.conv.fc_w, m.conv.fc_b, c.fc_in);
        c.drops.push_back(dropout(relu(c.fc_out), dspec, dr));
        c.neural_out = c.drops.back().out;
    } else {
        c.d_in.push_back(c.flat);
        for (std::size_t l = 0; l < m.dense.ws.size(); ++l) {
            c.d_out.push_back(dense_forward(m.dense.ws[l], m.dense.bs[l], c.d_in[l]));
            c.drops.push_back(dropout(relu(c.d_out[l]), dspec, dr));
            if (l + 1 < m.dense.ws.size()) c.d_in.push_back(c.drops.back().out);
        }
        c.neural_out = c.drops.back().out;
    }

    c.fused = c.neural_out;
    if (spec.has_fuzzy()) {
        for (std::size_t i = 0; i < c.fused.values.size(); ++i) {
            c.fused.values[i] += c.fuzzy_lin.values[i];
        }
    }
    c.logits = dense_forward(m.cls_w, m.cls_b, c.fused);
    return c;
}

std::vector<int> predict_labels(const RealTensor& logits) {
    if (logits.shape.size() != 2) throw std::invalid_argument("logits must be batch x k");
    const std::size_t k = logits.shape[1];
    std::vector<int> out(logits.shape[0]);
    for (std::size_t b = 0; b < out.size(); ++b) {
        const double* row = logits.values.data() + b * k;
        int best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (row[j] > row[best]) best = static_cast<int>(j);
        }
        out[b] = best;
    }
    return out;
}

ModelGrads backward(const Model& m, const ForwardCache& c, const RealTensor& loss_grad) {
    const ModelSpec& spec = m.spec;
    ModelGrads g;

    DenseGrads cls = dense_backward(m.cls_w, c.fused, loss_grad);
    g.cls_w = std::move(cls.dw);
    g.cls_b = std::move(cls.db);
    const RealTensor d_fused = std::move(cls.dx);

    if (spec.has_fuzzy()) {
        DenseGrads fz = dense_backward(m.fuzzy_w, rule_tensor(spec, c.fuzzy), d_fused);
        g.fuzzy_w = std::move(fz.dw);
        g.fuzzy_b = std::move(fz.db);
        g.fuzzy = fuzzy_backward(m.fuzzy, c.fuzzy, fz.dx.values);
    }

    if (spec.uses_conv_branch()) {
        RealTensor up = dropout_backward(c.drops[0], d_fused);
        up = relu_backward(c.fc_out, up);
        DenseGrads fc = dense_backward(m.conv.fc_w, c.fc_in, up);
        g.conv_fc_w = std::move(fc.dw);
        g.conv_fc_b = std::move(fc.db);
        RealTensor dflat = std::move(fc.dx);
        dflat.shape = c.p2_act.shape;
        RealTensor dp2 = relu_backward(c.pool2.out, dflat);
        RealTensor dc2 = maxpool2_backward(c.pool2, c.c2_out, dp2);
        ConvGrads cg2 = conv2d_backward(m.conv.k2, c.c2_in, dc2);
        g.conv_k2 = std::move(cg2.dk);
        RealTensor dp1 = relu_backward(c.pool1.out, cg2.dx);
        RealTensor dc1 = maxpool2_backward(c.pool1, c.c1_out, dp1);
        ConvGrads cg1 = conv2d_backward(m.conv.k1, c.conv_in, dc1);
        g.conv_k1 = std::move(cg1.dk);
    } else {
        g.dense_ws.resize(m.dense.ws.size());
        g.dense_bs.resize(m.dense.ws.size());
        RealTensor up = d_fused;
        for (std::size_t l = m.dense.ws.size(); l-- > 0;) {
            up = dropout_backward(c.drops[l], up);
            up = relu_backward(c.d_out[l], up);
            DenseGrads dg = dense_backward(m.dense.ws[l], c.d_in[l], up);
            g.dense_ws[l] = std::move(dg.dw);
            g.dense_bs[l] = std::move(dg.db);
            up = std::move(dg.dx);
        }
    }
    return g;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epoch count must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(decay > 0.0 && decay <= 1.0)) {
        throw std::invalid_argument("decay factor must be in (0, 1]");
    }
    if (!(milestone_fraction >= 0.0 && milestone_fraction <= 1.0)) {
        throw std::invalid_argument("milestone fraction must be in [0, 1]");
    }
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("validation fraction must be in [0, 1)");
    }
}

TrainResult train(Model& m, const Dataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    if (ds.size() == 0) throw std::invalid_argument("training dataset is empty");
    check_dataset(m.spec, ds);

    Dataset train_ds;
    Dataset val_ds;
    bool has_val = false;
    if (cfg.val_fraction > 0.0) {
        const auto n_train = static_cast<std::size_t>(
            std::llround((1.0 - cfg.val_fraction) * static_cast<double>(ds.size())));
        if (n_train >= 1 && n_train < ds.size()) {
            SplitResult sr = split(ds, 1.0 - cfg.val_fraction, derive_seed(cfg.seed, 101));
            train_ds = std::move(sr.train);
            val_ds = std::move(sr.held_out);
            has_val = true;
        }
    }
    if (!has_val) train_ds = ds;

    SgdState sgd;
    sgd.lr = cfg.lr;
    sgd.initial_lr = cfg.lr;
    sgd.decay_factor = cfg.decay;
    const int milestone = static_cast<int>(std::llround(cfg.milestone_fraction * cfg.epochs));
    if (milestone >= 1 && milestone <= cfg.epochs) sgd.milestones = {milestone};

    Rng drop_rng(derive_seed(cfg.seed, 102));
    BatchPlan plan;
    plan.seed = derive_seed(cfg.seed, 103);
    plan.batch_size = std::min(cfg.batch_size, train_ds.size());

    TrainResult res;
    for (int e = 1; e <= cfg.epochs; ++e) {
        double loss_sum = 0.0;
        const std::vector<Batch> bs = batches(train_ds, plan, e);
        for (const Batch& b : bs) {
            ForwardCache cache = forward(m, b.inputs, &drop_rng);
            LossResult lo = softmax_cross_entropy(cache.logits, b.onehot);
            if (!std::isfinite(lo.loss)) throw NumericError("non-finite training loss", e);
            loss_sum += lo.loss;
            ModelGrads g = backward(m, cache, lo.grad);
            sgd_step_model(m, g, sgd, e);
        }
        EpochRecord rec;
        rec.epoch = e;
        rec.loss = loss_sum / static_cast<double>(bs.size());
        rec.train_acc = evaluate(m, train_ds).metrics.accuracy;
        rec.val_acc = has_val ? evaluate(m, val_ds).metrics.accuracy : rec.train_acc;
        res.trace.push_back(rec);
    }

    res.checkpoint.model = m;
    res.checkpoint.epoch = cfg.epochs;
    res.checkpoint.sgd = sgd;
    res.checkpoint.rng_state = drop_rng.save_state();
    return res;
}

Evaluation evaluate(const Model& m, const Dataset& ds) {
    if (ds.size() == 0) throw std::invalid_argument("evaluation dataset is empty");
    check_dataset(m.spec, ds);

    ConfusionMatrix cm = ConfusionMatrix::zero(m.spec.classes);
    const std::size_t chunk = 256;
    for (std::size_t start = 0; start < ds.size(); start += chunk) {
        const std::size_t stop = std::min(ds.size(), start + chunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Dataset piece = subset(ds, idx);
        const ForwardCache cache = forward(m, piece.inputs, nullptr);
        const std::vector<int> preds = predict_labels(cache.logits);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            accumulate(cm, piece.labels[i], preds[i]);
        }
    }
    Evaluation ev;
    ev.metrics = macro_metrics(cm);
    ev.confusion = std::move(cm);
    return ev;
}

// -- checkpoint container ------------------------------------------------------
//
// "HQFN", u32 version, then named records: u32 name length, name bytes,
// u32 rank, u64 dims, f64 payload. All integers and reals little-endian.

namespace {

constexpr std::uint32_t kCkptVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void put_record(std::ostream& out, const std::string& name,
                const std::vector<std::size_t>& shape, const std::vector<double>& values) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (std::size_t dim : shape) put_u64(out, dim);
    for (double v : values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

void put_tensor(std::ostream& out, const std::string& name, const RealTensor& t) {
    put_record(out, name, t.shape, t.values);
}

/// State tokens -> pairs of u32 halves, which doubles carry exactly.
std::vector<double> encode_rng(const std::string& state) {
    std::istringstream is(state);
    std::vector<double> out;
    std::string token;
    while (is >> token) {
        const std::uint64_t v = std::stoull(token);
        out.push_back(static_cast<double>(v >> 32));
        out.push_back(static_cast<double>(v & 0xffffffffULL));
    }
    return out;
}

std::string decode_rng(const std::vector<double>& values) {
    std::ostringstream os;
    for (std::size_t i = 0; i + 1 < values.size(); i += 2) {
        const std::uint64_t v = (static_cast<std::uint64_t>(values[i]) << 32) |
                                static_cast<std::uint64_t>(values[i + 1]);
        if (i > 0) os << ' ';
        os << v;
    }
    return os.str();
}

struct CkptRecord {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::size_t offset = 0;  // where the record started, for error reporting
};

struct CkptReader {
    std::ifstream in;
    std::size_t pos = 0;

    explicit CkptReader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw std::invalid_argument("cannot open checkpoint: " + path);
    }

    void bytes(unsigned char* dst, std::size_t n) {
        if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            throw ParseError("checkpoint truncated", pos);
        }
        pos += n;
    }

    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }

    bool at_end() { return in.peek() == std::char_traits<char>::eof(); }
};

int meta_int(double v, const char* what, std::size_t offset) {
    const double r = std::floor(v);
    if (r != v || v < -1e9 || v > 1e9) {
        throw ParseError(std::string("checkpoint meta field '") + what + "' is not integral",
                         offset);
    }
    return static_cast<int>(r);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open checkpoint for writing: " + path);
    out.write("HQFN", 4);
    put_u32(out, kCkptVersion);

    const Model& m = ckpt.model;
    const ModelSpec& s = m.spec;
    put_record(out, "meta.spec", {10},
               {static_cast<double>(static_cast<int>(s.kind)),
                static_cast<double>(static_cast<int>(s.input)),
                static_cast<double>(s.image_hw), static_cast<double>(s.feature_dim),
                static_cast<double>(s.classes), static_cast<double>(s.hidden),
                static_cast<double>(s.fuzzy_sets), static_cast<double>(s.qnn_layers),
                static_cast<double>(s.qnn_qubits), s.dropout_p});

    std::vector<double> tr = {static_cast<double>(ckpt.epoch), ckpt.sgd.lr, ckpt.sgd.initial_lr,
                              ckpt.sgd.decay_factor,
                              static_cast<double>(ckpt.sgd.milestones.size())};
    for (int ms : ckpt.sgd.milestones) tr.push_back(static_cast<double>(ms));
    put_record(out, "meta.train", {tr.size()}, tr);

    const std::vector<double> rng_values = encode_rng(ckpt.rng_state);
    put_record(out, "meta.rng", {rng_values.size()}, rng_values);

    if (s.has_fuzzy()) {
        if (const auto* q = std::get_if<QuantumFuzzyLayer>(&m.fuzzy)) {
            for (std::size_t i = 0; i < q->circuits.size(); ++i) {
                put_record(out, "fuzzy.circuit." + std::to_string(i),
                           {q->circuits[i].thetas.size()}, q->circuits[i].thetas);
            }
        } else {
            const auto& gl = std::get<GaussianFuzzyLayer>(m.fuzzy);
            put_record(out, "fuzzy.means", {gl.means.size()}, gl.means);
            put_record(out, "fuzzy.sigmas", {gl.sigmas.size()}, gl.sigmas);
        }
        put_tensor(out, "fuzzy.w", m.fuzzy_w);
        put_tensor(out, "fuzzy.b", m.fuzzy_b);
    }
    if (s.uses_conv_branch()) {
        put_tensor(out, "conv.k1", m.conv.k1);
        put_tensor(out, "conv.k2", m.conv.k2);
        put_tensor(out, "conv.fc_w", m.conv.fc_w);
        put_tensor(out, "conv.fc_b", m.conv.fc_b);
    } else {
        for (std::size_t l = 0; l < m.dense.ws.size(); ++l) {
            put_tensor(out, "dense.w" + std::to_string(l), m.dense.ws[l]);
            put_tensor(out, "dense.b" + std::to_string(l), m.dense.bs[l]);
        }
    }
    put_tensor(out, "cls.w", m.cls_w);
    put_tensor(out, "cls.b", m.cls_b);
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    CkptReader r(path);
    unsigned char magic[4];
    r.bytes(magic, 4);
    if (!(magic[0] == 'H' && magic[1] == 'Q' && magic[2] == 'F' && magic[3] == 'N')) {
        throw ParseError("bad checkpoint magic", 0);
    }
    const std::uint32_t version = r.u32();
    if (version != kCkptVersion) {
        throw UnsupportedVersion("checkpoint format version " + std::to_string(version) +
                                 " is not supported (want " + std::to_string(kCkptVersion) + ")");
    }

    std::map<std::string, CkptRecord> records;
    while (!r.at_end()) {
        const std::size_t start = r.pos;
        const std::uint32_t name_len = r.u32();
        if (name_len == 0 || name_len > 256) {
            throw ParseError("implausible record name length", start);
        }
        std::string name(name_len, '\0');
        r.bytes(reinterpret_cast<unsigned char*>(name.data()), name_len);
        const std::uint32_t rank = r.u32();
        if (rank > 8) throw ParseError("implausible record rank", start);
        CkptRecord rec;
        rec.offset = start;
        std::size_t total = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            const std::uint64_t dim = r.u64();
            if (dim > (1ULL << 32)) throw ParseError("implausible record dimension", start);
            rec.shape.push_back(static_cast<std::size_t>(dim));
            total *= static_cast<std::size_t>(dim);
        }
        if (total > (1ULL << 28)) throw ParseError("implausible record size", start);
        rec.values.resize(total);
        for (std::size_t i = 0; i < total; ++i) {
            rec.values[i] = std::bit_cast<double>(r.u64());
        }
        if (records.count(name) != 0) throw ParseError("duplicate record '" + name + "'", start);
        records.emplace(std::move(name), std::move(rec));
    }
    const std::size_t end_pos = r.pos;

    auto take = [&](const std::string& name) -> CkptRecord& {
        auto it = records.find(name);
        if (it == records.end()) {
            throw ParseError("missing checkpoint record '" + name + "'", end_pos);
        }
        return it->second;
    };
    auto take_values = [&](const std::string& name, std::size_t n) -> std::vector<double>& {
        CkptRecord& rec = take(name);
        if (rec.values.size() != n) {
            throw ParseError("record '" + name + "' has the wrong length", rec.offset);
        }
        return rec.values;
    };
    auto load_tensor = [&](const std::string& name, RealTensor& into) {
        CkptRecord& rec = take(name);
        if (rec.shape != into.shape) {
            throw ParseError("record '" + name + "' disagrees with the model spec", rec.offset);
        }
        into.values = std::move(rec.values);
    };

    const CkptRecord& sp = take("meta.spec");
    if (sp.values.size() != 10) {
        throw ParseError("record 'meta.spec' has the wrong length", sp.offset);
    }
    ModelSpec spec;
    const int kind_v = meta_int(sp.values[0], "kind", sp.offset);
    const int input_v = meta_int(sp.values[1], "input", sp.offset);
    if (kind_v < 0 || kind_v > 3 || input_v < 0 || input_v > 1) {
        throw ParseError("checkpoint spec enums out of range", sp.offset);
    }
    spec.kind = static_cast<ModelKind>(kind_v);
    spec.input = static_cast<DataKind>(input_v);
    spec.image_hw = static_cast<std::size_t>(meta_int(sp.values[2], "image_hw", sp.offset));
    spec.feature_dim = static_cast<std::size_t>(meta_int(sp.values[3], "feature_dim", sp.offset));
    spec.classes = meta_int(sp.values[4], "classes", sp.offset);
    spec.hidden = static_cast<std::size_t>(meta_int(sp.values[5], "hidden", sp.offset));
    spec.fuzzy_sets = meta_int(sp.values[6], "fuzzy_sets", sp.offset);
    spec.qnn_layers = meta_int(sp.values[7], "qnn_layers", sp.offset);
    spec.qnn_qubits = meta_int(sp.values[8], "qnn_qubits", sp.offset);
    spec.dropout_p = sp.values[9];
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("checkpoint spec is invalid: ") + e.what(), sp.offset);
    }

    Checkpoint ckpt;
    ckpt.model = make_model(spec, 0);
    Model& m = ckpt.model;

    if (spec.has_fuzzy()) {
        if (auto* q = std::get_if<QuantumFuzzyLayer>(&m.fuzzy)) {
            for (std::size_t i = 0; i < q->circuits.size(); ++i) {
                q->circuits[i].thetas = take_values("fuzzy.circuit." + std::to_string(i),
                                                    q->circuits[i].thetas.size());
            }
        } else {
            auto& gl = std::get<GaussianFuzzyLayer>(m.fuzzy);
            gl.means = take_values("fuzzy.means", gl.means.size());
            gl.sigmas = take_values("fuzzy.sigmas", gl.sigmas.size());
        }
        load_tensor("fuzzy.w", m.fuzzy_w);
        load_tensor("fuzzy.b", m.fuzzy_b);
    }
    if (spec.uses_conv_branch()) {
        load_tensor("conv.k1", m.conv.k1);
        load_tensor("conv.k2", m.conv.k2);
        load_tensor("conv.fc_w", m.conv.fc_w);
        load_tensor("conv.fc_b", m.conv.fc_b);
    } else {
        for (std::size_t l = 0; l < m.dense.ws.size(); ++l) {
            load_tensor("dense.w" + std::to_string(l), m.dense.ws[l]);
            load_tensor("dense.b" + std::to_string(l), m.dense.bs[l]);
        }
    }
    load_tensor("cls.w", m.cls_w);
    load_tensor("cls.b", m.cls_b);

    const CkptRecord& tr = take("meta.train");
    if (tr.values.size() < 5) {
        throw ParseError("record 'meta.train' has the wrong length", tr.offset);
    }
    ckpt.epoch = meta_int(tr.values[0], "epoch", tr.offset);
    ckpt.sgd.lr = tr.values[1];
    ckpt.sgd.initial_lr = tr.values[2];
    ckpt.sgd.decay_factor = tr.values[3];
    const int n_ms = meta_int(tr.values[4], "milestones", tr.offset);
    if (n_ms < 0 || tr.values.size() != 5 + static_cast<std::size_t>(n_ms)) {
        throw ParseError("record 'meta.train' has the wrong length", tr.offset);
    }
    for (int i = 0; i < n_ms; ++i) {
        ckpt.sgd.milestones.push_back(
            meta_int(tr.values[5 + static_cast<std::size_t>(i)], "milestone", tr.offset));
    }

    ckpt.rng_state = decode_rng(take("meta.rng").values);
    return ckpt;
}

}  // namespace hqfnn
