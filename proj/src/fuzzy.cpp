#include "hqfnn/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hqfnn/errors.hpp"

namespace hqfnn {

namespace {

void check_inputs(const std::vector<double>& batch, std::size_t batch_size, int input_dim) {
    if (input_dim <= 0) throw std::invalid_argument("fuzzy layer input_dim must be positive");
    if (batch.size() != batch_size * static_cast<std::size_t>(input_dim)) {
        throw std::invalid_argument("batch length does not match batch_size x input_dim");
    }
    for (double x : batch) {
        if (!(x >= -1.0 - 1e-9 && x <= 1.0 + 1e-9)) {
            throw std::invalid_argument("fuzzy input outside [-1, 1]");
        }
    }
}

FuzzyActivations make_acts(const std::vector<double>& batch, std::size_t batch_size,
                           int input_dim, int num_sets) {
    FuzzyActivations acts;
    acts.batch = batch_size;
    acts.input_dim = static_cast<std::size_t>(input_dim);
    acts.num_sets = static_cast<std::size_t>(num_sets);
    acts.inputs = batch;
    acts.memberships.resize(batch_size * acts.input_dim * acts.num_sets);
    return acts;
}

void check_cached(const FuzzyActivations& acts, int input_dim, int num_sets) {
    const bool shapes_ok = acts.input_dim == static_cast<std::size_t>(input_dim) &&
                           acts.num_sets == static_cast<std::size_t>(num_sets) &&
                           acts.inputs.size() == acts.batch * acts.input_dim &&
                           acts.memberships.size() == acts.inputs.size() * acts.num_sets;
    if (!shapes_ok || acts.batch == 0) {
        throw StateError("fuzzy backward without a cached membership forward");
    }
    if (acts.rule_log.size() != acts.batch * acts.num_sets ||
        acts.rule.size() != acts.rule_log.size()) {
        throw StateError("fuzzy backward without a cached rule forward");
    }
}

}  // namespace

void QuantumFuzzyLayer::validate() const {
    if (num_sets <= 0) throw std::invalid_argument("fuzzy layer needs at least one set");
    if (circuits.size() != static_cast<std::size_t>(num_sets)) {
        throw std::invalid_argument("circuit count must equal num_sets");
    }
    for (const MembershipCircuit& c : circuits) c.validate();
}

void GaussianFuzzyLayer::validate() const {
    if (num_sets <= 0) throw std::invalid_argument("fuzzy layer needs at least one set");
    if (means.size() != static_cast<std::size_t>(num_sets) || sigmas.size() != means.size()) {
        throw std::invalid_argument("means/sigmas length must equal num_sets");
    }
    for (double s : sigmas) {
        if (!(s > 0.0)) throw std::invalid_argument("gaussian sigma must be positive");
    }
}

FuzzyActivations membership_forward(const QuantumFuzzyLayer& layer,
                                    const std::vector<double>& batch, std::size_t batch_size) {
    layer.validate();
    check_inputs(batch, batch_size, layer.input_dim);
    FuzzyActivations acts = make_acts(batch, batch_size, layer.input_dim, layer.num_sets);
    const std::size_t d = acts.input_dim, k = acts.num_sets;
    for (std::size_t b = 0; b < batch_size; ++b) {
        for (std::size_t j = 0; j < d; ++j) {
            const double x = batch[b * d + j];
            for (std::size_t i = 0; i < k; ++i) {
                acts.memberships[(b * d + j) * k + i] = membership(layer.circuits[i], x);
            }
        }
    }
    return acts;
}

FuzzyActivations membership_forward(const GaussianFuzzyLayer& layer,
                                    const std::vector<double>& batch, std::size_t batch_size) {
    layer.validate();
    check_inputs(batch, batch_size, layer.input_dim);
    FuzzyActivations acts = make_acts(batch, batch_size, layer.input_dim, layer.num_sets);
    const std::size_t d = acts.input_dim, k = acts.num_sets;
    for (std::size_t b = 0; b < batch_size; ++b) {
        for (std::size_t j = 0; j < d; ++j) {
            const double x = batch[b * d + j];
            for (std::size_t i = 0; i < k; ++i) {
                const double z = (x - layer.means[i]) / layer.sigmas[i];
                acts.memberships[(b * d + j) * k + i] = std::exp(-0.5 * z * z);
            }
        }
    }
    return acts;
}

FuzzyActivations membership_forward(const FuzzyLayer& layer, const std::vector<double>& batch,
                                    std::size_t batch_size) {
    return std::visit([&](const auto& l) { return membership_forward(l, batch, batch_size); },
                      layer);
}

void rule_forward(FuzzyActivations& acts) {
    const std::size_t d = acts.input_dim, k = acts.num_sets;
    if (acts.memberships.size() != acts.batch * d * k) {
        throw StateError("rule forward before membership forward");
    }
    acts.rule_log.assign(acts.batch * k, 0.0);
    acts.rule.assign(acts.batch * k, 0.0);
    for (std::size_t b = 0; b < acts.batch; ++b) {
        for (std::size_t i = 0; i < k; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double m = std::clamp(acts.memberships[(b * d + j) * k + i],
                                            kMembershipFloor, 1.0);
                acc += std::log(m);
            }
            acts.rule_log[b * k + i] = acc;
            acts.rule[b * k + i] = std::exp(acc);
        }
    }
}

FuzzyGrads fuzzy_backward(const QuantumFuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream) {
    layer.validate();
    check_cached(acts, layer.input_dim, layer.num_sets);
    if (upstream.size() != acts.batch * acts.num_sets) {
        throw std::invalid_argument("upstream shape must be batch x num_sets");
    }

    const std::size_t d = acts.input_dim, k = acts.num_sets;
    FuzzyGrads grads;
    grads.thetas.resize(k);
    for (std::size_t i = 0; i < k; ++i) grads.thetas[i].assign(layer.circuits[i].thetas.size(), 0.0);

    for (std::size_t b = 0; b < acts.batch; ++b) {
        for (std::size_t i = 0; i < k; ++i) {
            const double up = upstream[b * k + i];
            if (up == 0.0) continue;
            const double rlog = acts.rule_log[b * k + i];
            for (std::size_t j = 0; j < d; ++j) {
                const double m = std::clamp(acts.memberships[(b * d + j) * k + i],
                                            kMembershipFloor, 1.0);
                // rule / m, formed in log space; underflow to exact 0 means the
                // whole term vanishes and the circuit gradient can be skipped.
                const double factor = up * std::exp(rlog - std::log(m));
                if (factor == 0.0) continue;
                const std::vector<double> g =
                    param_shift_grad(layer.circuits[i], acts.inputs[b * d + j]);
                for (std::size_t t = 0; t < g.size(); ++t) grads.thetas[i][t] += factor * g[t];
            }
        }
    }
    return grads;
}

FuzzyGrads fuzzy_backward(const GaussianFuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream) {
    layer.validate();
    check_cached(acts, layer.input_dim, layer.num_sets);
    if (upstream.size() != acts.batch * acts.num_sets) {
        throw std::invalid_argument("upstream shape must be batch x num_sets");
    }

    const std::size_t d = acts.input_dim, k = acts.num_sets;
    FuzzyGrads grads;
    grads.means.assign(k, 0.0);
    grads.sigmas.assign(k, 0.0);

    for (std::size_t b = 0; b < acts.batch; ++b) {
        for (std::size_t i = 0; i < k; ++i) {
            const double up = upstream[b * k + i];
            if (up == 0.0) continue;
            const double rlog = acts.rule_log[b * k + i];
            for (std::size_t j = 0; j < d; ++j) {
                const double raw = acts.memberships[(b * d + j) * k + i];
                const double m = std::clamp(raw, kMembershipFloor, 1.0);
                const double factor = up * std::exp(rlog - std::log(m));
                if (factor == 0.0) continue;
                const double x = acts.inputs[b * d + j];
                const double mu = layer.means[i], sg = layer.sigmas[i];
                const double dm_dmu = raw * (x - mu) / (sg * sg);
                const double dm_dsigma = raw * (x - mu) * (x - mu) / (sg * sg * sg);
                grads.means[i] += factor * dm_dmu;
                grads.sigmas[i] += factor * dm_dsigma;
            }
        }
    }
    return grads;
}

FuzzyGrads fuzzy_backward(const FuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream) {
    return std::visit([&](const auto& l) { return fuzzy_backward(l, acts, upstream); }, layer);
}

}  // namespace hqfnn
