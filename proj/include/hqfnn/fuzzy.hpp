#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "hqfnn/qnn.hpp"

namespace hqfnn {

/// Floor for membership values entering the product rule; keeps the log-domain
/// sum finite no matter how many near-zero factors a sample produces.
constexpr double kMembershipFloor = 1e-7;

/// k membership circuits, one per fuzzy set. The same circuit is applied to
/// every input node, so the parameter count grows with k, not with d*k.
struct QuantumFuzzyLayer {
    int num_sets = 0;   // k
    int input_dim = 0;  // d
    std::vector<MembershipCircuit> circuits;

    void validate() const;
};

/// Gaussian bell memberships exp(-(x - mu)^2 / (2 sigma^2)), peak 1 at mu.
struct GaussianFuzzyLayer {
    int num_sets = 0;
    int input_dim = 0;
    std::vector<double> means;
    std::vector<double> sigmas;

    void validate() const;
};

/// The two layer kinds are interchangeable behind the same free functions.
using FuzzyLayer = std::variant<QuantumFuzzyLayer, GaussianFuzzyLayer>;

/// Forward-pass cache. memberships holds raw values f_i(x[b,j]); the floor
/// clamp is applied where the product rule and its gradient consume them.
struct FuzzyActivations {
    std::size_t batch = 0;
    std::size_t input_dim = 0;
    std::size_t num_sets = 0;
    std::vector<double> inputs;       // batch x d
    std::vector<double> memberships;  // batch x d x k
    std::vector<double> rule_log;     // batch x k
    std::vector<double> rule;         // batch x k

    double membership(std::size_t b, std::size_t j, std::size_t i) const {
        return memberships[(b * input_dim + j) * num_sets + i];
    }
};

/// Gradients with the same shapes as the owning layer's parameters.
struct FuzzyGrads {
    std::vector<std::vector<double>> thetas;  // quantum: one vector per circuit
    std::vector<double> means;                // gaussian
    std::vector<double> sigmas;               // gaussian
};

/// Fills memberships (and caches inputs); inputs must lie in [-1, 1].
FuzzyActivations membership_forward(const QuantumFuzzyLayer& layer,
                                    const std::vector<double>& batch, std::size_t batch_size);
FuzzyActivations membership_forward(const GaussianFuzzyLayer& layer,
                                    const std::vector<double>& batch, std::size_t batch_size);
FuzzyActivations membership_forward(const FuzzyLayer& layer, const std::vector<double>& batch,
                                    std::size_t batch_size);

/// Product AND rule over the input-node axis, computed as a log-domain sum:
/// rule_log[b,i] = sum_j log(clamp(m[b,j,i])), rule = exp(rule_log).
void rule_forward(FuzzyActivations& acts);

/// dL/d(parameters) given dL/d(rule) as `upstream` (batch x k). Requires the
/// full forward (membership_forward then rule_forward) to be cached in acts.
FuzzyGrads fuzzy_backward(const QuantumFuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream);
FuzzyGrads fuzzy_backward(const GaussianFuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream);
FuzzyGrads fuzzy_backward(const FuzzyLayer& layer, const FuzzyActivations& acts,
                          const std::vector<double>& upstream);

}  // namespace hqfnn
