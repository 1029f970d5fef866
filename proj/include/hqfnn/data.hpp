#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqfnn/nn.hpp"
#include "hqfnn/rng.hpp"

namespace hqfnn {

enum class DataKind { Image, Feature };

/// Samples plus integer labels. Image inputs are N x 1 x H x W, feature
/// inputs N x d; every value lies in [-1, 1] after loading.
struct Dataset {
    DataKind kind = DataKind::Feature;
    RealTensor inputs;
    std::vector<int> labels;
    int num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t sample_dim() const;  // flattened per-sample length
    void validate() const;
};

/// IDX pair loader (big-endian, image magic 0x00000803, label magic
/// 0x00000801). Pixels map to [-1, 1] via v / 127.5 - 1.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Elementwise additive zero-mean Gaussian noise, clamped back to [-1, 1].
Dataset add_gaussian_noise(const Dataset& ds, double stddev, std::uint64_t seed);

/// Per-column min/max of a training set, reused to scale held-out data.
struct FeatureScaling {
    std::vector<double> mins;
    std::vector<double> maxs;
};

/// CSV loader; header "label,f0,f1,...". Features are min-max scaled per
/// column to [-1, 1]; constant columns map to 0. The computed statistics are
/// reported through scaling_out so evaluation data can reuse them.
Dataset load_csv_features(const std::string& path, int k, FeatureScaling* scaling_out = nullptr);
/// Same, but scales with previously computed statistics (clamping to [-1,1]).
Dataset load_csv_features(const std::string& path, int k, const FeatureScaling& scaling);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

struct SplitResult {
    Dataset train;
    Dataset held_out;
};
/// Seeded shuffle split; train takes round(fraction * N) samples.
SplitResult split(const Dataset& ds, double fraction, std::uint64_t seed);
/// Takes the first `per_class` shuffled samples of every class for train.
SplitResult split_per_class(const Dataset& ds, std::size_t per_class, std::uint64_t seed);

struct BatchPlan {
    std::uint64_t seed = 0;
    std::size_t batch_size = 128;
};

/// The epoch's visit order; a bijection on [0, N) derived from (seed, epoch).
std::vector<std::size_t> epoch_permutation(const BatchPlan& plan, int epoch, std::size_t n);

struct Batch {
    RealTensor inputs;
    RealTensor onehot;  // B x k
    std::vector<int> labels;
};
/// Every sample exactly once per epoch; the final short batch is kept.
std::vector<Batch> batches(const Dataset& ds, const BatchPlan& plan, int epoch);

RealTensor one_hot(const std::vector<int>& labels, int k);

}  // namespace hqfnn
