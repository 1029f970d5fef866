#include "hqfnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hqfnn/errors.hpp"

namespace hqfnn {

namespace {

struct BinReader {
    std::ifstream in;
    std::size_t offset = 0;
    std::string path;

    explicit BinReader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw std::invalid_argument("cannot open file: " + p);
    }

    std::uint32_t u32_be() {
        unsigned char b[4];
        if (!in.read(reinterpret_cast<char*>(b), 4)) {
            throw ParseError("truncated file " + path, offset);
        }
        offset += 4;
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
               (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
    }

    void bytes(unsigned char* dst, std::size_t n) {
        if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n))) {
            throw ParseError("truncated file " + path, offset);
        }
        offset += n;
    }
};

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", v);
    return buf;
}

double scale_column(double v, double mn, double mx) {
    if (mx > mn) return 2.0 * (v - mn) / (mx - mn) - 1.0;
    return 0.0;  // constant column
}

Dataset parse_csv(const std::string& path, int k, std::vector<double>& raw, std::size_t& d) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw ParseError("missing header in " + path, 1);
    if (line.rfind("label", 0) != 0) throw ParseError("header must start with 'label'", 1);
    d = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
    if (d == 0) throw ParseError("no feature columns in header", 1);

    Dataset ds;
    ds.kind = DataKind::Feature;
    ds.num_classes = k;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(row, cell, ',')) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                                     cell + "'",
                                 line_no);
            }
            if (used != cell.size()) {
                throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                                     cell + "'",
                                 line_no);
            }
            cells.push_back(v);
        }
        if (cells.size() != d + 1) {
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(d + 1) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }

        const double label_v = cells[0];
        const int label = static_cast<int>(label_v);
        if (label_v != label || label < 0 || label >= k) {
            throw ParseError(
                "line " + std::to_string(line_no) + ": label outside [0, " + std::to_string(k) + ")",
                line_no);
        }
        ds.labels.push_back(label);
        raw.insert(raw.end(), cells.begin() + 1, cells.end());
    }
    return ds;
}

}  // namespace

std::size_t Dataset::sample_dim() const {
    std::size_t n = 1;
    for (std::size_t i = 1; i < inputs.shape.size(); ++i) n *= inputs.shape[i];
    return n;
}

void Dataset::validate() const {
    inputs.validate();
    if (inputs.shape.empty() || inputs.shape[0] != labels.size()) {
        throw std::invalid_argument("dataset inputs and labels disagree on N");
    }
    if (num_classes < 2) throw std::invalid_argument("dataset needs at least two classes");
    for (int l : labels) {
        if (l < 0 || l >= num_classes) throw std::invalid_argument("dataset label out of range");
    }
    for (double v : inputs.values) {
        if (!(v >= -1.0 && v <= 1.0)) {
            throw std::invalid_argument("dataset values must lie in [-1, 1]");
        }
    }
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    BinReader img(images_path);
    const std::uint32_t img_magic = img.u32_be();
    if (img_magic != 0x00000803u) {
        throw ParseError("bad image magic " + hex32(img_magic) + " (want 0x00000803)", 0);
    }
    const std::uint32_t n = img.u32_be();
    const std::uint32_t rows = img.u32_be();
    const std::uint32_t cols = img.u32_be();

    BinReader lab(labels_path);
    const std::uint32_t lab_magic = lab.u32_be();
    if (lab_magic != 0x00000801u) {
        throw ParseError("bad label magic " + hex32(lab_magic) + " (want 0x00000801)", 0);
    }
    const std::uint32_t n_labels = lab.u32_be();
    if (n_labels != n) {
        throw ConsistencyError("image count " + std::to_string(n) + " != label count " +
                               std::to_string(n_labels));
    }

    Dataset ds;
    ds.kind = DataKind::Image;
    ds.inputs = RealTensor::zeros({n, 1, rows, cols});
    ds.labels.resize(n);

    std::vector<unsigned char> pixel_row(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.bytes(pixel_row.data(), pixel_row.size());
        double* dst = ds.inputs.values.data() + static_cast<std::size_t>(i) * pixel_row.size();
        for (std::size_t p = 0; p < pixel_row.size(); ++p) {
            dst[p] = static_cast<double>(pixel_row[p]) / 127.5 - 1.0;
        }
    }
    std::vector<unsigned char> label_bytes(n);
    if (n > 0) lab.bytes(label_bytes.data(), n);
    int max_label = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        ds.labels[i] = label_bytes[i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = std::max(2, max_label + 1);
    return ds;
}

Dataset add_gaussian_noise(const Dataset& ds, double stddev, std::uint64_t seed) {
    if (ds.kind != DataKind::Image) {
        throw std::invalid_argument("noise augmentation expects an image dataset");
    }
    if (stddev < 0.0) throw std::invalid_argument("stddev must be non-negative");
    Dataset out = ds;
    if (stddev == 0.0) return out;
    Rng rng(seed);
    for (double& v : out.inputs.values) {
        v = std::clamp(v + stddev * rng.normal(), -1.0, 1.0);
    }
    return out;
}

Dataset load_csv_features(const std::string& path, int k, FeatureScaling* scaling_out) {
    std::vector<double> raw;
    std::size_t d = 0;
    Dataset ds = parse_csv(path, k, raw, d);
    const std::size_t n = ds.labels.size();

    FeatureScaling sc;
    sc.mins.assign(d, 0.0);
    sc.maxs.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double mn = n > 0 ? raw[j] : 0.0, mx = mn;
        for (std::size_t i = 1; i < n; ++i) {
            mn = std::min(mn, raw[i * d + j]);
            mx = std::max(mx, raw[i * d + j]);
        }
        sc.mins[j] = mn;
        sc.maxs[j] = mx;
    }

    ds.inputs = RealTensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            ds.inputs.values[i * d + j] = scale_column(raw[i * d + j], sc.mins[j], sc.maxs[j]);

    if (scaling_out != nullptr) *scaling_out = std::move(sc);
    return ds;
}

Dataset load_csv_features(const std::string& path, int k, const FeatureScaling& scaling) {
    std::vector<double> raw;
    std::size_t d = 0;
    Dataset ds = parse_csv(path, k, raw, d);
    if (scaling.mins.size() != d || scaling.maxs.size() != d) {
        throw std::invalid_argument("feature scaling dimension mismatch");
    }
    const std::size_t n = ds.labels.size();
    ds.inputs = RealTensor::zeros({n, d});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            // Held-out values may fall outside the training range; clamp so the
            // [-1, 1] input contract survives.
            const double v = scale_column(raw[i * d + j], scaling.mins[j], scaling.maxs[j]);
            ds.inputs.values[i * d + j] = std::clamp(v, -1.0, 1.0);
        }
    }
    return ds;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    const std::size_t dim = ds.sample_dim();
    Dataset out;
    out.kind = ds.kind;
    out.num_classes = ds.num_classes;
    out.inputs.shape = ds.inputs.shape;
    out.inputs.shape[0] = indices.size();
    out.inputs.values.resize(indices.size() * dim);
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::size_t src = indices[i];
        if (src >= ds.size()) throw std::invalid_argument("subset index out of range");
        std::copy_n(ds.inputs.values.begin() + static_cast<std::ptrdiff_t>(src * dim), dim,
                    out.inputs.values.begin() + static_cast<std::ptrdiff_t>(i * dim));
        out.labels[i] = ds.labels[src];
    }
    return out;
}

SplitResult split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw std::invalid_argument("split fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> idx(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);

    const auto n_train = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ds.size())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> rest_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return {subset(ds, train_idx), subset(ds, rest_idx)};
}

SplitResult split_per_class(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
    if (per_class == 0) throw std::invalid_argument("per-class count must be positive");
    Rng rng(seed);
    std::vector<std::size_t> train_idx, rest_idx;
    for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] == c) members.push_back(i);
        }
        if (members.size() < per_class) {
            throw std::invalid_argument("class " + std::to_string(c) + " has only " +
                                        std::to_string(members.size()) + " samples, need " +
                                        std::to_string(per_class));
        }
        rng.shuffle(members);
        train_idx.insert(train_idx.end(), members.begin(),
                         members.begin() + static_cast<std::ptrdiff_t>(per_class));
        rest_idx.insert(rest_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(per_class),
                        members.end());
    }
    return {subset(ds, train_idx), subset(ds, rest_idx)};
}

std::vector<std::size_t> epoch_permutation(const BatchPlan& plan, int epoch, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(derive_seed(plan.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(idx);
    return idx;
}

std::vector<Batch> batches(const Dataset& ds, const BatchPlan& plan, int epoch) {
    if (plan.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (plan.batch_size > ds.size()) {
        throw std::invalid_argument("batch size exceeds dataset size");
    }
    const std::vector<std::size_t> order = epoch_permutation(plan, epoch, ds.size());

    std::vector<Batch> out;
    for (std::size_t start = 0; start < order.size(); start += plan.batch_size) {
        const std::size_t stop = std::min(order.size(), start + plan.batch_size);
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(stop));
        Dataset piece = subset(ds, idx);
        Batch b;
        b.inputs = std::move(piece.inputs);
        b.labels = std::move(piece.labels);
        b.onehot = one_hot(b.labels, ds.num_classes);
        out.push_back(std::move(b));
    }
    return out;
}

RealTensor one_hot(const std::vector<int>& labels, int k) {
    RealTensor t = RealTensor::zeros({labels.size(), static_cast<std::size_t>(k)});
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) throw std::invalid_argument("label out of range");
        t.values[i * static_cast<std::size_t>(k) + static_cast<std::size_t>(labels[i])] = 1.0;
    }
    return t;
}

}  // namespace hqfnn
