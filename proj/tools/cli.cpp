// Command-line front end: train, eval, gradcheck, and noise-sweep over the
// library. Exit codes: 0 success, 1 failed check, 2 usage/config error,
// 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hqfnn/data.hpp"
#include "hqfnn/errors.hpp"
#include "hqfnn/model.hpp"
#include "hqfnn/noiselab.hpp"
#include "hqfnn/qnn.hpp"
#include "hqfnn/rng.hpp"

namespace {

using namespace hqfnn;

// Seed streams for command-level data handling; disjoint from the model's own
// per-tensor streams by construction of derive_seed.
constexpr std::uint64_t kStreamTrainSubset = 201;
constexpr std::uint64_t kStreamTestSubset = 202;
constexpr std::uint64_t kStreamTrainNoise = 210;
constexpr std::uint64_t kStreamTestNoise = 211;
constexpr std::uint64_t kStreamGradcheckBase = 1000;
constexpr std::uint64_t kStreamGradcheckModel = 2000;
constexpr std::uint64_t kStreamSweepThetas = 3000;

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string metrics_json(const MetricBundle& mb) {
    std::ostringstream os;
    os << "{\n";
    os << "  \"accuracy\": " << fmt6(mb.accuracy) << ",\n";
    os << "  \"macro_precision\": " << fmt6(mb.macro_precision) << ",\n";
    os << "  \"macro_recall\": " << fmt6(mb.macro_recall) << ",\n";
    os << "  \"macro_f1\": " << fmt6(mb.macro_f1) << ",\n";
    os << "  \"n_samples\": " << mb.n_samples << "\n";
    os << "}\n";
    return os.str();
}

std::string trace_csv(const std::vector<EpochRecord>& trace) {
    std::string out = "epoch,loss,train_acc,val_acc\n";
    for (const EpochRecord& r : trace) {
        out += std::to_string(r.epoch) + "," + fmt6(r.loss) + "," + fmt6(r.train_acc) + "," +
               fmt6(r.val_acc) + "\n";
    }
    return out;
}

/// Static index partition over worker threads; result slots are disjoint, so
/// the outcome is identical for every thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const int t = static_cast<int>(std::min<std::size_t>(std::max(threads, 1), n));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (int w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = static_cast<std::size_t>(w); i < n; i += t) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

Dataset pick_subset(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n == 0 || n >= ds.size()) return ds;
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(n);
    return subset(ds, idx);
}

std::string scaling_csv(const FeatureScaling& s) {
    std::string out = "min,max\n";
    char buf[80];
    for (std::size_t i = 0; i < s.mins.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", s.mins[i], s.maxs[i]);
        out += buf;
    }
    return out;
}

FeatureScaling read_scaling(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("min,max", 0) != 0) {
        throw ParseError("scaling file lacks the min,max header", 1);
    }
    FeatureScaling s;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("scaling line " + std::to_string(line_no) + " needs two cells",
                             line_no);
        }
        s.mins.push_back(std::stod(line.substr(0, comma)));
        s.maxs.push_back(std::stod(line.substr(comma + 1)));
    }
    if (s.mins.empty()) throw ParseError("scaling file has no columns", line_no);
    return s;
}

NoisePlacement parse_placement(const std::string& name) {
    if (name == "end" || name == "end_of_circuit") return NoisePlacement::EndOfCircuit;
    if (name == "after_each" || name == "after_each_gate") return NoisePlacement::AfterEachGate;
    throw std::invalid_argument("unknown placement '" + name + "' (want end | after_each)");
}

int run_guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// ---------------------------------------------------------------- train/eval

struct TrainOpts {
    std::string model = "hqfnn";
    std::string dataset = "idx";
    std::string images, labels, test_images, test_labels;
    std::string train_csv, test_csv;
    std::string out_dir = ".";
    std::string preset;
    int classes = 0;  // 0 = take from the data
    int epochs = 10;
    std::size_t batch_size = 128;
    double lr = 0.01;
    double decay = 0.1;
    double milestone_fraction = 0.58;
    double val_fraction = 0.1;
    std::uint64_t seed = 7;
    std::size_t hidden = 0;
    int fuzzy_sets = 0;
    int qnn_layers = 2;
    int qnn_qubits = 1;
    double dropout = 0.4;
    double noise_stddev = 0.0;
    std::size_t train_subset = 0;  // 0 = all
    std::size_t test_subset = 0;
    int threads = 1;
};

struct LoadedData {
    Dataset train;
    Dataset test;
    bool has_test = false;
};

LoadedData load_train_data(const TrainOpts& o) {
    LoadedData d;
    if (o.dataset == "idx") {
        if (o.images.empty() || o.labels.empty()) {
            throw std::invalid_argument("idx input needs --images and --labels");
        }
        d.train = load_idx(o.images, o.labels);
        if (!o.test_images.empty() || !o.test_labels.empty()) {
            if (o.test_images.empty() || o.test_labels.empty()) {
                throw std::invalid_argument("a test set needs both --test-images and --test-labels");
            }
            d.test = load_idx(o.test_images, o.test_labels);
            d.has_test = true;
        }
    } else if (o.dataset == "csv") {
        if (o.train_csv.empty()) throw std::invalid_argument("csv input needs --train-csv");
        if (o.classes < 2) throw std::invalid_argument("csv input needs --classes (>= 2)");
        FeatureScaling scaling;
        d.train = load_csv_features(o.train_csv, o.classes, &scaling);
        write_file(o.out_dir + "/scaling.csv", scaling_csv(scaling));
        if (!o.test_csv.empty()) {
            d.test = load_csv_features(o.test_csv, o.classes, scaling);
            d.has_test = true;
        }
    } else {
        throw std::invalid_argument("unknown dataset kind '" + o.dataset + "' (want idx | csv)");
    }
    return d;
}

int run_train(const TrainOpts& o) {
    std::filesystem::create_directories(o.out_dir);
    LoadedData data = load_train_data(o);

    data.train = pick_subset(data.train, o.train_subset, derive_seed(o.seed, kStreamTrainSubset));
    if (data.has_test) {
        data.test = pick_subset(data.test, o.test_subset, derive_seed(o.seed, kStreamTestSubset));
    }
    if (o.noise_stddev > 0.0) {
        if (data.train.kind != DataKind::Image) {
            throw std::invalid_argument("--noise-stddev applies to image data only");
        }
        data.train =
            add_gaussian_noise(data.train, o.noise_stddev, derive_seed(o.seed, kStreamTrainNoise));
        if (data.has_test) {
            data.test =
                add_gaussian_noise(data.test, o.noise_stddev, derive_seed(o.seed, kStreamTestNoise));
        }
    }

    ModelSpec spec;
    spec.kind = model_kind_from_name(o.model);
    spec.input = data.train.kind;
    if (spec.input == DataKind::Image) {
        if (data.train.inputs.shape[2] != data.train.inputs.shape[3]) {
            throw std::invalid_argument("only square image frames are supported");
        }
        spec.image_hw = data.train.inputs.shape[2];
    } else {
        spec.feature_dim = data.train.sample_dim();
    }
    spec.classes = o.classes != 0 ? o.classes : data.train.num_classes;
    spec.hidden = o.hidden;
    spec.fuzzy_sets = o.fuzzy_sets;
    spec.qnn_layers = o.qnn_layers;
    spec.qnn_qubits = o.qnn_qubits;
    spec.dropout_p = o.dropout;

    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.lr = o.lr;
    cfg.decay = o.decay;
    cfg.milestone_fraction = o.milestone_fraction;
    cfg.val_fraction = o.val_fraction;
    cfg.seed = o.seed;

    std::cout << "model " << o.model << " on " << data.train.size() << " train";
    if (data.has_test) std::cout << " / " << data.test.size() << " test";
    std::cout << " samples (" << spec.classes << " classes)\n";

    Model model = make_model(spec, o.seed);
    const TrainResult result = train(model, data.train, cfg);
    for (const EpochRecord& r : result.trace) {
        std::cout << "epoch " << r.epoch << "/" << o.epochs << "  loss " << fmt6(r.loss)
                  << "  train_acc " << fmt6(r.train_acc) << "  val_acc " << fmt6(r.val_acc)
                  << "\n";
    }

    const Dataset& eval_ds = data.has_test ? data.test : data.train;
    const Evaluation ev = evaluate(model, eval_ds);
    std::cout << (data.has_test ? "test" : "train-set") << " accuracy "
              << fmt6(ev.metrics.accuracy) << "  macro_f1 " << fmt6(ev.metrics.macro_f1) << "  (n="
              << ev.metrics.n_samples << ")\n";

    write_file(o.out_dir + "/trace.csv", trace_csv(result.trace));
    write_file(o.out_dir + "/metrics.json", metrics_json(ev.metrics));
    write_file(o.out_dir + "/confusion.csv", confusion_csv(ev.confusion));
    save_checkpoint(result.checkpoint, o.out_dir + "/model.ckpt");
    std::cout << "wrote " << o.out_dir << "/trace.csv, metrics.json, confusion.csv, model.ckpt\n";
    return 0;
}

struct EvalOpts {
    std::string checkpoint;
    std::string dataset = "idx";
    std::string images, labels, csv, scaling;
    std::string out_dir = ".";
    std::uint64_t seed = 7;
    double noise_stddev = 0.0;
    std::size_t subset_n = 0;
};

int run_eval(const EvalOpts& o) {
    std::filesystem::create_directories(o.out_dir);
    const Checkpoint ckpt = load_checkpoint(o.checkpoint);
    const ModelSpec& spec = ckpt.model.spec;

    Dataset ds;
    if (o.dataset == "idx") {
        if (o.images.empty() || o.labels.empty()) {
            throw std::invalid_argument("idx input needs --images and --labels");
        }
        ds = load_idx(o.images, o.labels);
    } else if (o.dataset == "csv") {
        if (o.csv.empty()) throw std::invalid_argument("csv input needs --csv");
        if (o.scaling.empty()) {
            throw std::invalid_argument("csv evaluation needs --scaling from the training run");
        }
        ds = load_csv_features(o.csv, spec.classes, read_scaling(o.scaling));
    } else {
        throw std::invalid_argument("unknown dataset kind '" + o.dataset + "' (want idx | csv)");
    }

    if ((spec.input == DataKind::Image) != (ds.kind == DataKind::Image)) {
        throw std::invalid_argument("checkpoint expects " +
                                    std::string(spec.input == DataKind::Image ? "image" : "feature") +
                                    " input, but the dataset is the other kind");
    }

    // Mirrors the train command's held-out pipeline, so evaluating the same
    // files with the same seed reproduces the training run's metrics bytes.
    ds = pick_subset(ds, o.subset_n, derive_seed(o.seed, kStreamTestSubset));
    if (o.noise_stddev > 0.0) {
        if (ds.kind != DataKind::Image) {
            throw std::invalid_argument("--noise-stddev applies to image data only");
        }
        ds = add_gaussian_noise(ds, o.noise_stddev, derive_seed(o.seed, kStreamTestNoise));
    }

    const Evaluation ev = evaluate(ckpt.model, ds);
    std::cout << "accuracy " << fmt6(ev.metrics.accuracy) << "  macro_f1 "
              << fmt6(ev.metrics.macro_f1) << "  (n=" << ev.metrics.n_samples << ")\n";
    write_file(o.out_dir + "/metrics.json", metrics_json(ev.metrics));
    write_file(o.out_dir + "/confusion.csv", confusion_csv(ev.confusion));
    std::cout << "wrote " << o.out_dir << "/metrics.json, confusion.csv\n";
    return 0;
}

// ----------------------------------------------------------------- gradcheck

struct GradcheckOpts {
    int circuits = 100;
    int layers_max = 4;
    double tolerance = 1e-5;
    double tolerance_e2e = 1e-4;
    std::uint64_t seed = 7;
    int threads = 1;
};

struct WorstCase {
    double rel = 0.0;
    int case_idx = -1;
    std::size_t param = 0;
    double shift = 0.0;
    double fd = 0.0;
};

WorstCase circuit_level_check(const GradcheckOpts& o) {
    std::vector<WorstCase> per_case(static_cast<std::size_t>(o.circuits));
    parallel_for(per_case.size(), o.threads, [&](std::size_t i) {
        Rng rng(derive_seed(o.seed, kStreamGradcheckBase + i));
        MembershipCircuit c;
        c.qubits = 1;
        c.layers = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(o.layers_max)));
        c.thetas.resize(MembershipCircuit::theta_count(1, c.layers));
        for (double& t : c.thetas) t = rng.uniform(-M_PI, M_PI);
        const double x = rng.uniform(-1.0, 1.0);

        const std::vector<double> shift = param_shift_grad(c, x);
        WorstCase worst;
        worst.case_idx = static_cast<int>(i);
        const double h = 1e-5;
        for (std::size_t j = 0; j < c.thetas.size(); ++j) {
            const double saved = c.thetas[j];
            c.thetas[j] = saved + h;
            const double fp = eval_membership(c, x);
            c.thetas[j] = saved - h;
            const double fm = eval_membership(c, x);
            c.thetas[j] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel =
                std::abs(shift[j] - fd) / std::max({std::abs(shift[j]), std::abs(fd), 1e-3});
            if (rel > worst.rel) {
                worst.rel = rel;
                worst.param = j;
                worst.shift = shift[j];
                worst.fd = fd;
            }
        }
        per_case[i] = worst;
    });
    WorstCase worst;
    for (const WorstCase& w : per_case) {
        if (w.rel >= worst.rel) {
            if (w.rel > worst.rel || worst.case_idx < 0) worst = w;
        }
    }
    return worst;
}

double end_to_end_check(const GradcheckOpts& o) {
    ModelSpec spec;
    spec.kind = ModelKind::Hqfnn;
    spec.input = DataKind::Feature;
    spec.feature_dim = 4;
    spec.classes = 2;
    spec.hidden = 8;
    spec.qnn_layers = 1;
    spec.dropout_p = 0.0;  // keeps the double forward deterministic
    Model m = make_model(spec, derive_seed(o.seed, kStreamGradcheckModel));

    Rng rng(derive_seed(o.seed, kStreamGradcheckModel + 1));
    RealTensor x = RealTensor::zeros({2, 4});
    for (double& v : x.values) v = rng.uniform(-0.9, 0.9);
    const RealTensor y = one_hot({0, 1}, 2);

    const ForwardCache cache = forward(m, x, nullptr);
    const LossResult loss = softmax_cross_entropy(cache.logits, y);
    const ModelGrads g = backward(m, cache, loss.grad);

    struct View {
        std::vector<double>* values;
        const std::vector<double>* grads;
    };
    std::vector<View> views;
    auto& q = std::get<QuantumFuzzyLayer>(m.fuzzy);
    for (std::size_t i = 0; i < q.circuits.size(); ++i) {
        views.push_back({&q.circuits[i].thetas, &g.fuzzy.thetas[i]});
    }
    views.push_back({&m.fuzzy_w.values, &g.fuzzy_w.values});
    views.push_back({&m.fuzzy_b.values, &g.fuzzy_b.values});
    for (std::size_t l = 0; l < m.dense.ws.size(); ++l) {
        views.push_back({&m.dense.ws[l].values, &g.dense_ws[l].values});
        views.push_back({&m.dense.bs[l].values, &g.dense_bs[l].values});
    }
    views.push_back({&m.cls_w.values, &g.cls_w.values});
    views.push_back({&m.cls_b.values, &g.cls_b.values});

    const auto loss_at = [&] {
        const ForwardCache c = forward(m, x, nullptr);
        return softmax_cross_entropy(c.logits, y).loss;
    };

    // Guarded relative error: the 1e-4 floor keeps finite-difference rounding
    // noise on near-zero gradients from drowning the signal.
    double worst = 0.0;
    const double h = 1e-5;
    for (const View& v : views) {
        for (std::size_t i = 0; i < v.values->size(); ++i) {
            double& slot = (*v.values)[i];
            const double saved = slot;
            slot = saved + h;
            const double lp = loss_at();
            slot = saved - h;
            const double lm = loss_at();
            slot = saved;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = (*v.grads)[i];
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-4});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

int run_gradcheck(const GradcheckOpts& o) {
    if (o.circuits < 1) throw std::invalid_argument("--circuits must be positive");
    if (o.layers_max < 1) throw std::invalid_argument("--layers-max must be positive");

    const WorstCase circuit_worst = circuit_level_check(o);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "circuit-level: %d circuits, max relative error %.3e (circuit %d, theta %zu)",
                  o.circuits, circuit_worst.rel, circuit_worst.case_idx, circuit_worst.param);
    std::cout << line << "\n";

    const double e2e_worst = end_to_end_check(o);
    std::snprintf(line, sizeof(line), "end-to-end: tiny fused model, max relative error %.3e",
                  e2e_worst);
    std::cout << line << "\n";

    const bool circuit_ok = circuit_worst.rel < o.tolerance;
    const bool e2e_ok = e2e_worst < o.tolerance_e2e;
    if (circuit_ok && e2e_ok) {
        std::cout << "gradcheck: PASS\n";
        return 0;
    }
    if (!circuit_ok) {
        std::snprintf(line, sizeof(line),
                      "gradcheck: FAIL - circuit-level %.3e exceeds %.3e "
                      "(circuit %d theta %zu: shift %.9f, fd %.9f)",
                      circuit_worst.rel, o.tolerance, circuit_worst.case_idx, circuit_worst.param,
                      circuit_worst.shift, circuit_worst.fd);
        std::cout << line << "\n";
    }
    if (!e2e_ok) {
        std::snprintf(line, sizeof(line), "gradcheck: FAIL - end-to-end %.3e exceeds %.3e",
                      e2e_worst, o.tolerance_e2e);
        std::cout << line << "\n";
    }
    return 1;
}

// --------------------------------------------------------------- noise-sweep

struct SweepOpts {
    std::string channel = "mix_dp";
    std::string placement = "end";
    std::vector<double> gammas = {0.01, 0.03, 0.05, 0.07, 0.1};
    int x_samples = 100;
    int qnn_layers = 2;
    int qnn_qubits = 1;
    std::uint64_t seed = 7;
    std::string out_dir = ".";
    int threads = 1;
};

int run_noise_sweep(const SweepOpts& o) {
    std::filesystem::create_directories(o.out_dir);
    const ChannelKind kind = channel_from_name(o.channel);
    const NoisePlacement placement = parse_placement(o.placement);

    SweepConfig cfg;
    cfg.channel = kind;
    cfg.placement = placement;
    cfg.gammas = o.gammas;
    cfg.x_samples = o.x_samples;
    cfg.circuit.qubits = o.qnn_qubits;
    cfg.circuit.layers = o.qnn_layers;
    cfg.circuit.thetas.resize(MembershipCircuit::theta_count(o.qnn_qubits, o.qnn_layers));
    Rng rng(derive_seed(o.seed, kStreamSweepThetas));
    for (double& t : cfg.circuit.thetas) t = rng.uniform(-M_PI, M_PI);
    cfg.validate();

    // Same cells and means as run_sweep, with the grid filled in parallel.
    FidelityTable table;
    table.gammas = cfg.gammas;
    table.xs = sweep_grid_x(cfg.x_samples);
    table.grid.resize(table.gammas.size() * table.xs.size());
    parallel_for(table.grid.size(), o.threads, [&](std::size_t cell) {
        const std::size_t g = cell / table.xs.size();
        const std::size_t i = cell % table.xs.size();
        table.grid[cell] =
            circuit_fidelity(cfg.circuit, table.xs[i], kind, table.gammas[g], placement);
    });
    table.means.resize(table.gammas.size());
    for (std::size_t g = 0; g < table.gammas.size(); ++g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < table.xs.size(); ++i) sum += table.at(g, i);
        table.means[g] = sum / static_cast<double>(table.xs.size());
    }

    std::cout << "channel " << o.channel << ", placement " << placement_name(placement) << ", "
              << o.qnn_layers << " layer(s), " << o.qnn_qubits << " qubit(s), " << o.x_samples
              << " x sample(s)\n";
    for (std::size_t g = 0; g < table.gammas.size(); ++g) {
        std::cout << "gamma " << fmt6(table.gammas[g]) << "  mean fidelity "
                  << fmt6(table.means[g]) << "\n";
    }
    std::cout << "note: 'mix_dp' mixes toward the maximally mixed state, rho -> (1-g) rho + g "
                 "I/2, so a pure state keeps fidelity 1 - g/2. 'dp' draws X, Y, Z errors with "
                 "probability g/3 each; that is the same family reparameterized (dp at g equals "
                 "mix_dp at 4g/3) and a pure state keeps 1 - 2g/3. Columns for the two channels "
                 "therefore differ at equal g.\n";

    write_file(o.out_dir + "/sweep_grid.csv", sweep_grid_csv(table));
    write_file(o.out_dir + "/sweep_summary.csv", sweep_summary_csv(table));
    std::cout << "wrote " << o.out_dir << "/sweep_grid.csv, sweep_summary.csv\n";
    return 0;
}

void apply_preset(const std::string& name, CLI::App* cmd, TrainOpts& o) {
    if (name.empty()) return;
    if (name != "desk-mnist") {
        throw std::invalid_argument("unknown preset '" + name + "' (want desk-mnist)");
    }
    // Named profile: 2000/500 subsets with mild pixel noise, ten epochs,
    // two-layer membership circuits, fixed seed. Explicit flags still win.
    const auto set_if_default = [&](const char* flag, const std::function<void()>& apply) {
        if (cmd->get_option(flag)->count() == 0) apply();
    };
    set_if_default("--epochs", [&] { o.epochs = 10; });
    set_if_default("--batch-size", [&] { o.batch_size = 128; });
    // Ten epochs of 2000 samples is ~150 SGD steps; the short run needs a
    // hotter rate than a 200-epoch schedule would use.
    set_if_default("--lr", [&] { o.lr = 0.05; });
    set_if_default("--qnn-layers", [&] { o.qnn_layers = 2; });
    set_if_default("--seed", [&] { o.seed = 7; });
    set_if_default("--train-subset", [&] { o.train_subset = 2000; });
    set_if_default("--test-subset", [&] { o.test_subset = 500; });
    set_if_default("--noise-stddev", [&] { o.noise_stddev = 0.05; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid quantum-fuzzy network toolkit"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "INI config file; command-line flags override its values");

    TrainOpts to;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model and write run artifacts");
    train_cmd->option_defaults()->always_capture_default();
    train_cmd->add_option("--model", to.model, "hqfnn | fdnn | cnn | dnn");
    train_cmd->add_option("--dataset", to.dataset, "idx | csv");
    train_cmd->add_option("--images", to.images, "training images (idx)");
    train_cmd->add_option("--labels", to.labels, "training labels (idx)");
    train_cmd->add_option("--test-images", to.test_images, "held-out images (idx)");
    train_cmd->add_option("--test-labels", to.test_labels, "held-out labels (idx)");
    train_cmd->add_option("--train-csv", to.train_csv, "training features (csv)");
    train_cmd->add_option("--test-csv", to.test_csv, "held-out features (csv)");
    train_cmd->add_option("--classes", to.classes, "class count (0 = infer from idx labels)");
    train_cmd->add_option("--epochs", to.epochs, "training epochs");
    train_cmd->add_option("--batch-size", to.batch_size, "SGD batch size");
    train_cmd->add_option("--lr", to.lr, "initial learning rate");
    train_cmd->add_option("--decay", to.decay, "learning-rate decay factor at the milestone");
    train_cmd->add_option("--milestone-fraction", to.milestone_fraction,
                          "epoch fraction at which the decay fires");
    train_cmd->add_option("--val-fraction", to.val_fraction, "share of train held for validation");
    train_cmd->add_option("--seed", to.seed, "run seed (init, shuffling, dropout, noise)");
    train_cmd->add_option("--hidden", to.hidden, "hidden width (0 = kind default)");
    train_cmd->add_option("--fuzzy-sets", to.fuzzy_sets, "fuzzy set count (0 = class count)");
    train_cmd->add_option("--qnn-layers", to.qnn_layers, "membership circuit layers");
    train_cmd->add_option("--qnn-qubits", to.qnn_qubits, "membership circuit qubits");
    train_cmd->add_option("--dropout", to.dropout, "dropout probability");
    train_cmd->add_option("--noise-stddev", to.noise_stddev,
                          "Gaussian pixel noise added after normalization");
    train_cmd->add_option("--train-subset", to.train_subset,
                          "seeded training subset size (0 = all)");
    train_cmd->add_option("--test-subset", to.test_subset, "seeded test subset size (0 = all)");
    train_cmd->add_option("--out", to.out_dir, "output directory");
    train_cmd->add_option("--preset", to.preset, "named profile: desk-mnist");
    train_cmd->add_option("--threads", to.threads,
                          "worker cap; training math runs serially in this build")
        ->check(CLI::Range(1, 256));

    EvalOpts eo;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval_cmd->option_defaults()->always_capture_default();
    eval_cmd->add_option("--checkpoint", eo.checkpoint, "model checkpoint path")->required();
    eval_cmd->add_option("--dataset", eo.dataset, "idx | csv");
    eval_cmd->add_option("--images", eo.images, "images (idx)");
    eval_cmd->add_option("--labels", eo.labels, "labels (idx)");
    eval_cmd->add_option("--csv", eo.csv, "features (csv)");
    eval_cmd->add_option("--scaling", eo.scaling, "scaling.csv written by the training run");
    eval_cmd->add_option("--seed", eo.seed, "seed for --subset and --noise-stddev streams");
    eval_cmd->add_option("--noise-stddev", eo.noise_stddev,
                         "Gaussian pixel noise added after normalization");
    eval_cmd->add_option("--subset", eo.subset_n, "seeded subset size (0 = all)");
    eval_cmd->add_option("--out", eo.out_dir, "output directory");

    GradcheckOpts go;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "compare shift-rule and backprop gradients against "
                                        "central finite differences");
    grad_cmd->option_defaults()->always_capture_default();
    grad_cmd->add_option("--circuits", go.circuits, "random circuit count");
    grad_cmd->add_option("--layers-max", go.layers_max, "maximum circuit depth");
    grad_cmd->add_option("--tolerance", go.tolerance, "circuit-level relative error bound");
    grad_cmd->add_option("--tolerance-e2e", go.tolerance_e2e, "end-to-end relative error bound");
    grad_cmd->add_option("--seed", go.seed, "case seed (changes cases, not the verdict)");
    grad_cmd->add_option("--threads", go.threads, "worker threads over independent circuits")
        ->check(CLI::Range(1, 256));

    SweepOpts so;
    CLI::App* sweep_cmd =
        app.add_subcommand("noise-sweep", "tabulate circuit fidelity under a noise channel");
    sweep_cmd->option_defaults()->always_capture_default();
    sweep_cmd->add_option("--channel", so.channel, "ad | dp | mix_dp");
    sweep_cmd->add_option("--placement", so.placement, "end | after_each");
    sweep_cmd->add_option("--gammas", so.gammas, "noise strengths in [0, 1]");
    sweep_cmd->add_option("--x-samples", so.x_samples, "evenly spaced inputs over [-1, 1]");
    sweep_cmd->add_option("--qnn-layers", so.qnn_layers, "circuit layers");
    sweep_cmd->add_option("--qnn-qubits", so.qnn_qubits, "circuit qubits");
    sweep_cmd->add_option("--seed", so.seed, "seed for the random circuit parameters");
    sweep_cmd->add_option("--out", so.out_dir, "output directory");
    sweep_cmd->add_option("--threads", so.threads, "worker threads over grid cells")
        ->check(CLI::Range(1, 256));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (train_cmd->parsed()) {
        return run_guarded([&] {
            apply_preset(to.preset, train_cmd, to);
            return run_train(to);
        });
    }
    if (eval_cmd->parsed()) return run_guarded([&] { return run_eval(eo); });
    if (grad_cmd->parsed()) return run_guarded([&] { return run_gradcheck(go); });
    if (sweep_cmd->parsed()) return run_guarded([&] { return run_noise_sweep(so); });
    return 2;  // unreachable with require_subcommand(1)
}
