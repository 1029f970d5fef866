// End-to-end acceptance gate. Each numbered check prints exactly one PASS or
// FAIL line; the binary exits nonzero if any check fails. Heavy checks drive
// the installed command-line tools; the rest call the library directly.
//
//   acceptance [--only N] [--cli PATH] [--datagen PATH] [--workdir DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hqfnn/data.hpp"
#include "hqfnn/fuzzy.hpp"
#include "hqfnn/metrics.hpp"
#include "hqfnn/model.hpp"
#include "hqfnn/noiselab.hpp"
#include "hqfnn/qcore.hpp"
#include "hqfnn/qnn.hpp"
#include "hqfnn/rng.hpp"

#ifndef ACCEPT_CLI_PATH
#define ACCEPT_CLI_PATH "hqfnn"
#endif
#ifndef ACCEPT_DATAGEN_PATH
#define ACCEPT_DATAGEN_PATH "hqfnn-make-dataset"
#endif

namespace fs = std::filesystem;
using namespace hqfnn;
using nlohmann::json;

namespace {

struct Harness {
    std::string cli = ACCEPT_CLI_PATH;
    std::string datagen = ACCEPT_DATAGEN_PATH;
    std::string work;
    bool pool_ready = false;
    std::map<std::string, double> desk_seconds;  // model name -> train wall time
    int failures = 0;
};

void report(Harness& h, int idx, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %d %-28s %s\n", ok ? "PASS" : "FAIL", idx, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++h.failures;
}

int run_cmd(const std::string& cmd, const std::string& log_path) {
    const std::string full = cmd + " > \"" + log_path + "\" 2>&1";
    const int status = std::system(full.c_str());
    if (status < 0) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

void ensure_pool(Harness& h) {
    if (h.pool_ready) return;
    const std::string dir = h.work + "/pool";
    const int rc = run_cmd("\"" + h.datagen + "\" --out \"" + dir + "\" --train 2500 --test 600 --seed 1",
                           h.work + "/datagen.log");
    if (rc != 0) throw std::runtime_error("dataset generation failed, see " + h.work + "/datagen.log");
    h.pool_ready = true;
}

/// Desk-profile training run, cached per model kind. Returns the output dir.
std::string ensure_desk(Harness& h, const std::string& model) {
    ensure_pool(h);
    const std::string out = h.work + "/desk_" + model;
    if (fs::exists(out + "/metrics.json")) return out;
    const std::string pool = h.work + "/pool";
    const double t0 = now_seconds();
    const int rc = run_cmd("\"" + h.cli + "\" train --preset desk-mnist --model " + model +
                               " --dataset idx --images \"" + pool + "/train-images.idx\"" +
                               " --labels \"" + pool + "/train-labels.idx\"" +
                               " --test-images \"" + pool + "/test-images.idx\"" +
                               " --test-labels \"" + pool + "/test-labels.idx\"" +
                               " --out \"" + out + "\"",
                           out + ".log");
    h.desk_seconds[model] = now_seconds() - t0;
    if (rc != 0) throw std::runtime_error("training run failed, see " + out + ".log");
    return out;
}

json load_metrics(const std::string& dir) { return json::parse(read_file(dir + "/metrics.json")); }

std::vector<double> trace_losses(const std::string& dir) {
    std::istringstream in(read_file(dir + "/trace.csv"));
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> losses;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t a = line.find(',');
        const std::size_t b = line.find(',', a + 1);
        losses.push_back(std::stod(line.substr(a + 1, b - a - 1)));
    }
    return losses;
}

MembershipCircuit zero_circuit(int qubits, int layers) {
    MembershipCircuit c;
    c.qubits = qubits;
    c.layers = layers;
    c.thetas.assign(MembershipCircuit::theta_count(qubits, layers), 0.0);
    return c;
}

// ---------------------------------------------------------------------------

void check_gradients(Harness& h) {
    ensure_pool(h);
    const std::string log = h.work + "/gradcheck.log";
    const double t0 = now_seconds();
    const int rc = run_cmd("\"" + h.cli + "\" gradcheck", log);
    const double dt = now_seconds() - t0;
    char detail[160];
    std::snprintf(detail, sizeof(detail), "gradcheck exit %d in %.1fs (limit 60s)", rc, dt);
    report(h, 1, "gradient correctness", rc == 0 && dt < 60.0, detail);
}

void check_closed_form_membership(Harness& h) {
    double worst = 0.0;
    for (int layers = 1; layers <= 6; ++layers) {
        const MembershipCircuit c = zero_circuit(1, layers);
        for (int i = 0; i < 100; ++i) {
            const double x = -1.0 + 2.0 * i / 99.0;
            const double want = (std::cos(layers * x) + 1.0) / 2.0;
            worst = std::max(worst, std::abs(eval_membership(c, x) - want));
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail), "max |f - (cos(Lx)+1)/2| = %.3e (limit 1e-12)", worst);
    report(h, 2, "closed-form membership", worst <= 1e-12, detail);
}

void check_noise_table(Harness& h) {
    const std::string out = h.work + "/sweep_mix";
    const std::string log = h.work + "/sweep_mix.log";
    const int rc = run_cmd("\"" + h.cli + "\" noise-sweep --channel mix_dp --placement end --out \"" +
                               out + "\"",
                           log);
    bool ok = rc == 0;
    std::string why = ok ? "" : "sweep exited " + std::to_string(rc);

    // Summary CSV against the expected mean-fidelity column.
    const double want[] = {0.9950, 0.9850, 0.9750, 0.9650, 0.9500};
    double worst_mix = 0.0;
    if (ok) {
        std::istringstream in(read_file(out + "/sweep_summary.csv"));
        std::string line;
        std::getline(in, line);
        int row = 0;
        while (std::getline(in, line) && row < 5) {
            const double mean = std::stod(line.substr(line.find(',') + 1));
            worst_mix = std::max(worst_mix, std::abs(mean - want[row]));
            ++row;
        }
        if (row != 5) {
            ok = false;
            why = "summary has " + std::to_string(row) + " rows";
        } else if (worst_mix > 5e-4) {
            ok = false;
        }
    }

    // The textbook-Kraus channel lands on 1 - 2g/3 instead.
    double worst_dp = 0.0;
    if (ok) {
        SweepConfig cfg;
        cfg.channel = ChannelKind::DP;
        cfg.circuit = zero_circuit(1, 2);
        Rng rng(42);
        for (double& t : cfg.circuit.thetas) t = rng.uniform(-M_PI, M_PI);
        const FidelityTable table = run_sweep(cfg);
        for (std::size_t g = 0; g < table.gammas.size(); ++g) {
            worst_dp = std::max(worst_dp,
                                std::abs(table.means[g] - (1.0 - 2.0 * table.gammas[g] / 3.0)));
        }
        if (worst_dp > 1e-10) ok = false;
    }

    // The convention gap has to be spelled out in the run output.
    const bool documented = read_file(log).find("1 - 2g/3") != std::string::npos;
    if (ok && !documented) {
        ok = false;
        why = "convention note missing from output";
    }

    char detail[200];
    if (why.empty()) {
        std::snprintf(detail, sizeof(detail),
                      "mix_dp off by %.2e (limit 5e-4), dp vs 1-2g/3 off by %.2e (limit 1e-10)",
                      worst_mix, worst_dp);
    } else {
        std::snprintf(detail, sizeof(detail), "%s", why.c_str());
    }
    report(h, 3, "depolarizing fidelity table", ok, detail);
}

void check_amplitude_damping(Harness& h) {
    const MembershipCircuit circ = zero_circuit(1, 1);
    double worst = 0.0;
    bool monotone = true;
    bool exact_at_zero = true;
    double prev_mean = 2.0;
    for (int gi = 0; gi <= 10; ++gi) {
        const double gamma = 0.05 * gi;
        double mean = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double x = -1.0 + 2.0 * i / 99.0;
            const double f =
                circuit_fidelity(circ, x, ChannelKind::AD, gamma, NoisePlacement::EndOfCircuit);
            const double c2 = std::cos(x / 2.0) * std::cos(x / 2.0);
            const double s2 = 1.0 - c2;
            const double want = c2 * c2 + gamma * c2 * s2 +
                                2.0 * c2 * s2 * std::sqrt(1.0 - gamma) + (1.0 - gamma) * s2 * s2;
            worst = std::max(worst, std::abs(f - want));
            if (gamma == 0.0 && f != 1.0) exact_at_zero = false;
            mean += f;
        }
        mean /= 100.0;
        if (mean > prev_mean + 1e-12) monotone = false;
        prev_mean = mean;
    }
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "max formula gap %.2e (limit 1e-10), monotone %s, F(0)=1 %s", worst,
                  monotone ? "yes" : "NO", exact_at_zero ? "exact" : "NOT EXACT");
    report(h, 4, "amplitude-damping closed form", worst <= 1e-10 && monotone && exact_at_zero,
           detail);
}

void check_desk_training(Harness& h) {
    const std::string dir = ensure_desk(h, "hqfnn");
    const json m = load_metrics(dir);
    const double acc = m.at("accuracy").get<double>();
    const std::vector<double> losses = trace_losses(dir);
    const bool loss_drops = losses.size() >= 5 && losses[4] < losses[0];
    const double secs = h.desk_seconds.count("hqfnn") ? h.desk_seconds["hqfnn"] : 0.0;
    const bool in_budget = secs < 1800.0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "accuracy %.3f (floor 0.85), loss %.3f -> %.3f over epochs 1..5, %.0fs",
                  acc, losses.empty() ? 0.0 : losses[0], losses.size() >= 5 ? losses[4] : 0.0,
                  secs);
    report(h, 5, "desk-scale training", acc >= 0.85 && loss_drops && in_budget, detail);
}

bool metrics_schema_ok(const json& m) {
    for (const char* key : {"accuracy", "macro_precision", "macro_recall", "macro_f1"}) {
        if (!m.contains(key) || !m[key].is_number()) return false;
        const double v = m[key].get<double>();
        if (v < 0.0 || v > 1.0) return false;
    }
    return m.contains("n_samples") && m["n_samples"].is_number_integer() &&
           m["n_samples"].get<long long>() == 500;
}

bool confusion_schema_ok(const std::string& dir) {
    std::istringstream in(read_file(dir + "/confusion.csv"));
    std::string line;
    if (!std::getline(in, line) || line.rfind("pred_0,", 0) != 0) return false;
    long long total = 0;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) total += std::stoll(cell);
    }
    return rows == 10 && total == 500;
}

void check_baselines(Harness& h) {
    const std::string cnn = ensure_desk(h, "cnn");
    const std::string fdnn = ensure_desk(h, "fdnn");
    const std::string hqfnn = ensure_desk(h, "hqfnn");
    const double acc_cnn = load_metrics(cnn).at("accuracy").get<double>();
    const double acc_fdnn = load_metrics(fdnn).at("accuracy").get<double>();
    bool schema = true;
    for (const std::string& dir : {cnn, fdnn, hqfnn}) {
        schema = schema && metrics_schema_ok(load_metrics(dir)) && confusion_schema_ok(dir);
    }
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "cnn %.3f, fdnn %.3f (floor 0.80), artifacts %s", acc_cnn, acc_fdnn,
                  schema ? "schema-valid" : "SCHEMA-INVALID");
    report(h, 6, "baseline parity", acc_cnn >= 0.80 && acc_fdnn >= 0.80 && schema, detail);
}

void check_determinism(Harness& h) {
    ensure_pool(h);
    const std::string pool = h.work + "/pool";
    const auto run = [&](const std::string& out) {
        return run_cmd("\"" + h.cli + "\" train --preset desk-mnist --model cnn --dataset idx" +
                           " --images \"" + pool + "/train-images.idx\"" + " --labels \"" + pool +
                           "/train-labels.idx\"" + " --test-images \"" + pool +
                           "/test-images.idx\"" + " --test-labels \"" + pool +
                           "/test-labels.idx\"" + " --out \"" + out + "\"",
                       out + ".log");
    };
    const std::string a = h.work + "/det_a";
    const std::string b = h.work + "/det_b";
    const int ra = run(a);
    const int rb = run(b);
    bool ok = ra == 0 && rb == 0;
    std::string which = "metrics.json, trace.csv, model.ckpt identical";
    if (ok) {
        for (const char* f : {"/metrics.json", "/trace.csv", "/model.ckpt"}) {
            if (read_file(a + f) != read_file(b + f)) {
                ok = false;
                which = std::string(f + 1) + " differs between same-seed runs";
                break;
            }
        }
    } else {
        which = "training exited " + std::to_string(ra) + "/" + std::to_string(rb);
    }
    report(h, 7, "determinism", ok, which);
}

void check_properties(Harness& h) {
    std::string why;

    // Kraus completeness: sum E^dag E = I for every channel and strength.
    for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP, ChannelKind::MixDP}) {
        for (double gamma : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
            const KrausChannel chan = make_channel(kind, gamma);
            cplx s00 = 0, s01 = 0, s10 = 0, s11 = 0;
            for (const Mat2& e : chan.operators) {
                s00 += std::conj(e.e00) * e.e00 + std::conj(e.e10) * e.e10;
                s01 += std::conj(e.e00) * e.e01 + std::conj(e.e10) * e.e11;
                s10 += std::conj(e.e01) * e.e00 + std::conj(e.e11) * e.e10;
                s11 += std::conj(e.e01) * e.e01 + std::conj(e.e11) * e.e11;
            }
            if (std::abs(s00 - 1.0) > 1e-12 || std::abs(s11 - 1.0) > 1e-12 ||
                std::abs(s01) > 1e-12 || std::abs(s10) > 1e-12) {
                why = "Kraus completeness broken for " + channel_name(kind);
            }
        }
    }

    // Noisy evolution keeps density matrices physical.
    if (why.empty()) {
        Rng rng(5);
        for (int trial = 0; trial < 12 && why.empty(); ++trial) {
            MembershipCircuit c;
            c.qubits = trial % 2 ? 2 : 1;
            c.layers = 2;
            c.thetas.resize(MembershipCircuit::theta_count(c.qubits, 2));
            for (double& t : c.thetas) t = rng.uniform(-2.0, 2.0);
            const KrausChannel chan =
                make_channel(static_cast<ChannelKind>(trial % 3), rng.uniform(0.0, 1.0));
            const NoisePlacement pl =
                trial % 2 ? NoisePlacement::EndOfCircuit : NoisePlacement::AfterEachGate;
            const MixedState rho = simulate_noisy(c, rng.uniform(-1.0, 1.0), chan, pl);
            if (std::abs(trace_real(rho) - 1.0) > 1e-12) why = "trace drifted under noise";
            if (!is_hermitian(rho, 1e-12)) why = "hermiticity broken under noise";
        }
    }

    // Fidelity identity and orthogonality.
    if (why.empty()) {
        PureState psi = PureState::zero(1);
        psi = apply_ry(psi, 0, 0.83);
        const MixedState rho = to_mixed(psi);
        if (std::abs(fidelity(rho, rho) - 1.0) > 1e-9) why = "fidelity(rho, rho) != 1";
        PureState one = PureState::zero(1);
        one = apply_ry(one, 0, M_PI);
        if (fidelity(to_mixed(PureState::zero(1)), to_mixed(one)) > 1e-12) {
            why = "orthogonal states report nonzero fidelity";
        }
    }

    // Log-domain product rule equals the naive product.
    if (why.empty()) {
        Rng rng(6);
        for (int d : {2, 7, 16}) {
            FuzzyActivations acts;
            acts.batch = 3;
            acts.input_dim = static_cast<std::size_t>(d);
            acts.num_sets = 4;
            acts.inputs.assign(acts.batch * acts.input_dim, 0.0);
            acts.memberships.resize(acts.batch * acts.input_dim * acts.num_sets);
            for (double& m : acts.memberships) m = rng.uniform(1e-6, 1.0);
            rule_forward(acts);
            for (std::size_t b = 0; b < acts.batch; ++b) {
                for (std::size_t i = 0; i < acts.num_sets; ++i) {
                    double naive = 1.0;
                    for (std::size_t j = 0; j < acts.input_dim; ++j) {
                        naive *= std::max(acts.membership(b, j, i), kMembershipFloor);
                    }
                    if (std::abs(acts.rule[b * acts.num_sets + i] - naive) > 1e-10) {
                        why = "log-domain rule drifts from the naive product";
                    }
                }
            }
        }
    }

    // Confusion counts are conserved and macro metrics match direct sums.
    if (why.empty()) {
        Rng rng(9);
        ConfusionMatrix cm = ConfusionMatrix::zero(4);
        std::vector<long long> true_counts(4, 0);
        for (int i = 0; i < 503; ++i) {
            const int t = static_cast<int>(rng.below(4));
            const int p = static_cast<int>(rng.below(4));
            accumulate(cm, t, p);
            ++true_counts[t];
        }
        if (cm.total() != 503) why = "confusion counts not conserved";
        for (int t = 0; t < 4; ++t) {
            long long row = 0;
            for (int p = 0; p < 4; ++p) row += cm.at(t, p);
            if (row != true_counts[t]) why = "confusion row sums drift";
        }
        const MetricBundle got = macro_metrics(cm);
        double psum = 0.0, rsum = 0.0;
        long long diag = 0;
        for (int c = 0; c < 4; ++c) {
            long long col = 0, row = 0;
            for (int i = 0; i < 4; ++i) {
                col += cm.at(i, c);
                row += cm.at(c, i);
            }
            diag += cm.at(c, c);
            psum += col > 0 ? static_cast<double>(cm.at(c, c)) / col : 0.0;
            rsum += row > 0 ? static_cast<double>(cm.at(c, c)) / row : 0.0;
        }
        const double mp = psum / 4.0, mr = rsum / 4.0;
        const double f1 = (mp + mr) > 0.0 ? 2.0 * mp * mr / (mp + mr) : 0.0;
        if (std::abs(got.accuracy - static_cast<double>(diag) / 503.0) > 1e-12 ||
            std::abs(got.macro_precision - mp) > 1e-12 || std::abs(got.macro_recall - mr) > 1e-12 ||
            std::abs(got.macro_f1 - f1) > 1e-12) {
            why = "macro metrics disagree with direct enumeration";
        }
    }

    report(h, 8, "property suite", why.empty(), why.empty() ? "all properties hold" : why);
}

void check_two_qubit(Harness& h) {
    double worst = 0.0;
    const MembershipCircuit c = zero_circuit(2, 1);
    for (int i = 0; i < 100; ++i) {
        const double x = -1.0 + 2.0 * i / 99.0;
        worst = std::max(worst, std::abs(membership(c, x) - (std::cos(x) + 1.0) / 2.0));
    }

    ensure_pool(h);
    const std::string pool = h.work + "/pool";
    const std::string out = h.work + "/two_qubit";
    const int rc = run_cmd("\"" + h.cli + "\" train --model hqfnn --qnn-qubits 2 --qnn-layers 1" +
                               " --epochs 1 --train-subset 50 --test-subset 20 --seed 7" +
                               " --dataset idx --images \"" + pool + "/train-images.idx\"" +
                               " --labels \"" + pool + "/train-labels.idx\"" + " --test-images \"" +
                               pool + "/test-images.idx\"" + " --test-labels \"" + pool +
                               "/test-labels.idx\"" + " --out \"" + out + "\"",
                           out + ".log");
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max |f - (cos x + 1)/2| = %.2e (limit 1e-12), 1-epoch run exit %d", worst, rc);
    report(h, 9, "two-qubit extension", worst <= 1e-12 && rc == 0, detail);
}

}  // namespace

int main(int argc, char** argv) {
    Harness h;
    h.work = (fs::temp_directory_path() / "hqfnn_acceptance").string();
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        const auto next = [&]() -> std::string {
            if (i + 1 >= argc) {
                std::cerr << "error: " << arg << " needs a value\n";
                std::exit(2);
            }
            return argv[++i];
        };
        if (arg == "--only") only = std::atoi(next().c_str());
        else if (arg == "--cli") h.cli = next();
        else if (arg == "--datagen") h.datagen = next();
        else if (arg == "--workdir") h.work = next();
        else {
            std::cerr << "usage: acceptance [--only N] [--cli PATH] [--datagen PATH] [--workdir DIR]\n";
            return arg == "--help" || arg == "-h" ? 0 : 2;
        }
    }

    std::error_code ec;
    fs::remove_all(h.work, ec);
    fs::create_directories(h.work);

    using Check = void (*)(Harness&);
    const Check checks[] = {check_gradients,     check_closed_form_membership,
                            check_noise_table,   check_amplitude_damping,
                            check_desk_training, check_baselines,
                            check_determinism,   check_properties,
                            check_two_qubit};
    int ran = 0;
    try {
        for (int i = 0; i < 9; ++i) {
            if (only != 0 && only != i + 1) continue;
            checks[i](h);
            ++ran;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::printf("acceptance: %d/%d checks passed\n", ran - h.failures, ran);
    return h.failures == 0 ? 0 : 1;
}
