#include "hqfnn/noiselab.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace hqfnn {

namespace {

void append_fmt(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += buf;
}

/// The noisy twin of the qnn evaluators: identical gate order, with the
/// channel dropped in per the placement.
MixedState evolve(const MembershipCircuit& circ, double x, const KrausChannel& channel,
                  NoisePlacement placement) {
    const bool per_gate = placement == NoisePlacement::AfterEachGate;
    MixedState rho = to_mixed(PureState::zero(circ.qubits));

    auto rotate = [&](int qubit, const Mat2& u) {
        rho = apply_gate(rho, qubit, u);
        if (per_gate) rho = apply_channel(rho, channel, qubit);
    };

    if (circ.qubits == 1) {
        const double* t = circ.thetas.data();
        for (int l = 0; l < circ.layers; ++l, t += 3) {
            rotate(0, mat2_ry(x));
            rotate(0, mat2_rz(t[0]));
            rotate(0, mat2_ry(t[1]));
            rotate(0, mat2_rz(t[2]));
        }
    } else {
        const int n = circ.qubits;
        for (int l = 0; l < circ.layers; ++l) {
            for (int q = 0; q < n; ++q) rotate(q, mat2_ry(x));
            for (int q = 0; q < n; ++q) {
                rotate(q, mat2_ry(circ.thetas[static_cast<std::size_t>(l) * n + q]));
            }
            for (int q = 0; q + 1 < n; ++q) rho = apply_cnot(rho, q, q + 1);
        }
    }
    if (!per_gate) {
        for (int q = 0; q < circ.qubits; ++q) rho = apply_channel(rho, channel, q);
    }
    return rho;
}

}  // namespace

NoisePlacement placement_from_name(const std::string& name) {
    if (name == "after_each_gate") return NoisePlacement::AfterEachGate;
    if (name == "end_of_circuit") return NoisePlacement::EndOfCircuit;
    throw std::invalid_argument("unknown noise placement: " + name);
}

std::string placement_name(NoisePlacement placement) {
    return placement == NoisePlacement::AfterEachGate ? "after_each_gate" : "end_of_circuit";
}

void SweepConfig::validate() const {
    circuit.validate();
    if (x_samples < 1) throw std::invalid_argument("x sample count must be positive");
    if (gammas.empty()) throw std::invalid_argument("gamma list must be non-empty");
    for (double g : gammas) {
        if (!(g >= 0.0 && g <= 1.0)) {
            throw std::invalid_argument("noise probability must be in [0, 1]");
        }
    }
}

MixedState simulate_noisy(const MembershipCircuit& circ, double x, const KrausChannel& channel,
                          NoisePlacement placement) {
    circ.validate();
    if (!std::isfinite(x)) throw std::invalid_argument("input angle not finite");
    if (!(channel.gamma >= 0.0 && channel.gamma <= 1.0)) {
        throw std::invalid_argument("noise probability must be in [0, 1]");
    }
    return evolve(circ, x, channel, placement);
}

double circuit_fidelity(const MembershipCircuit& circ, double x, ChannelKind channel,
                        double gamma, NoisePlacement placement) {
    const KrausChannel chan = make_channel(channel, gamma);
    // gamma 0 is the identity channel; the two evolutions coincide by
    // construction, so report the fidelity without an eigensolve round trip.
    if (gamma == 0.0) return 1.0;
    const MixedState noisy = simulate_noisy(circ, x, chan, placement);
    const MixedState clean = simulate_noisy(circ, x, make_channel(channel, 0.0), placement);
    return fidelity(clean, noisy);
}

std::vector<double> sweep_grid_x(int x_samples) {
    if (x_samples < 1) throw std::invalid_argument("x sample count must be positive");
    if (x_samples == 1) return {0.0};
    std::vector<double> xs(static_cast<std::size_t>(x_samples));
    for (int i = 0; i < x_samples; ++i) {
        xs[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (x_samples - 1);
    }
    return xs;
}

FidelityTable run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    FidelityTable table;
    table.gammas = cfg.gammas;
    table.xs = sweep_grid_x(cfg.x_samples);
    table.grid.reserve(table.gammas.size() * table.xs.size());
    for (double gamma : table.gammas) {
        double sum = 0.0;
        for (double x : table.xs) {
            const double f = circuit_fidelity(cfg.circuit, x, cfg.channel, gamma, cfg.placement);
            table.grid.push_back(f);
            sum += f;
        }
        table.means.push_back(sum / static_cast<double>(table.xs.size()));
    }
    return table;
}

std::string sweep_grid_csv(const FidelityTable& table) {
    std::string out = "gamma,x,fidelity\n";
    for (std::size_t g = 0; g < table.gammas.size(); ++g) {
        for (std::size_t i = 0; i < table.xs.size(); ++i) {
            append_fmt(out, table.gammas[g]);
            out += ',';
            append_fmt(out, table.xs[i]);
            out += ',';
            append_fmt(out, table.at(g, i));
            out += '\n';
        }
    }
    return out;
}

std::string sweep_summary_csv(const FidelityTable& table) {
    std::string out = "gamma,mean_fidelity\n";
    for (std::size_t g = 0; g < table.gammas.size(); ++g) {
        append_fmt(out, table.gammas[g]);
        out += ',';
        append_fmt(out, table.means[g]);
        out += '\n';
    }
    return out;
}

}  // namespace hqfnn
