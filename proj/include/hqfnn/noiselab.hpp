#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hqfnn/qcore.hpp"
#include "hqfnn/qnn.hpp"

namespace hqfnn {

/// Where the channel acts: behind every single-qubit rotation, or once per
/// qubit after the full circuit.
enum class NoisePlacement { AfterEachGate, EndOfCircuit };

NoisePlacement placement_from_name(const std::string& name);
std::string placement_name(NoisePlacement placement);

struct SweepConfig {
    ChannelKind channel = ChannelKind::MixDP;
    std::vector<double> gammas = {0.01, 0.03, 0.05, 0.07, 0.1};
    int x_samples = 100;
    MembershipCircuit circuit;
    NoisePlacement placement = NoisePlacement::EndOfCircuit;

    void validate() const;
};

/// Fidelity of the noisy circuit against the noiseless one, per (gamma, x),
/// plus the per-gamma arithmetic mean over the x grid.
struct FidelityTable {
    std::vector<double> gammas;
    std::vector<double> xs;
    std::vector<double> grid;   // gammas.size() rows of xs.size() values
    std::vector<double> means;  // one per gamma

    double at(std::size_t gamma_idx, std::size_t x_idx) const {
        return grid[gamma_idx * xs.size() + x_idx];
    }
};

/// Density-matrix evolution of the membership circuit on input x with the
/// channel applied per `placement`. CNOTs in multi-qubit circuits are left
/// noiseless; the literal placement is behind single-qubit rotations.
MixedState simulate_noisy(const MembershipCircuit& circ, double x, const KrausChannel& channel,
                          NoisePlacement placement);

/// F(noiseless output, noisy output), in [0, 1].
double circuit_fidelity(const MembershipCircuit& circ, double x, ChannelKind channel,
                        double gamma, NoisePlacement placement);

/// The x grid is x_samples evenly spaced points covering [-1, 1] (a single
/// sample sits at 0), so sweeps are deterministic.
std::vector<double> sweep_grid_x(int x_samples);

FidelityTable run_sweep(const SweepConfig& cfg);

/// "gamma,x,fidelity" rows, 6 decimal places.
std::string sweep_grid_csv(const FidelityTable& table);
/// "gamma,mean_fidelity" rows, 6 decimal places.
std::string sweep_summary_csv(const FidelityTable& table);

}  // namespace hqfnn
