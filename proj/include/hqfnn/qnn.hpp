#pragma once

#include <cstddef>
#include <vector>

#include "hqfnn/qcore.hpp"

namespace hqfnn {

/// Data re-uploading membership circuit. Each layer starts by encoding the
/// input with R_y(x). The single-qubit form then applies R_z, R_y, R_z with
/// three trainable angles per layer; the multi-qubit form applies one
/// trainable R_y per qubit followed by a CNOT chain down the register.
/// The membership value is (<Z on observable_qubit> + 1) / 2, always in [0,1].
struct MembershipCircuit {
    int qubits = 1;
    int layers = 1;
    std::vector<double> thetas;  // length 3L when qubits == 1, n*L otherwise
    int observable_qubit = 0;

    static std::size_t theta_count(int qubits, int layers);

    void validate() const;
};

/// Single-qubit evaluation; throws WrongCircuitKind unless qubits == 1.
double eval_membership(const MembershipCircuit& circ, double x);

/// Multi-qubit evaluation; throws WrongCircuitKind unless qubits >= 2.
double eval_membership_multi(const MembershipCircuit& circ, double x);

/// Dispatches to the evaluator matching the circuit's qubit count.
double membership(const MembershipCircuit& circ, double x);

/// d(membership)/d(theta_i) for every parameter, via the shift rule
/// 0.5 * (f(theta_i + pi/2) - f(theta_i - pi/2)); exact for rotation gates.
std::vector<double> param_shift_grad(const MembershipCircuit& circ, double x);

/// Elementwise membership over a batch, order preserved.
std::vector<double> batch_eval(const MembershipCircuit& circ, const std::vector<double>& xs);

}  // namespace hqfnn
