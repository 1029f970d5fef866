#include "hqfnn/qnn.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hqfnn/errors.hpp"

namespace hqfnn {

std::size_t MembershipCircuit::theta_count(int qubits, int layers) {
    const auto l = static_cast<std::size_t>(layers);
    return qubits == 1 ? 3 * l : static_cast<std::size_t>(qubits) * l;
}

void MembershipCircuit::validate() const {
    if (qubits < 1 || qubits > kMaxQubits) {
        throw std::invalid_argument("circuit qubit count must be in [1, 8]");
    }
    if (layers < 1) {
        throw std::invalid_argument("circuit needs at least one layer");
    }
    if (thetas.size() != theta_count(qubits, layers)) {
        throw std::invalid_argument("theta vector length does not match (qubits, layers)");
    }
    if (observable_qubit < 0 || observable_qubit >= qubits) {
        throw std::invalid_argument("observable qubit out of range");
    }
    for (double t : thetas) {
        if (!std::isfinite(t)) throw std::invalid_argument("circuit angle not finite");
    }
}

double eval_membership(const MembershipCircuit& circ, double x) {
    if (circ.qubits != 1) {
        throw WrongCircuitKind("single-qubit evaluation on a multi-qubit circuit");
    }
    circ.validate();
    if (!std::isfinite(x)) throw std::invalid_argument("input angle not finite");

    // Two-amplitude register kept in scalars; this is the training hot path.
    cplx a0{1.0, 0.0}, a1{0.0, 0.0};
    auto ry = [&](double theta) {
        const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
        const cplx b0 = c * a0 - s * a1;
        const cplx b1 = s * a0 + c * a1;
        a0 = b0;
        a1 = b1;
    };
    auto rz = [&](double theta) {
        const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
        a0 *= cplx{c, -s};
        a1 *= cplx{c, s};
    };

    const double* t = circ.thetas.data();
    for (int l = 0; l < circ.layers; ++l, t += 3) {
        ry(x);
        rz(t[0]);
        ry(t[1]);
        rz(t[2]);
    }
    // <Z> = |a0|^2 - |a1|^2 and the norm is 1, so f = (<Z>+1)/2 = |a0|^2.
    return std::norm(a0);
}

double eval_membership_multi(const MembershipCircuit& circ, double x) {
    if (circ.qubits < 2) {
        throw WrongCircuitKind("multi-qubit evaluation on a single-qubit circuit");
    }
    circ.validate();
    if (!std::isfinite(x)) throw std::invalid_argument("input angle not finite");

    PureState s = PureState::zero(circ.qubits);
    const int n = circ.qubits;
    for (int l = 0; l < circ.layers; ++l) {
        for (int q = 0; q < n; ++q) s = apply_ry(s, q, x);
        for (int q = 0; q < n; ++q) s = apply_ry(s, q, circ.thetas[static_cast<std::size_t>(l) * n + q]);
        for (int q = 0; q + 1 < n; ++q) s = apply_cnot(s, q, q + 1);
    }
    return (expectation_z(s, circ.observable_qubit) + 1.0) / 2.0;
}

double membership(const MembershipCircuit& circ, double x) {
    return circ.qubits == 1 ? eval_membership(circ, x) : eval_membership_multi(circ, x);
}

std::vector<double> param_shift_grad(const MembershipCircuit& circ, double x) {
    circ.validate();
    constexpr double half_pi = std::numbers::pi / 2.0;
    MembershipCircuit shifted = circ;
    std::vector<double> grad(circ.thetas.size());
    for (std::size_t i = 0; i < circ.thetas.size(); ++i) {
        shifted.thetas[i] = circ.thetas[i] + half_pi;
        const double plus = membership(shifted, x);
        shifted.thetas[i] = circ.thetas[i] - half_pi;
        const double minus = membership(shifted, x);
        shifted.thetas[i] = circ.thetas[i];
        grad[i] = 0.5 * (plus - minus);
    }
    return grad;
}

std::vector<double> batch_eval(const MembershipCircuit& circ, const std::vector<double>& xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(membership(circ, x));
    return out;
}

}  // namespace hqfnn
