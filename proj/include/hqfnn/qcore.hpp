#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace hqfnn {

using cplx = std::complex<double>;

constexpr int kMaxQubits = 8;

/// Pure n-qubit state as a dense amplitude vector of length 2^n.
/// Qubit 0 is the most significant bit of the basis index: for n = 2,
/// |10> means qubit 0 in state 1, qubit 1 in state 0, and sits at index 2.
struct PureState {
    int num_qubits = 0;
    std::vector<cplx> amps;

    static PureState zero(int n);  // |0...0>

    std::size_t dim() const { return amps.size(); }
};

/// Density matrix of an n-qubit system, row-major 2^n x 2^n.
struct MixedState {
    int num_qubits = 0;
    std::vector<cplx> rho;

    std::size_t dim() const { return std::size_t{1} << num_qubits; }
    cplx& at(std::size_t r, std::size_t c) { return rho[r * dim() + c]; }
    const cplx& at(std::size_t r, std::size_t c) const { return rho[r * dim() + c]; }
};

/// 2x2 complex matrix, the carrier for single-qubit gates and Kraus operators.
struct Mat2 {
    cplx e00, e01, e10, e11;
};

Mat2 mat2_ry(double theta);
Mat2 mat2_rz(double theta);

enum class ChannelKind { AD, DP, MixDP };

std::string channel_name(ChannelKind kind);

/// Single-qubit noise channel in operator-sum form: rho -> sum_k E_k rho E_k^dag.
/// The operator set always satisfies sum_k E_k^dag E_k = I.
///
/// AD     : amplitude damping, {diag(1, sqrt(1-g)), [[0, sqrt(g)],[0,0]]}.
/// DP     : depolarizing, {sqrt(1-g) I, sqrt(g/3) X, sqrt(g/3) Z, sqrt(g/3) Y}.
/// MixDP  : the mixing convention rho -> (1-g) rho + g I/2, in Kraus form
///          {sqrt(1-3g/4) I, sqrt(g/4) X, sqrt(g/4) Y, sqrt(g/4) Z}.
/// The two depolarizing conventions deliberately coexist: a single application
/// to a pure state costs 2g/3 of fidelity under DP but only g/2 under MixDP.
struct KrausChannel {
    ChannelKind kind;
    double gamma = 0.0;
    std::vector<Mat2> operators;
};

// -- pure-state operations -------------------------------------------------

PureState apply_ry(const PureState& state, int qubit, double theta);
PureState apply_rz(const PureState& state, int qubit, double theta);
PureState apply_cnot(const PureState& state, int control, int target);

/// <Z> on one qubit: sum over basis states of +-|amp|^2, sign by bit value.
double expectation_z(const PureState& state, int qubit);

double norm_squared(const PureState& state);

// -- density-matrix operations ----------------------------------------------

MixedState to_mixed(const PureState& state);  // |psi><psi|

KrausChannel make_channel(ChannelKind kind, double gamma);
ChannelKind channel_from_name(const std::string& name);

/// rho -> U rho U^dag with U a single-qubit gate on `qubit`.
MixedState apply_gate(const MixedState& rho, int qubit, const Mat2& u);

/// rho -> C rho C^dag; CNOT is a basis permutation, so this is index shuffling.
MixedState apply_cnot(const MixedState& rho, int control, int target);

/// rho -> sum_k E_k rho E_k^dag with all operators acting on `qubit`.
MixedState apply_channel(const MixedState& rho, const KrausChannel& channel, int qubit);

/// Uhlmann fidelity F(rho, sigma) = Tr(sqrt(sqrt(rho) sigma sqrt(rho)))^2.
/// Computed by Hermitian eigendecomposition with eigenvalues clamped at zero;
/// result clamped to [0, 1].
double fidelity(const MixedState& rho, const MixedState& sigma);

double trace_real(const MixedState& rho);
bool is_hermitian(const MixedState& rho, double tol);

/// Eigenvalues of a Hermitian density matrix, ascending.
std::vector<double> hermitian_eigenvalues(const MixedState& rho);

}  // namespace hqfnn
