#include "hqfnn/qcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hqfnn/errors.hpp"

namespace hqfnn {

namespace {

void check_qubit(int num_qubits, int qubit) {
    if (qubit < 0 || qubit >= num_qubits) {
        throw std::invalid_argument("qubit index " + std::to_string(qubit) +
                                    " out of range for " + std::to_string(num_qubits) +
                                    " qubit(s)");
    }
}

// Bit mask selecting `qubit` inside a basis index. Qubit 0 is the most
// significant bit.
std::size_t qubit_mask(int num_qubits, int qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

PureState apply_single_qubit(const PureState& state, int qubit, const Mat2& u) {
    check_qubit(state.num_qubits, qubit);
    const std::size_t mask = qubit_mask(state.num_qubits, qubit);
    PureState out = state;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if (i & mask) continue;
        const cplx a0 = state.amps[i];
        const cplx a1 = state.amps[i | mask];
        out.amps[i] = u.e00 * a0 + u.e01 * a1;
        out.amps[i | mask] = u.e10 * a0 + u.e11 * a1;
    }
    return out;
}

// rho -> A rho acting on one qubit from the left.
MixedState left_multiply(const MixedState& rho, int qubit, const Mat2& a) {
    const std::size_t dim = rho.dim();
    const std::size_t mask = qubit_mask(rho.num_qubits, qubit);
    MixedState out = rho;
    for (std::size_t r = 0; r < dim; ++r) {
        if (r & mask) continue;
        for (std::size_t c = 0; c < dim; ++c) {
            const cplx r0 = rho.rho[r * dim + c];
            const cplx r1 = rho.rho[(r | mask) * dim + c];
            out.rho[r * dim + c] = a.e00 * r0 + a.e01 * r1;
            out.rho[(r | mask) * dim + c] = a.e10 * r0 + a.e11 * r1;
        }
    }
    return out;
}

// rho -> rho A^dag acting on one qubit from the right.
MixedState right_multiply_dag(const MixedState& rho, int qubit, const Mat2& a) {
    const std::size_t dim = rho.dim();
    const std::size_t mask = qubit_mask(rho.num_qubits, qubit);
    MixedState out = rho;
    for (std::size_t c = 0; c < dim; ++c) {
        if (c & mask) continue;
        for (std::size_t r = 0; r < dim; ++r) {
            const cplx c0 = rho.rho[r * dim + c];
            const cplx c1 = rho.rho[r * dim + (c | mask)];
            out.rho[r * dim + c] = c0 * std::conj(a.e00) + c1 * std::conj(a.e01);
            out.rho[r * dim + (c | mask)] = c0 * std::conj(a.e10) + c1 * std::conj(a.e11);
        }
    }
    return out;
}

// Cyclic Jacobi eigensolver for a Hermitian matrix (dims here are at most
// 2^kMaxQubits). Destroys `a`. When `v` is non-null, fills it with the
// eigenvector matrix: A = V diag(evals) V^dag, eigenvectors in columns.
// For a pivot apq = m e^{i phi} the zeroing rotation is
// J = [[c, -s e^{i phi}], [s e^{-i phi}, c]] with tan(2 theta) = 2m / (app - aqq).
void jacobi_hermitian(std::vector<cplx>& a, std::size_t n, std::vector<double>& evals,
                      std::vector<cplx>* v) {
    constexpr double kTol = 1e-14;
    constexpr int kMaxSweeps = 60;

    if (v != nullptr) {
        v->assign(n * n, cplx{0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) (*v)[i * n + i] = 1.0;
    }

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = r + 1; c < n; ++c) s += std::norm(a[r * n + c]);
        return s;
    };

    for (int sweep = 0; sweep < kMaxSweeps && off_norm() > kTol * kTol; ++sweep) {
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p].real();
                const double aqq = a[q * n + q].real();
                const cplx eiphi = apq / std::abs(apq);
                const double m = std::abs(apq);
                const double theta = 0.5 * std::atan2(2.0 * m, app - aqq);
                const double c = std::cos(theta), s = std::sin(theta);

                for (std::size_t k = 0; k < n; ++k) {  // A <- J^dag A
                    const cplx akp = a[p * n + k];
                    const cplx akq = a[q * n + k];
                    a[p * n + k] = c * akp + s * eiphi * akq;
                    a[q * n + k] = -s * std::conj(eiphi) * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {  // A <- A J
                    const cplx akp = a[k * n + p];
                    const cplx akq = a[k * n + q];
                    a[k * n + p] = c * akp + s * std::conj(eiphi) * akq;
                    a[k * n + q] = -s * eiphi * akp + c * akq;
                }
                if (v != nullptr) {
                    for (std::size_t k = 0; k < n; ++k) {  // V <- V J
                        const cplx vkp = (*v)[k * n + p];
                        const cplx vkq = (*v)[k * n + q];
                        (*v)[k * n + p] = c * vkp + s * std::conj(eiphi) * vkq;
                        (*v)[k * n + q] = -s * eiphi * vkp + c * vkq;
                    }
                }
            }
        }
    }

    evals.resize(n);
    for (std::size_t i = 0; i < n; ++i) evals[i] = a[i * n + i].real();
}

void hermitian_eig_values(std::vector<cplx>& a, std::size_t n, std::vector<double>& evals) {
    jacobi_hermitian(a, n, evals, nullptr);
    std::sort(evals.begin(), evals.end());
}

void hermitian_eig(std::vector<cplx> a, std::size_t n, std::vector<double>& evals,
                   std::vector<cplx>& v) {
    jacobi_hermitian(a, n, evals, &v);
}

}  // namespace

PureState PureState::zero(int n) {
    if (n < 1 || n > kMaxQubits) {
        throw std::invalid_argument("qubit count must be in [1, " +
                                    std::to_string(kMaxQubits) + "], got " +
                                    std::to_string(n));
    }
    PureState s;
    s.num_qubits = n;
    s.amps.assign(std::size_t{1} << n, cplx{0.0, 0.0});
    s.amps[0] = 1.0;
    return s;
}

Mat2 mat2_ry(double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    return Mat2{c, -s, s, c};
}

Mat2 mat2_rz(double theta) {
    return Mat2{std::polar(1.0, -theta / 2.0), 0.0, 0.0, std::polar(1.0, theta / 2.0)};
}

PureState apply_ry(const PureState& state, int qubit, double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("rotation angle must be finite");
    return apply_single_qubit(state, qubit, mat2_ry(theta));
}

PureState apply_rz(const PureState& state, int qubit, double theta) {
    if (!std::isfinite(theta)) throw std::invalid_argument("rotation angle must be finite");
    return apply_single_qubit(state, qubit, mat2_rz(theta));
}

PureState apply_cnot(const PureState& state, int control, int target) {
    check_qubit(state.num_qubits, control);
    check_qubit(state.num_qubits, target);
    if (control == target) {
        throw std::invalid_argument("cnot control and target must differ");
    }
    const std::size_t cmask = qubit_mask(state.num_qubits, control);
    const std::size_t tmask = qubit_mask(state.num_qubits, target);
    PureState out = state;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        if (i & cmask) out.amps[i] = state.amps[i ^ tmask];
    }
    return out;
}

double expectation_z(const PureState& state, int qubit) {
    check_qubit(state.num_qubits, qubit);
    const std::size_t mask = qubit_mask(state.num_qubits, qubit);
    double e = 0.0;
    for (std::size_t i = 0; i < state.dim(); ++i) {
        const double p = std::norm(state.amps[i]);
        e += (i & mask) ? -p : p;
    }
    return e;
}

double norm_squared(const PureState& state) {
    double n = 0.0;
    for (const cplx& a : state.amps) n += std::norm(a);
    return n;
}

MixedState to_mixed(const PureState& state) {
    MixedState m;
    m.num_qubits = state.num_qubits;
    const std::size_t dim = state.dim();
    m.rho.resize(dim * dim);
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            m.rho[r * dim + c] = state.amps[r] * std::conj(state.amps[c]);
        }
    }
    return m;
}

std::string channel_name(ChannelKind kind) {
    switch (kind) {
        case ChannelKind::AD: return "ad";
        case ChannelKind::DP: return "dp";
        case ChannelKind::MixDP: return "mix_dp";
    }
    return "?";
}

ChannelKind channel_from_name(const std::string& name) {
    if (name == "ad" || name == "AD") return ChannelKind::AD;
    if (name == "dp" || name == "DP") return ChannelKind::DP;
    if (name == "mix_dp" || name == "MIX_DP") return ChannelKind::MixDP;
    throw std::invalid_argument("unknown channel name: " + name);
}

KrausChannel make_channel(ChannelKind kind, double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("channel probability must be in [0, 1], got " +
                                    std::to_string(gamma));
    }
    KrausChannel ch;
    ch.kind = kind;
    ch.gamma = gamma;
    const cplx i{0.0, 1.0};
    switch (kind) {
        case ChannelKind::AD:
            ch.operators = {
                Mat2{1.0, 0.0, 0.0, std::sqrt(1.0 - gamma)},
                Mat2{0.0, std::sqrt(gamma), 0.0, 0.0},
            };
            break;
        case ChannelKind::DP: {
            const double w0 = std::sqrt(1.0 - gamma);
            const double w = std::sqrt(gamma / 3.0);
            ch.operators = {
                Mat2{w0, 0.0, 0.0, w0},    // I
                Mat2{0.0, w, w, 0.0},      // X
                Mat2{w, 0.0, 0.0, -w},     // Z
                Mat2{0.0, -i * w, i * w, 0.0},  // Y
            };
            break;
        }
        case ChannelKind::MixDP: {
            const double w0 = std::sqrt(1.0 - 0.75 * gamma);
            const double w = std::sqrt(gamma / 4.0);
            ch.operators = {
                Mat2{w0, 0.0, 0.0, w0},
                Mat2{0.0, w, w, 0.0},
                Mat2{0.0, -i * w, i * w, 0.0},
                Mat2{w, 0.0, 0.0, -w},
            };
            break;
        }
    }
    return ch;
}

MixedState apply_gate(const MixedState& rho, int qubit, const Mat2& u) {
    check_qubit(rho.num_qubits, qubit);
    return right_multiply_dag(left_multiply(rho, qubit, u), qubit, u);
}

MixedState apply_cnot(const MixedState& rho, int control, int target) {
    check_qubit(rho.num_qubits, control);
    check_qubit(rho.num_qubits, target);
    if (control == target) {
        throw std::invalid_argument("cnot control and target must differ");
    }
    const std::size_t cmask = qubit_mask(rho.num_qubits, control);
    const std::size_t tmask = qubit_mask(rho.num_qubits, target);
    const std::size_t dim = rho.dim();
    MixedState out = rho;
    for (std::size_t r = 0; r < dim; ++r) {
        const std::size_t pr = (r & cmask) ? (r ^ tmask) : r;
        for (std::size_t c = 0; c < dim; ++c) {
            const std::size_t pc = (c & cmask) ? (c ^ tmask) : c;
            out.rho[r * dim + c] = rho.rho[pr * dim + pc];
        }
    }
    return out;
}

MixedState apply_channel(const MixedState& rho, const KrausChannel& channel, int qubit) {
    check_qubit(rho.num_qubits, qubit);
    MixedState out;
    out.num_qubits = rho.num_qubits;
    out.rho.assign(rho.rho.size(), cplx{0.0, 0.0});
    for (const Mat2& e : channel.operators) {
        const MixedState term = right_multiply_dag(left_multiply(rho, qubit, e), qubit, e);
        for (std::size_t k = 0; k < out.rho.size(); ++k) out.rho[k] += term.rho[k];
    }
    return out;
}

double trace_real(const MixedState& rho) {
    const std::size_t dim = rho.dim();
    double t = 0.0;
    for (std::size_t r = 0; r < dim; ++r) t += rho.rho[r * dim + r].real();
    return t;
}

bool is_hermitian(const MixedState& rho, double tol) {
    const std::size_t dim = rho.dim();
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            if (std::abs(rho.rho[r * dim + c] - std::conj(rho.rho[c * dim + r])) > tol) {
                return false;
            }
        }
    }
    return true;
}

std::vector<double> hermitian_eigenvalues(const MixedState& rho) {
    std::vector<cplx> a = rho.rho;
    std::vector<double> evals;
    hermitian_eig_values(a, rho.dim(), evals);
    return evals;
}

double fidelity(const MixedState& rho, const MixedState& sigma) {
    if (rho.num_qubits != sigma.num_qubits) {
        throw std::invalid_argument("fidelity requires states of equal dimension");
    }
    const std::size_t n = rho.dim();

    // sqrt(rho) from the eigendecomposition, round-off negatives clamped.
    std::vector<double> evals;
    std::vector<cplx> v;
    hermitian_eig(rho.rho, n, evals, v);
    // Anything inside the clamp band is eigensolver round-off on a true zero;
    // letting it through would surface as sqrt(eps) ~ 1e-8 in the result.
    std::vector<double> roots(n);
    for (std::size_t k = 0; k < n; ++k) {
        roots[k] = evals[k] > 1e-10 ? std::sqrt(evals[k]) : 0.0;
    }
    std::vector<cplx> sqrt_rho(n * n, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            cplx acc{0.0, 0.0};
            for (std::size_t k = 0; k < n; ++k) {
                acc += v[r * n + k] * roots[k] * std::conj(v[c * n + k]);
            }
            sqrt_rho[r * n + c] = acc;
        }
    }

    // m = sqrt(rho) sigma sqrt(rho)
    std::vector<cplx> tmp(n * n, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx s = sqrt_rho[r * n + k];
            if (s == cplx{0.0, 0.0}) continue;
            for (std::size_t c = 0; c < n; ++c) tmp[r * n + c] += s * sigma.rho[k * n + c];
        }
    std::vector<cplx> m(n * n, cplx{0.0, 0.0});
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx t = tmp[r * n + k];
            if (t == cplx{0.0, 0.0}) continue;
            for (std::size_t c = 0; c < n; ++c) m[r * n + c] += t * sqrt_rho[k * n + c];
        }

    // Hermitize before the final eigensolve; the product accumulates round-off.
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = r; c < n; ++c) {
            const cplx h = 0.5 * (m[r * n + c] + std::conj(m[c * n + r]));
            m[r * n + c] = h;
            m[c * n + r] = std::conj(h);
        }
    }

    std::vector<double> lam;
    hermitian_eig_values(m, n, lam);
    double sum = 0.0;
    for (double l : lam) sum += l > 1e-12 ? std::sqrt(l) : 0.0;
    const double f = sum * sum;
    return std::clamp(f, 0.0, 1.0);
}

}  // namespace hqfnn
