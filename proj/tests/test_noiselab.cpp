#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "hqfnn/noiselab.hpp"
#include "hqfnn/rng.hpp"

using namespace hqfnn;

namespace {

MembershipCircuit circuit_1q(int layers, const std::vector<double>& thetas) {
    MembershipCircuit c;
    c.qubits = 1;
    c.layers = layers;
    c.thetas = thetas;
    return c;
}

MembershipCircuit random_circuit(int qubits, int layers, std::uint64_t seed) {
    MembershipCircuit c;
    c.qubits = qubits;
    c.layers = layers;
    c.thetas.resize(MembershipCircuit::theta_count(qubits, layers));
    Rng rng(seed);
    for (double& t : c.thetas) t = rng.uniform(-2.0, 2.0);
    return c;
}

/// The noiseless evolution, rebuilt gate by gate.
PureState pure_output(const MembershipCircuit& circ, double x) {
    PureState s = PureState::zero(circ.qubits);
    if (circ.qubits == 1) {
        const double* t = circ.thetas.data();
        for (int l = 0; l < circ.layers; ++l, t += 3) {
            s = apply_ry(s, 0, x);
            s = apply_rz(s, 0, t[0]);
            s = apply_ry(s, 0, t[1]);
            s = apply_rz(s, 0, t[2]);
        }
    } else {
        const int n = circ.qubits;
        for (int l = 0; l < circ.layers; ++l) {
            for (int q = 0; q < n; ++q) s = apply_ry(s, q, x);
            for (int q = 0; q < n; ++q) {
                s = apply_ry(s, q, circ.thetas[static_cast<std::size_t>(l) * n + q]);
            }
            for (int q = 0; q + 1 < n; ++q) s = apply_cnot(s, q, q + 1);
        }
    }
    return s;
}

double max_entry_diff(const MixedState& a, const MixedState& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rho.size(); ++i) {
        worst = std::max(worst, std::abs(a.rho[i] - b.rho[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("zero noise reproduces the pure circuit as a rank-1 density matrix") {
    for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP, ChannelKind::MixDP}) {
        for (NoisePlacement pl : {NoisePlacement::AfterEachGate, NoisePlacement::EndOfCircuit}) {
            const KrausChannel chan = make_channel(kind, 0.0);
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                const MembershipCircuit c1 = random_circuit(1, 3, 100 + seed);
                const MixedState got = simulate_noisy(c1, 0.37, chan, pl);
                CHECK(max_entry_diff(got, to_mixed(pure_output(c1, 0.37))) < 1e-15);

                const MembershipCircuit c2 = random_circuit(2, 2, 200 + seed);
                const MixedState got2 = simulate_noisy(c2, -0.61, chan, pl);
                CHECK(max_entry_diff(got2, to_mixed(pure_output(c2, -0.61))) < 1e-15);
            }
        }
    }
}

TEST_CASE("a lone encoding rotation followed by amplitude damping matches the algebra") {
    // With all thetas at zero the trainable gates are exact identities, so
    // end-of-circuit placement sees exactly Ry(x) then one channel use.
    const MembershipCircuit circ = circuit_1q(1, {0.0, 0.0, 0.0});
    for (int i = 0; i <= 24; ++i) {
        const double x = -1.0 + 2.0 * i / 24.0;
        const double gamma = 0.2;
        const KrausChannel chan = make_channel(ChannelKind::AD, gamma);
        const MixedState sigma = simulate_noisy(circ, x, chan, NoisePlacement::EndOfCircuit);
        const double c = std::cos(x / 2.0), s = std::sin(x / 2.0);
        CHECK(sigma.at(0, 0).real() == doctest::Approx(c * c + gamma * s * s).epsilon(1e-12));
        CHECK(sigma.at(0, 1).real() ==
              doctest::Approx(c * s * std::sqrt(1.0 - gamma)).epsilon(1e-12));
        CHECK(std::abs(sigma.at(0, 1).imag()) < 1e-15);
        CHECK(sigma.at(1, 1).real() == doctest::Approx((1.0 - gamma) * s * s).epsilon(1e-12));
    }
}

TEST_CASE("noisy evolution preserves the trace") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int qubits = trial % 2 == 0 ? 1 : 2;
        const MembershipCircuit circ = random_circuit(qubits, 2, 300 + trial);
        const ChannelKind kind = static_cast<ChannelKind>(trial % 3);
        const KrausChannel chan = make_channel(kind, rng.uniform(0.0, 1.0));
        const NoisePlacement pl = trial % 2 == 0 ? NoisePlacement::AfterEachGate
                                                 : NoisePlacement::EndOfCircuit;
        const MixedState rho = simulate_noisy(circ, rng.uniform(-1.0, 1.0), chan, pl);
        CHECK(trace_real(rho) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(is_hermitian(rho, 1e-12));
    }
}

TEST_CASE("fidelity is exactly one when the noise is off") {
    const MembershipCircuit circ = random_circuit(1, 2, 17);
    for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP, ChannelKind::MixDP}) {
        for (NoisePlacement pl : {NoisePlacement::AfterEachGate, NoisePlacement::EndOfCircuit}) {
            CHECK(circuit_fidelity(circ, 0.4, kind, 0.0, pl) == 1.0);
        }
    }
}

TEST_CASE("mixing depolarizer at the end costs exactly gamma/2") {
    const MembershipCircuit circ = random_circuit(1, 2, 23);
    for (double gamma : {0.01, 0.05, 0.1, 0.3}) {
        for (double x : {-0.9, -0.2, 0.0, 0.55, 1.0}) {
            const double f =
                circuit_fidelity(circ, x, ChannelKind::MixDP, gamma, NoisePlacement::EndOfCircuit);
            CHECK(std::abs(f - (1.0 - gamma / 2.0)) < 1e-10);
        }
    }
}

TEST_CASE("textbook depolarizer at the end costs exactly two thirds gamma") {
    const MembershipCircuit circ = random_circuit(1, 2, 29);
    for (double gamma : {0.01, 0.05, 0.1, 0.3}) {
        for (double x : {-0.9, -0.2, 0.0, 0.55, 1.0}) {
            const double f =
                circuit_fidelity(circ, x, ChannelKind::DP, gamma, NoisePlacement::EndOfCircuit);
            CHECK(std::abs(f - (1.0 - 2.0 * gamma / 3.0)) < 1e-10);
        }
    }
}

TEST_CASE("amplitude damping after one encoding gate follows the closed form") {
    const MembershipCircuit circ = circuit_1q(1, {0.0, 0.0, 0.0});
    for (double gamma : {0.0, 0.05, 0.2, 0.5}) {
        double prev = 2.0;
        for (int i = 0; i < 100; ++i) {
            const double x = -1.0 + 2.0 * i / 99.0;
            const double c2 = std::cos(x / 2.0) * std::cos(x / 2.0);
            const double s2 = 1.0 - c2;
            const double want = c2 * c2 + gamma * c2 * s2 +
                                2.0 * c2 * s2 * std::sqrt(1.0 - gamma) +
                                (1.0 - gamma) * s2 * s2;
            const double got =
                circuit_fidelity(circ, x, ChannelKind::AD, gamma, NoisePlacement::EndOfCircuit);
            CHECK(std::abs(got - want) < 1e-10);
        }
        // And the damage grows with gamma at a fixed input.
        const double at_half =
            circuit_fidelity(circ, 0.5, ChannelKind::AD, gamma, NoisePlacement::EndOfCircuit);
        CHECK(at_half < prev + 1e-12);
        prev = at_half;
    }
}

TEST_CASE("the default sweep reproduces the expected mean fidelities") {
    SweepConfig cfg;
    cfg.circuit = random_circuit(1, 2, 31);
    const FidelityTable table = run_sweep(cfg);
    REQUIRE(table.means.size() == 5);
    const double want[] = {0.9950, 0.9850, 0.9750, 0.9650, 0.9500};
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(std::abs(table.means[i] - want[i]) < 5e-4);
    }
    for (double f : table.grid) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }
}

TEST_CASE("mean fidelity never improves as the noise grows") {
    for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP, ChannelKind::MixDP}) {
        for (NoisePlacement pl : {NoisePlacement::AfterEachGate, NoisePlacement::EndOfCircuit}) {
            SweepConfig cfg;
            cfg.channel = kind;
            cfg.placement = pl;
            cfg.gammas = {0.0, 0.01, 0.03, 0.05, 0.07, 0.1, 0.2};
            cfg.x_samples = 25;
            cfg.circuit = random_circuit(1, 2, 37);
            const FidelityTable table = run_sweep(cfg);
            CHECK(table.means[0] == 1.0);
            for (std::size_t i = 1; i < table.means.size(); ++i) {
                CHECK(table.means[i] <= table.means[i - 1] + 1e-12);
            }
        }
    }
}

TEST_CASE("noise behind every gate is at least as damaging as noise at the end") {
    for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP}) {
        SweepConfig each;
        each.channel = kind;
        each.placement = NoisePlacement::AfterEachGate;
        each.x_samples = 20;
        each.circuit = random_circuit(1, 2, 41);
        SweepConfig end = each;
        end.placement = NoisePlacement::EndOfCircuit;
        const FidelityTable fe = run_sweep(each);
        const FidelityTable fn = run_sweep(end);
        for (std::size_t i = 0; i < fe.grid.size(); ++i) {
            CHECK(fe.grid[i] <= fn.grid[i] + 1e-12);
        }
    }
}

TEST_CASE("shallow circuits keep mean fidelity above 0.93 at the strongest noise") {
    for (int layers : {1, 2}) {
        for (ChannelKind kind : {ChannelKind::AD, ChannelKind::DP, ChannelKind::MixDP}) {
            SweepConfig cfg;
            cfg.channel = kind;
            cfg.gammas = {0.1};
            cfg.x_samples = 50;
            cfg.circuit = random_circuit(1, layers, 43 + layers);
            const FidelityTable table = run_sweep(cfg);
            CHECK(table.means[0] >= 0.93);
        }
    }
}

TEST_CASE("two-qubit circuits run through the same machinery") {
    const MembershipCircuit circ = random_circuit(2, 1, 51);
    CHECK(circuit_fidelity(circ, 0.3, ChannelKind::AD, 0.0, NoisePlacement::EndOfCircuit) == 1.0);
    const double f =
        circuit_fidelity(circ, 0.3, ChannelKind::AD, 0.1, NoisePlacement::AfterEachGate);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(f < 1.0);
}

TEST_CASE("the x grid is even, inclusive, and deterministic") {
    CHECK(sweep_grid_x(1) == std::vector<double>{0.0});
    const std::vector<double> xs = sweep_grid_x(5);
    REQUIRE(xs.size() == 5);
    CHECK(xs[0] == -1.0);
    CHECK(xs[2] == doctest::Approx(0.0));
    CHECK(xs[4] == 1.0);
    const std::vector<double> big = sweep_grid_x(100);
    for (std::size_t i = 1; i < big.size(); ++i) {
        CHECK(big[i] - big[i - 1] == doctest::Approx(2.0 / 99.0).epsilon(1e-12));
    }
}

TEST_CASE("sweep tables render as fixed-point csv") {
    SweepConfig cfg;
    cfg.gammas = {0.1};
    cfg.x_samples = 2;
    cfg.circuit = circuit_1q(1, {0.0, 0.0, 0.0});
    const FidelityTable table = run_sweep(cfg);
    const std::string grid = sweep_grid_csv(table);
    CHECK(grid.rfind("gamma,x,fidelity\n0.100000,-1.000000,0.950000\n", 0) == 0);
    const std::string summary = sweep_summary_csv(table);
    CHECK(summary == "gamma,mean_fidelity\n0.100000,0.950000\n");
}

TEST_CASE("bad sweep settings are rejected") {
    SweepConfig cfg;
    cfg.circuit = circuit_1q(1, {0.0, 0.0, 0.0});
    SweepConfig bad = cfg;
    bad.gammas = {0.5, 1.2};
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = cfg;
    bad.gammas.clear();
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);
    bad = cfg;
    bad.x_samples = 0;
    CHECK_THROWS_AS(run_sweep(bad), std::invalid_argument);

    CHECK_THROWS_AS(circuit_fidelity(cfg.circuit, 0.0, ChannelKind::AD, -0.1,
                                     NoisePlacement::EndOfCircuit),
                    std::invalid_argument);
    CHECK_THROWS_AS(circuit_fidelity(cfg.circuit, 0.0, ChannelKind::AD, 1.5,
                                     NoisePlacement::EndOfCircuit),
                    std::invalid_argument);
}

TEST_CASE("placement names round-trip") {
    for (NoisePlacement pl : {NoisePlacement::AfterEachGate, NoisePlacement::EndOfCircuit}) {
        CHECK(placement_from_name(placement_name(pl)) == pl);
    }
    CHECK_THROWS_AS(placement_from_name("middle"), std::invalid_argument);
}
