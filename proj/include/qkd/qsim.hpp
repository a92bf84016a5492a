#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qkd::qsim {

// Complex amplitude vector over n qubits. Wire i maps to bit i of the
// basis-state index (wire 0 is the least significant bit).
struct StateVector {
    int n_qubits = 0;
    std::vector<std::complex<double>> amp;

    std::size_t size() const { return amp.size(); }
    double norm_sq() const;
};

StateVector init_state(int n_qubits);  // |0...0>, 1 <= n <= 16

// Rotation angles of a strongly-entangling block: [layers][wires][3],
// where the 3 angles (alpha, beta, gamma) parametrize
// Rot = RZ(gamma) * RY(beta) * RZ(alpha).
struct EntanglerWeights {
    int layers = 0;
    int wires = 0;
    std::vector<double> angles;  // flattened (l, w, k)

    EntanglerWeights() = default;
    EntanglerWeights(int l, int w) : layers(l), wires(w), angles(static_cast<std::size_t>(l) * w * 3, 0.0) {}

    double& at(int l, int w, int k) { return angles[(static_cast<std::size_t>(l) * wires + w) * 3 + k]; }
    double at(int l, int w, int k) const { return angles[(static_cast<std::size_t>(l) * wires + w) * 3 + k]; }
    std::size_t count() const { return angles.size(); }
};

struct GateSpec {
    enum class Kind { Rot, CNot };
    Kind kind = Kind::Rot;
    int wire = 0;                        // Rot target / CNot control
    int target = 0;                      // CNot target
    double alpha = 0, beta = 0, gamma = 0;

    static GateSpec rot(int wire, double alpha, double beta, double gamma) {
        return GateSpec{Kind::Rot, wire, 0, alpha, beta, gamma};
    }
    static GateSpec cnot(int control, int target) {
        return GateSpec{Kind::CNot, control, target, 0, 0, 0};
    }
};

void apply_gate(StateVector& state, const GateSpec& gate);

// Elementary rotations, exposed for reuse by the gradient code and tests.
void apply_ry(StateVector& state, int wire, double theta);
void apply_rz(StateVector& state, int wire, double theta);
void apply_cnot(StateVector& state, int control, int target);

// RY(x[i]) on wire i; the standard input encoding for the circuits here.
void angle_embed(StateVector& state, std::span<const double> x);

// Per layer: Rot on every wire, then the ring CNOT(i, (i+1) mod n).
// Single-wire circuits skip the entanglers.
void strongly_entangling(StateVector& state, const EntanglerWeights& weights);

std::vector<double> expval_z_all(const StateVector& state);

// Full circuit: embed -> entangling layers -> <Z_i> for every wire.
std::vector<double> vqc_eval(std::span<const double> x, const EntanglerWeights& weights);

// Jacobians of every output <Z_i> w.r.t. every embedding angle and every
// rotation angle. d_x is row-major [n_out x n_in]; d_w is row-major
// [n_out x weights.count()].
struct VqcJacobian {
    int n_out = 0;
    std::vector<double> d_x;
    std::vector<double> d_w;

    double dx(int out, int in) const { return d_x[static_cast<std::size_t>(out) * n_out + in]; }
};

// Adjoint mode: one forward sweep plus one reverse sweep shared by all
// parameters, with one lambda vector per observable.
VqcJacobian vqc_grad_adjoint(std::span<const double> x, const EntanglerWeights& weights);

// Parameter-shift rule, f(th + pi/2) - f(th - pi/2) over 2 per angle.
// Two circuit evaluations per parameter; kept as the exact cross-check
// for the adjoint mode.
VqcJacobian vqc_grad_paramshift(std::span<const double> x, const EntanglerWeights& weights);

// Vector-Jacobian product: gradients of sum_i upstream[i] * <Z_i> in a
// single adjoint pass. This is the training-time entry point.
struct VqcVjp {
    std::vector<double> d_x;
    EntanglerWeights d_w;
};
VqcVjp vqc_vjp(std::span<const double> x, const EntanglerWeights& weights,
               std::span<const double> upstream);

}  // namespace qkd::qsim
