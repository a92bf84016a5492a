#include "qkd/qsim.hpp"

#include <cmath>
#include <stdexcept>

namespace qkd::qsim {

namespace {

using cplx = std::complex<double>;

void check_wire(const StateVector& s, int wire) {
    if (wire < 0 || wire >= s.n_qubits) throw std::invalid_argument("wire out of range");
}

// Visits the amplitude pairs (i0, i1) that differ only in `wire`.
template <typename F>
void for_pairs(StateVector& s, int wire, F&& f) {
    const std::size_t bit = std::size_t{1} << wire;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i & bit) continue;
        f(s.amp[i], s.amp[i | bit]);
    }
}

}  // namespace

double StateVector::norm_sq() const {
    double acc = 0.0;
    for (const auto& a : amp) acc += std::norm(a);
    return acc;
}

StateVector init_state(int n_qubits) {
    if (n_qubits < 1 || n_qubits > 16)
        throw std::invalid_argument("n_qubits must be in [1, 16]");
    StateVector s;
    s.n_qubits = n_qubits;
    s.amp.assign(std::size_t{1} << n_qubits, cplx(0.0, 0.0));
    s.amp[0] = cplx(1.0, 0.0);
    return s;
}

void apply_ry(StateVector& s, int wire, double theta) {
    check_wire(s, wire);
    const double c = std::cos(theta / 2.0);
    const double sn = std::sin(theta / 2.0);
    for_pairs(s, wire, [&](cplx& a0, cplx& a1) {
        const cplx t0 = a0, t1 = a1;
        a0 = c * t0 - sn * t1;
        a1 = sn * t0 + c * t1;
    });
}

void apply_rz(StateVector& s, int wire, double theta) {
    check_wire(s, wire);
    const cplx e0 = std::polar(1.0, -theta / 2.0);
    const cplx e1 = std::polar(1.0, theta / 2.0);
    for_pairs(s, wire, [&](cplx& a0, cplx& a1) {
        a0 *= e0;
        a1 *= e1;
    });
}

void apply_cnot(StateVector& s, int control, int target) {
    check_wire(s, control);
    check_wire(s, target);
    if (control == target) throw std::invalid_argument("CNOT wires must differ");
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & cbit) && !(i & tbit)) std::swap(s.amp[i], s.amp[i | tbit]);
    }
}

void apply_gate(StateVector& s, const GateSpec& g) {
    if (g.kind == GateSpec::Kind::CNot) {
        apply_cnot(s, g.wire, g.target);
        return;
    }
    apply_rz(s, g.wire, g.alpha);
    apply_ry(s, g.wire, g.beta);
    apply_rz(s, g.wire, g.gamma);
}

void angle_embed(StateVector& s, std::span<const double> x) {
    if (static_cast<int>(x.size()) != s.n_qubits)
        throw std::invalid_argument("angle_embed: input length must equal qubit count");
    for (int w = 0; w < s.n_qubits; ++w) apply_ry(s, w, x[w]);
}

void strongly_entangling(StateVector& s, const EntanglerWeights& w) {
    if (w.wires != s.n_qubits)
        throw std::invalid_argument("strongly_entangling: wire count mismatch");
    const int n = s.n_qubits;
    for (int l = 0; l < w.layers; ++l) {
        for (int q = 0; q < n; ++q)
            apply_gate(s, GateSpec::rot(q, w.at(l, q, 0), w.at(l, q, 1), w.at(l, q, 2)));
        if (n >= 2)
            for (int q = 0; q < n; ++q) apply_cnot(s, q, (q + 1) % n);
    }
}

std::vector<double> expval_z_all(const StateVector& s) {
    std::vector<double> z(s.n_qubits, 0.0);
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double p = std::norm(s.amp[i]);
        if (p == 0.0) continue;
        for (int w = 0; w < s.n_qubits; ++w)
            z[w] += (i >> w) & 1 ? -p : p;
    }
    return z;
}

std::vector<double> vqc_eval(std::span<const double> x, const EntanglerWeights& w) {
    StateVector s = init_state(static_cast<int>(x.size()));
    angle_embed(s, x);
    strongly_entangling(s, w);
    return expval_z_all(s);
}

namespace {

// One parametrized rotation in execution order, flattened over the whole
// circuit. slot indexes the matching derivative output: embedding angles
// first (slot = wire), then the rotation angles in (l, w, k) order offset
// by n.
struct RotOp {
    enum class Axis { Y, Z };
    Axis axis;
    int wire;
    double theta;
    int slot;
};

struct CircuitPlan {
    int n = 0;
    std::vector<RotOp> rots;                 // rotation ops, execution order
    std::vector<int> rot_index_of_step;      // -1 for CNOT steps
    std::vector<std::pair<int, int>> cnots;  // aligned with CNOT steps
    std::vector<int> step_kinds;             // 0 = rot, 1 = cnot, execution order
};

CircuitPlan plan_circuit(std::span<const double> x, const EntanglerWeights& w) {
    CircuitPlan p;
    p.n = static_cast<int>(x.size());
    if (w.wires != p.n) throw std::invalid_argument("vqc: wire count mismatch");
    auto push_rot = [&](RotOp::Axis axis, int wire, double theta, int slot) {
        p.rot_index_of_step.push_back(static_cast<int>(p.rots.size()));
        p.rots.push_back(RotOp{axis, wire, theta, slot});
        p.step_kinds.push_back(0);
    };
    auto push_cnot = [&](int c, int t) {
        p.rot_index_of_step.push_back(-1);
        p.cnots.emplace_back(c, t);
        p.step_kinds.push_back(1);
    };
    for (int q = 0; q < p.n; ++q) push_rot(RotOp::Axis::Y, q, x[q], q);
    int slot = p.n;
    for (int l = 0; l < w.layers; ++l) {
        for (int q = 0; q < p.n; ++q) {
            push_rot(RotOp::Axis::Z, q, w.at(l, q, 0), slot++);
            push_rot(RotOp::Axis::Y, q, w.at(l, q, 1), slot++);
            push_rot(RotOp::Axis::Z, q, w.at(l, q, 2), slot++);
        }
        if (p.n >= 2)
            for (int q = 0; q < p.n; ++q) push_cnot(q, (q + 1) % p.n);
    }
    return p;
}

void apply_rot_op(StateVector& s, const RotOp& op, double sign) {
    if (op.axis == RotOp::Axis::Y)
        apply_ry(s, op.wire, sign * op.theta);
    else
        apply_rz(s, op.wire, sign * op.theta);
}

// <b| P_wire |phi> for the rotation generator P (Y or Z), without
// materializing P|phi>.
cplx pauli_bracket(const StateVector& b, const StateVector& phi, const RotOp& op) {
    const std::size_t bit = std::size_t{1} << op.wire;
    const std::size_t n = phi.size();
    cplx acc(0.0, 0.0);
    if (op.axis == RotOp::Axis::Z) {
        for (std::size_t i = 0; i < n; ++i) {
            const cplx term = std::conj(b.amp[i]) * phi.amp[i];
            acc += (i & bit) ? -term : term;
        }
    } else {  // Y|0> = i|1>, Y|1> = -i|0>
        const cplx im(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (i & bit) continue;
            acc += std::conj(b.amp[i]) * (-im * phi.amp[i | bit]);
            acc += std::conj(b.amp[i | bit]) * (im * phi.amp[i]);
        }
    }
    return acc;
}

// Shared adjoint sweep. observables[j] holds weights u so that
// O_j = sum_i u[i] Z_i; grads[j] receives d<O_j>/d(theta_slot) for every
// rotation slot (embedding slots first, then entangler angles).
std::vector<std::vector<double>> adjoint_sweep(std::span<const double> x,
                                               const EntanglerWeights& w,
                                               const std::vector<std::vector<double>>& observables) {
    const CircuitPlan plan = plan_circuit(x, w);
    const int n_slots = plan.n + static_cast<int>(w.count());

    StateVector phi = init_state(plan.n);
    std::size_t cnot_cursor = 0;
    for (std::size_t step = 0; step < plan.step_kinds.size(); ++step) {
        if (plan.step_kinds[step] == 0) {
            apply_rot_op(phi, plan.rots[plan.rot_index_of_step[step]], +1.0);
        } else {
            const auto [c, t] = plan.cnots[cnot_cursor++];
            apply_cnot(phi, c, t);
        }
    }

    // lambda_j = O_j |psi>
    std::vector<StateVector> lambdas;
    lambdas.reserve(observables.size());
    for (const auto& u : observables) {
        StateVector b = phi;
        const std::size_t dim = b.size();
        for (std::size_t i = 0; i < dim; ++i) {
            double sgn = 0.0;
            for (int q = 0; q < plan.n; ++q) sgn += ((i >> q) & 1) ? -u[q] : u[q];
            b.amp[i] *= sgn;
        }
        lambdas.push_back(std::move(b));
    }

    std::vector<std::vector<double>> grads(observables.size(),
                                           std::vector<double>(n_slots, 0.0));

    // Reverse sweep. At entry for a rotation step, phi still includes that
    // gate, so d<O>/dtheta = Im(<lambda| P |phi>) with the generator P of
    // exp(-i theta P / 2); afterwards the gate is undone on both vectors.
    std::size_t cnot_rev = plan.cnots.size();
    for (std::size_t step = plan.step_kinds.size(); step-- > 0;) {
        if (plan.step_kinds[step] == 1) {
            const auto [c, t] = plan.cnots[--cnot_rev];
            apply_cnot(phi, c, t);
            for (auto& b : lambdas) apply_cnot(b, c, t);
            continue;
        }
        const RotOp& op = plan.rots[plan.rot_index_of_step[step]];
        for (std::size_t j = 0; j < lambdas.size(); ++j)
            grads[j][op.slot] = std::imag(pauli_bracket(lambdas[j], phi, op));
        apply_rot_op(phi, op, -1.0);
        for (auto& b : lambdas) apply_rot_op(b, op, -1.0);
    }
    return grads;
}

}  // namespace

VqcJacobian vqc_grad_adjoint(std::span<const double> x, const EntanglerWeights& w) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> observables(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) observables[i][i] = 1.0;
    const auto grads = adjoint_sweep(x, w, observables);

    VqcJacobian jac;
    jac.n_out = n;
    jac.d_x.resize(static_cast<std::size_t>(n) * n);
    jac.d_w.resize(static_cast<std::size_t>(n) * w.count());
    for (int out = 0; out < n; ++out) {
        for (int in = 0; in < n; ++in)
            jac.d_x[static_cast<std::size_t>(out) * n + in] = grads[out][in];
        for (std::size_t k = 0; k < w.count(); ++k)
            jac.d_w[static_cast<std::size_t>(out) * w.count() + k] = grads[out][n + k];
    }
    return jac;
}

VqcJacobian vqc_grad_paramshift(std::span<const double> x, const EntanglerWeights& w) {
    const int n = static_cast<int>(x.size());
    const std::size_t nw = w.count();
    VqcJacobian jac;
    jac.n_out = n;
    jac.d_x.resize(static_cast<std::size_t>(n) * n);
    jac.d_w.resize(static_cast<std::size_t>(n) * nw);

    std::vector<double> xs(x.begin(), x.end());
    for (int in = 0; in < n; ++in) {
        xs[in] = x[in] + M_PI / 2.0;
        const auto up = vqc_eval(xs, w);
        xs[in] = x[in] - M_PI / 2.0;
        const auto dn = vqc_eval(xs, w);
        xs[in] = x[in];
        for (int out = 0; out < n; ++out)
            jac.d_x[static_cast<std::size_t>(out) * n + in] = (up[out] - dn[out]) / 2.0;
    }
    EntanglerWeights ws = w;
    for (std::size_t k = 0; k < nw; ++k) {
        ws.angles[k] = w.angles[k] + M_PI / 2.0;
        const auto up = vqc_eval(x, ws);
        ws.angles[k] = w.angles[k] - M_PI / 2.0;
        const auto dn = vqc_eval(x, ws);
        ws.angles[k] = w.angles[k];
        for (int out = 0; out < n; ++out)
            jac.d_w[static_cast<std::size_t>(out) * nw + k] = (up[out] - dn[out]) / 2.0;
    }
    return jac;
}

VqcVjp vqc_vjp(std::span<const double> x, const EntanglerWeights& w,
               std::span<const double> upstream) {
    const int n = static_cast<int>(x.size());
    if (static_cast<int>(upstream.size()) != n)
        throw std::invalid_argument("vqc_vjp: upstream length must equal wire count");
    const std::vector<std::vector<double>> observables{
        std::vector<double>(upstream.begin(), upstream.end())};
    const auto grads = adjoint_sweep(x, w, observables);

    VqcVjp out;
    out.d_x.assign(grads[0].begin(), grads[0].begin() + n);
    out.d_w = EntanglerWeights(w.layers, w.wires);
    for (std::size_t k = 0; k < w.count(); ++k) out.d_w.angles[k] = grads[0][n + k];
    return out;
}

}  // namespace qkd::qsim
