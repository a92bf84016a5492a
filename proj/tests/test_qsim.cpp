#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "qkd/qsim.hpp"
#include "support/dense_oracle.hpp"

using namespace qkd::qsim;

namespace {

EntanglerWeights random_weights(int layers, int wires, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> dist(0.0, 2.0 * M_PI);
    EntanglerWeights w(layers, wires);
    for (double& a : w.angles) a = dist(gen);
    return w;
}

std::vector<double> random_angles(int n, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> dist(-M_PI, M_PI);
    std::vector<double> x(n);
    for (double& v : x) v = dist(gen);
    return x;
}

}  // namespace

TEST_CASE("init_state prepares |0...0>") {
    auto s1 = init_state(1);
    CHECK(s1.amp.size() == 2);
    CHECK(s1.amp[0] == std::complex<double>(1, 0));
    CHECK(s1.amp[1] == std::complex<double>(0, 0));

    auto s2 = init_state(2);
    CHECK(s2.amp.size() == 4);
    CHECK(s2.amp[0].real() == 1.0);
    CHECK(s2.norm_sq() == 1.0);

    CHECK_THROWS_AS(init_state(0), std::invalid_argument);
    CHECK_THROWS_AS(init_state(17), std::invalid_argument);
}

TEST_CASE("apply_gate basics") {
    SUBCASE("zero-angle Rot is the identity") {
        auto s = init_state(2);
        apply_ry(s, 0, 0.7);
        apply_ry(s, 1, -0.3);
        const auto before = s.amp;
        apply_gate(s, GateSpec::rot(0, 0, 0, 0));
        for (std::size_t i = 0; i < before.size(); ++i)
            CHECK(std::abs(s.amp[i] - before[i]) < 1e-12);
    }
    SUBCASE("CNOT truth table: |10> with control qubit0 -> |11>") {
        auto s = init_state(2);
        s.amp[0] = 0;
        s.amp[1] = 1;  // qubit0 = 1, qubit1 = 0
        apply_gate(s, GateSpec::cnot(0, 1));
        CHECK(s.amp[3].real() == doctest::Approx(1.0));
    }
    SUBCASE("Rot(0, pi, 0) flips <Z> from +1 to -1") {
        auto s = init_state(1);
        CHECK(expval_z_all(s)[0] == doctest::Approx(1.0));
        apply_gate(s, GateSpec::rot(0, 0, M_PI, 0));
        CHECK(expval_z_all(s)[0] == doctest::Approx(-1.0).epsilon(1e-12));
    }
    SUBCASE("wire validation") {
        auto s = init_state(2);
        CHECK_THROWS_AS(apply_ry(s, 2, 0.1), std::invalid_argument);
        CHECK_THROWS_AS(apply_cnot(s, 0, 0), std::invalid_argument);
    }
}

TEST_CASE("angle embedding closed forms") {
    SUBCASE("zero vector leaves the state unchanged") {
        auto s = init_state(3);
        const std::vector<double> x(3, 0.0);
        angle_embed(s, x);
        CHECK(s.amp[0].real() == doctest::Approx(1.0));
    }
    SUBCASE("<Z> = cos(theta) on one qubit") {
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> dist(-M_PI, M_PI);
        for (int i = 0; i < 20; ++i) {
            const double theta = dist(gen);
            auto s = init_state(1);
            const std::vector<double> x{theta};
            angle_embed(s, x);
            CHECK(std::abs(expval_z_all(s)[0] - std::cos(theta)) < 1e-12);
        }
        auto s = init_state(1);
        const std::vector<double> x{M_PI};
        angle_embed(s, x);
        CHECK(std::abs(expval_z_all(s)[0] + 1.0) < 1e-12);
    }
    SUBCASE("length mismatch throws") {
        auto s = init_state(2);
        const std::vector<double> x{0.1};
        CHECK_THROWS_AS(angle_embed(s, x), std::invalid_argument);
    }
}

TEST_CASE("expval_z_all") {
    auto s = init_state(3);
    auto z = expval_z_all(s);
    for (double v : z) CHECK(v == doctest::Approx(1.0));

    auto s1 = init_state(1);
    apply_ry(s1, 0, M_PI);
    CHECK(expval_z_all(s1)[0] == doctest::Approx(-1.0));

    // Bell state (|00> + |11>)/sqrt(2)
    auto bell = init_state(2);
    apply_ry(bell, 0, M_PI / 2);
    apply_cnot(bell, 0, 1);
    const auto zb = expval_z_all(bell);
    CHECK(std::abs(zb[0]) < 1e-12);
    CHECK(std::abs(zb[1]) < 1e-12);
}

TEST_CASE("strongly entangling layer") {
    SUBCASE("zero weights act trivially on |00>") {
        auto s = init_state(2);
        strongly_entangling(s, EntanglerWeights(1, 2));
        CHECK(std::abs(s.amp[0] - std::complex<double>(1, 0)) < 1e-12);
    }
    SUBCASE("norm preserved for random weights, n=9") {
        std::mt19937_64 gen(5);
        auto s = init_state(9);
        auto x = random_angles(9, gen);
        angle_embed(s, x);
        strongly_entangling(s, random_weights(1, 9, gen));
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
    }
    SUBCASE("n=2, L=1 matches the dense-matrix oracle") {
        std::mt19937_64 gen(7);
        for (int trial = 0; trial < 20; ++trial) {
            const auto x = random_angles(2, gen);
            const auto w = random_weights(1, 2, gen);
            const auto got = vqc_eval(x, w);
            const auto want = oracle::vqc_dense(x, w.angles, 1);
            for (int i = 0; i < 2; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
        }
    }
}

TEST_CASE("vqc_eval closed forms and oracle agreement") {
    SUBCASE("identity circuit gives all ones") {
        for (int n : {1, 2, 5}) {
            const std::vector<double> x(n, 0.0);
            const auto z = vqc_eval(x, EntanglerWeights(1, n));
            for (double v : z) CHECK(v == doctest::Approx(1.0));
        }
    }
    SUBCASE("RY composition: cos(theta + beta) on one qubit") {
        std::mt19937_64 gen(13);
        std::uniform_real_distribution<double> dist(-M_PI, M_PI);
        for (int i = 0; i < 20; ++i) {
            const double theta = dist(gen), beta = dist(gen);
            EntanglerWeights w(1, 1);
            w.at(0, 0, 1) = beta;
            const std::vector<double> x{theta};
            const auto z = vqc_eval(x, w);
            CHECK(std::abs(z[0] - std::cos(theta + beta)) < 1e-10);
        }
    }
    SUBCASE("dense Kronecker oracle, 100 random instances with n <= 4") {
        std::mt19937_64 gen(17);
        std::uniform_int_distribution<int> n_dist(1, 4);
        std::uniform_int_distribution<int> l_dist(1, 3);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = n_dist(gen);
            const int layers = l_dist(gen);
            const auto x = random_angles(n, gen);
            const auto w = random_weights(layers, n, gen);
            const auto got = vqc_eval(x, w);
            const auto want = oracle::vqc_dense(x, w.angles, layers);
            for (int i = 0; i < n; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);
        }
    }
}

TEST_CASE("norm drift under 1000 random gates stays below 1e-10") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::uniform_int_distribution<int> wire(0, 8);
    std::uniform_int_distribution<int> kind(0, 2);
    auto s = init_state(9);
    for (int i = 0; i < 1000; ++i) {
        switch (kind(gen)) {
            case 0: apply_ry(s, wire(gen), angle(gen)); break;
            case 1: apply_rz(s, wire(gen), angle(gen)); break;
            default: {
                const int c = wire(gen);
                apply_cnot(s, c, (c + 1) % 9);
            }
        }
        CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
    }
}

TEST_CASE("gradients") {
    SUBCASE("single qubit: d<Z>/dtheta = -sin(theta)") {
        std::mt19937_64 gen(29);
        std::uniform_real_distribution<double> dist(-M_PI, M_PI);
        for (int i = 0; i < 10; ++i) {
            const double theta = dist(gen);
            const std::vector<double> x{theta};
            const EntanglerWeights w(1, 1);
            const auto adj = vqc_grad_adjoint(x, w);
            const auto ps = vqc_grad_paramshift(x, w);
            CHECK(std::abs(adj.d_x[0] + std::sin(theta)) < 1e-10);
            CHECK(std::abs(ps.d_x[0] + std::sin(theta)) < 1e-10);
        }
    }
    SUBCASE("zero circuit has zero angle gradients at the <Z>=1 extremum") {
        const std::vector<double> x(3, 0.0);
        const EntanglerWeights w(1, 3);
        const auto adj = vqc_grad_adjoint(x, w);
        for (double g : adj.d_x) CHECK(std::abs(g) < 1e-12);
        for (double g : adj.d_w) CHECK(std::abs(g) < 1e-12);
    }
    SUBCASE("parameter shift agrees with adjoint below 1e-9") {
        std::mt19937_64 gen(31);
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 1 + static_cast<int>(gen() % 4);
            const auto x = random_angles(n, gen);
            const auto w = random_weights(2, n, gen);
            const auto adj = vqc_grad_adjoint(x, w);
            const auto ps = vqc_grad_paramshift(x, w);
            for (std::size_t i = 0; i < adj.d_x.size(); ++i)
                CHECK(std::abs(adj.d_x[i] - ps.d_x[i]) < 1e-9);
            for (std::size_t i = 0; i < adj.d_w.size(); ++i)
                CHECK(std::abs(adj.d_w[i] - ps.d_w[i]) < 1e-9);
        }
    }
    SUBCASE("parameter shift vs central finite differences on n=4, L=2") {
        std::mt19937_64 gen(37);
        const int n = 4;
        const auto x = random_angles(n, gen);
        const auto w = random_weights(2, n, gen);
        const auto ps = vqc_grad_paramshift(x, w);
        const double h = 1e-3;

        auto xs = x;
        for (int in = 0; in < n; ++in) {
            xs[in] = x[in] + h;
            const auto up = vqc_eval(xs, w);
            xs[in] = x[in] - h;
            const auto dn = vqc_eval(xs, w);
            xs[in] = x[in];
            for (int out = 0; out < n; ++out) {
                const double fd = (up[out] - dn[out]) / (2 * h);
                const double an = ps.d_x[static_cast<std::size_t>(out) * n + in];
                const double scale = std::max(1.0, std::abs(an));
                CHECK(std::abs(fd - an) / scale < 1e-5);
            }
        }
        EntanglerWeights ws = w;
        for (std::size_t k = 0; k < w.count(); ++k) {
            ws.angles[k] = w.angles[k] + h;
            const auto up = vqc_eval(x, ws);
            ws.angles[k] = w.angles[k] - h;
            const auto dn = vqc_eval(x, ws);
            ws.angles[k] = w.angles[k];
            for (int out = 0; out < n; ++out) {
                const double fd = (up[out] - dn[out]) / (2 * h);
                const double an = ps.d_w[static_cast<std::size_t>(out) * w.count() + k];
                const double scale = std::max(1.0, std::abs(an));
                CHECK(std::abs(fd - an) / scale < 1e-5);
            }
        }
    }
    SUBCASE("vjp equals upstream-weighted jacobian rows") {
        std::mt19937_64 gen(41);
        const int n = 3;
        const auto x = random_angles(n, gen);
        const auto w = random_weights(1, n, gen);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> upstream(n);
        for (double& u : upstream) u = dist(gen);

        const auto jac = vqc_grad_adjoint(x, w);
        const auto vjp = vqc_vjp(x, w, upstream);
        for (int in = 0; in < n; ++in) {
            double want = 0;
            for (int out = 0; out < n; ++out)
                want += upstream[out] * jac.d_x[static_cast<std::size_t>(out) * n + in];
            CHECK(std::abs(vjp.d_x[in] - want) < 1e-12);
        }
        for (std::size_t k = 0; k < w.count(); ++k) {
            double want = 0;
            for (int out = 0; out < n; ++out)
                want += upstream[out] * jac.d_w[static_cast<std::size_t>(out) * w.count() + k];
            CHECK(std::abs(vjp.d_w.angles[k] - want) < 1e-12);
        }
    }
}
