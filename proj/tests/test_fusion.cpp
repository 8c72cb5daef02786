#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dsa/fusion.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dsa;

namespace {

TCParams random_tc(std::mt19937_64& rng, std::size_t d_h, std::size_t d_at,
                   const qsim::QuantumConfig& qcfg, ModulationVariant variant,
                   bool requires_grad = false) {
    TCParams p;
    p.query_w = testutil::random_tensor(rng, {d_h, d_h}, -0.5, 0.5, requires_grad);
    p.query_b = testutil::random_tensor(rng, {d_h}, -0.5, 0.5, requires_grad);
    p.key_w = testutil::random_tensor(rng, {d_h, d_at}, -0.5, 0.5, requires_grad);
    p.key_b = testutil::random_tensor(rng, {d_h}, -0.5, 0.5, requires_grad);
    p.value_w = testutil::random_tensor(rng, {d_h, d_at}, -0.5, 0.5, requires_grad);
    p.value_b = testutil::random_tensor(rng, {d_h}, -0.5, 0.5, requires_grad);
    p.pre_w = testutil::random_tensor(rng, {qcfg.num_qubits, d_h}, -0.5, 0.5,
                                      requires_grad);
    p.pre_b = testutil::random_tensor(rng, {qcfg.num_qubits}, -0.5, 0.5,
                                      requires_grad);
    p.variant = variant;
    p.qcfg = qcfg;
    if (variant == ModulationVariant::Quantum) {
        p.theta = testutil::random_tensor(
            rng, {qcfg.num_layers, qcfg.num_qubits, 3}, -std::numbers::pi,
            std::numbers::pi, requires_grad);
    } else {
        p.mlp_hidden_w = testutil::random_tensor(
            rng, {qcfg.num_qubits, qcfg.num_qubits}, -0.5, 0.5, requires_grad);
        p.mlp_hidden_b = testutil::random_tensor(rng, {qcfg.num_qubits}, -0.5,
                                                 0.5, requires_grad);
        p.mlp_out_w = testutil::random_tensor(
            rng, {qcfg.num_qubits, qcfg.num_qubits}, -0.5, 0.5, requires_grad);
        p.mlp_out_b = testutil::random_tensor(rng, {qcfg.num_qubits}, -0.5, 0.5,
                                              requires_grad);
    }
    p.post_w = testutil::random_tensor(rng, {2 * d_h, qcfg.num_qubits}, -0.5,
                                       0.5, requires_grad);
    p.post_b =
        testutil::random_tensor(rng, {2 * d_h}, -0.5, 0.5, requires_grad);
    return p;
}

std::vector<Tensor> tc_param_list(TCParams& p) {
    std::vector<Tensor> out{p.query_w, p.query_b, p.key_w, p.key_b,
                            p.value_w, p.value_b, p.pre_w, p.pre_b,
                            p.post_w,  p.post_b};
    if (p.variant == ModulationVariant::Quantum) {
        out.push_back(p.theta);
    } else {
        out.push_back(p.mlp_hidden_w);
        out.push_back(p.mlp_hidden_b);
        out.push_back(p.mlp_out_w);
        out.push_back(p.mlp_out_b);
    }
    return out;
}

} // namespace

TEST_CASE("quantum_map matches per-row circuit evaluation") {
    std::mt19937_64 rng(83);
    qsim::QuantumConfig qcfg{2, 1, false};
    Tensor angles = testutil::random_tensor(rng, {3, 2}, -2, 2);
    Tensor theta = testutil::random_tensor(rng, {1, 2, 3}, -2, 2);
    Tensor z = quantum_map(angles, theta, qcfg);
    const auto w = qsim::QuantumWeights::from_flat(qcfg, theta.values());
    for (std::size_t t = 0; t < 3; ++t) {
        const std::vector<double> row{angles.at(t, 0), angles.at(t, 1)};
        const std::vector<double> expect = qoracle::expectations(row, w, qcfg);
        CHECK(std::abs(z.at(t, 0) - expect[0]) < 1e-10);
        CHECK(std::abs(z.at(t, 1) - expect[1]) < 1e-10);
    }
}

TEST_CASE("quantum_map gradients flow into angles and weights") {
    std::mt19937_64 rng(89);
    qsim::QuantumConfig qcfg{2, 1, false};
    Tensor angles = testutil::random_tensor(rng, {3, 2}, -2, 2, true);
    Tensor theta = testutil::random_tensor(rng, {1, 2, 3}, -2, 2, true);
    auto f = [&]() {
        Tensor z = quantum_map(angles, theta, qcfg);
        return sum_all(mul(z, z));
    };
    CHECK(grad_check(f, {angles, theta}, 1e-5) < 1e-6);
}

TEST_CASE("single-token attention is the all-ones column") {
    std::mt19937_64 rng(97);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    Tensor xf = testutil::random_tensor(rng, {5, 3});
    Tensor xa = testutil::random_tensor(rng, {1, 4});
    CrossAttentionOut out = cross_attention(xf, xa, p);
    REQUIRE(out.maps.frame_to_token.rows() == 5);
    REQUIRE(out.maps.frame_to_token.cols() == 1);
    for (double v : out.maps.frame_to_token.values()) CHECK(v == 1.0);
    // attended rows all equal the single value row
    Tensor v_row = linear(xa, p.value_w, p.value_b);
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(out.attended.at(t, j) == doctest::Approx(v_row.at(0, j)));
        }
    }
}

TEST_CASE("identical keys give uniform attention rows") {
    std::mt19937_64 rng(101);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    std::vector<double> row = testutil::random_values(rng, 4);
    std::vector<double> tokens;
    for (int i = 0; i < 3; ++i) tokens.insert(tokens.end(), row.begin(), row.end());
    Tensor xa = Tensor::from({3, 4}, std::move(tokens));
    Tensor xf = testutil::random_tensor(rng, {5, 3});
    CrossAttentionOut out = cross_attention(xf, xa, p);
    for (double v : out.maps.frame_to_token.values()) {
        CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    }
}

TEST_CASE("cross attention matches the straight-line reference") {
    std::mt19937_64 rng(103);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 2, 3, qcfg, ModulationVariant::Quantum);
    Tensor xf = testutil::random_tensor(rng, {3, 2});
    Tensor xa = testutil::random_tensor(rng, {2, 3});
    CrossAttentionOut out = cross_attention(xf, xa, p);
    oracle::AttentionOracle expect = oracle::cross_attention(
        oracle::from_tensor(xf), oracle::from_tensor(xa), p);
    CHECK(oracle::max_diff(expect.a, out.maps.frame_to_token) < 1e-12);
    CHECK(oracle::max_diff(expect.attended, out.attended) < 1e-12);
    CHECK(oracle::max_diff(expect.rho, out.maps.token_to_frame) < 1e-12);
}

TEST_CASE("cross attention requires at least one token") {
    std::mt19937_64 rng(107);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    Tensor xf = testutil::random_tensor(rng, {5, 3});
    Tensor xa = Tensor::from({0, 4}, {});
    CHECK_THROWS_AS(cross_attention(xf, xa, p), ContractError);
}

TEST_CASE("constant modulation head ignores its input") {
    std::mt19937_64 rng(109);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    p.post_w = Tensor::zeros({6, 2});
    std::vector<double> bias{2.0, 2.0, 2.0, -1.0, -1.0, -1.0};
    p.post_b = Tensor::from({6}, std::move(bias));
    Tensor attended = testutil::random_tensor(rng, {4, 3});
    Modulation m = modulation_params(attended, p);
    for (double g : m.gamma.values()) CHECK(g == 2.0);
    for (double b : m.beta.values()) CHECK(b == -1.0);
}

TEST_CASE("identical attended rows produce identical modulation rows") {
    std::mt19937_64 rng(113);
    qsim::QuantumConfig qcfg{2, 2, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    std::vector<double> row = testutil::random_values(rng, 3);
    std::vector<double> both(row);
    both.insert(both.end(), row.begin(), row.end());
    Tensor attended = Tensor::from({2, 3}, std::move(both));
    Modulation m = modulation_params(attended, p);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(m.gamma.at(0, j) == m.gamma.at(1, j));
        CHECK(m.beta.at(0, j) == m.beta.at(1, j));
    }
}

TEST_CASE("modulation readouts match the circuit oracle composition") {
    std::mt19937_64 rng(127);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 2, 3, qcfg, ModulationVariant::Quantum);
    Tensor attended = testutil::random_tensor(rng, {3, 2});
    Modulation m = modulation_params(attended, p);
    oracle::ModulationOracle expect =
        oracle::modulation(oracle::from_tensor(attended), p);
    CHECK(oracle::max_diff(expect.gamma, m.gamma) < 1e-10);
    CHECK(oracle::max_diff(expect.beta, m.beta) < 1e-10);
}

TEST_CASE("identity modulation passes frames through") {
    std::mt19937_64 rng(131);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    p.post_w = Tensor::zeros({6, 2});
    p.post_b = Tensor::from({6}, {1, 1, 1, 0, 0, 0});
    Tensor xf = testutil::random_tensor(rng, {4, 3});
    Tensor xa = testutil::random_tensor(rng, {2, 4});
    TCOut out = tc_forward(xf, xa, p);
    for (std::size_t i = 0; i < xf.size(); ++i) {
        CHECK(out.fused.values()[i] == xf.values()[i]);
    }

    p.post_b = Tensor::from({6}, {0, 0, 0, 0.7, 0.7, 0.7});
    TCOut bias_only = tc_forward(xf, xa, p);
    for (double v : bias_only.fused.values()) CHECK(v == 0.7);
}

TEST_CASE("tc_forward matches the composed reference") {
    std::mt19937_64 rng(137);
    qsim::QuantumConfig qcfg{2, 1, false};
    for (ModulationVariant variant :
         {ModulationVariant::Quantum, ModulationVariant::Classical}) {
        TCParams p = random_tc(rng, 2, 3, qcfg, variant);
        Tensor xf = testutil::random_tensor(rng, {3, 2});
        Tensor xa = testutil::random_tensor(rng, {2, 3});
        TCOut out = tc_forward(xf, xa, p);
        oracle::Mat expect = oracle::tc_forward(oracle::from_tensor(xf),
                                                oracle::from_tensor(xa), p);
        CHECK(oracle::max_diff(expect, out.fused) < 1e-10);
    }
}

TEST_CASE("attention maps are row stochastic") {
    std::mt19937_64 rng(139);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    Tensor xf = testutil::random_tensor(rng, {6, 3});
    Tensor xa = testutil::random_tensor(rng, {3, 4});
    TCOut out = tc_forward(xf, xa, p);
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            s += out.maps.frame_to_token.at(i, j);
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 6; ++j)
            s += out.maps.token_to_frame.at(i, j);
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("token permutation leaves the fused output bit-identical") {
    std::mt19937_64 rng(149);
    qsim::QuantumConfig qcfg{2, 1, false};
    TCParams p = random_tc(rng, 3, 4, qcfg, ModulationVariant::Quantum);
    Tensor xf = testutil::random_tensor(rng, {5, 3});
    Tensor xa = testutil::random_tensor(rng, {4, 4});
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    std::vector<double> permuted(4 * 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            permuted[i * 4 + j] = xa.at(perm[i], j);
    Tensor xa_perm = Tensor::from({4, 4}, std::move(permuted));

    TCOut base = tc_forward(xf, xa, p);
    TCOut swapped = tc_forward(xf, xa_perm, p);

    // bit-identical fused output
    for (std::size_t i = 0; i < base.fused.size(); ++i) {
        CHECK(base.fused.values()[i] == swapped.fused.values()[i]);
    }
    // columns of A and rows of rho permute consistently
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t m = 0; m < 4; ++m) {
            CHECK(swapped.maps.frame_to_token.at(t, m) ==
                  base.maps.frame_to_token.at(t, perm[m]));
        }
    }
    for (std::size_t m = 0; m < 4; ++m) {
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(swapped.maps.token_to_frame.at(m, t) ==
                  base.maps.token_to_frame.at(perm[m], t));
        }
    }
}

TEST_CASE("variants agree on every interface shape") {
    std::mt19937_64 rng(151);
    qsim::QuantumConfig qcfg{3, 2, false};
    TCParams q = random_tc(rng, 4, 4, qcfg, ModulationVariant::Quantum);
    TCParams c = random_tc(rng, 4, 4, qcfg, ModulationVariant::Classical);
    Tensor xf = testutil::random_tensor(rng, {6, 4});
    Tensor xa = testutil::random_tensor(rng, {3, 4});
    TCOut qo = tc_forward(xf, xa, q);
    TCOut co = tc_forward(xf, xa, c);
    CHECK(qo.fused.shape() == co.fused.shape());
    CHECK(qo.maps.frame_to_token.shape() == co.maps.frame_to_token.shape());
    CHECK(qo.maps.token_to_frame.shape() == co.maps.token_to_frame.shape());
}

TEST_CASE("tc gradients flow through the whole block") {
    std::mt19937_64 rng(157);
    qsim::QuantumConfig qcfg{2, 1, false};
    for (ModulationVariant variant :
         {ModulationVariant::Quantum, ModulationVariant::Classical}) {
        TCParams p = random_tc(rng, 2, 3, qcfg, variant, true);
        Tensor xf = testutil::random_tensor(rng, {3, 2});
        Tensor xa = testutil::random_tensor(rng, {2, 3});
        std::vector<Tensor> params = tc_param_list(p);
        auto f = [&]() {
            TCOut out = tc_forward(xf, xa, p);
            return sum_all(mul(out.fused, out.fused));
        };
        CHECK(grad_check(f, params, 1e-5) < 1e-4);
    }
}
