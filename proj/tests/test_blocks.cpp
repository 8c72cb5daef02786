#include <doctest.h>

#include <cmath>
#include <random>

#include "dsa/blocks.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace dsa;

namespace {

TEParams random_te(std::mt19937_64& rng, std::size_t d_in, std::size_t d_e,
                   std::size_t d_out, bool requires_grad = false) {
    TEParams p;
    const std::size_t d_s = d_e;
    p.proj_w = testutil::random_tensor(rng, {d_e, d_in}, -0.5, 0.5, requires_grad);
    p.proj_b = testutil::random_tensor(rng, {d_e}, -0.5, 0.5, requires_grad);
    p.state_w = testutil::random_tensor(rng, {d_s, d_e}, -0.5, 0.5, requires_grad);
    p.mix_w = testutil::random_tensor(rng, {d_s, d_s}, -0.5, 0.5, requires_grad);
    p.mix_b = testutil::random_tensor(rng, {d_s}, -0.5, 0.5, requires_grad);
    p.gate_w = testutil::random_tensor(rng, {d_s, d_in}, -0.5, 0.5, requires_grad);
    p.gate_b = testutil::random_tensor(rng, {d_s}, -0.5, 0.5, requires_grad);
    p.out_w = testutil::random_tensor(rng, {d_out, d_s}, -0.5, 0.5, requires_grad);
    p.out_b = testutil::random_tensor(rng, {d_out}, -0.5, 0.5, requires_grad);
    return p;
}

GEParams random_ge(std::mt19937_64& rng, std::size_t d_in, std::size_t d_out,
                   std::size_t depth, bool requires_grad = false) {
    GEParams p;
    p.in_w = testutil::random_tensor(rng, {d_out, d_in}, -0.5, 0.5, requires_grad);
    p.in_b = testutil::random_tensor(rng, {d_out}, -0.5, 0.5, requires_grad);
    for (std::size_t l = 0; l < depth; ++l) {
        GEParams::Layer layer;
        layer.conv_w = testutil::random_tensor(rng, {d_out, d_out, 3}, -0.5,
                                               0.5, requires_grad);
        layer.conv_b =
            testutil::random_tensor(rng, {d_out}, -0.5, 0.5, requires_grad);
        layer.pw_w = testutil::random_tensor(rng, {d_out, d_out}, -0.5, 0.5,
                                             requires_grad);
        layer.pw_b =
            testutil::random_tensor(rng, {d_out}, -0.5, 0.5, requires_grad);
        p.layers.push_back(layer);
    }
    return p;
}

} // namespace

TEST_CASE("te with zero weights emits constant bias rows") {
    std::mt19937_64 rng(41);
    TEParams p;
    p.proj_w = Tensor::zeros({5, 3});
    p.proj_b = Tensor::zeros({5});
    p.state_w = Tensor::zeros({5, 5});
    p.mix_w = Tensor::zeros({5, 5});
    p.mix_b = Tensor::zeros({5});
    p.gate_w = Tensor::zeros({5, 3});
    p.gate_b = Tensor::zeros({5});
    p.out_w = Tensor::zeros({2, 5});
    p.out_b = Tensor::from({2}, {1.25, -0.5});
    Tensor x = testutil::random_tensor(rng, {4, 3});
    Tensor y = te_forward(x, p);
    REQUIRE(y.rows() == 4);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(y.at(t, 0) == 1.25);
        CHECK(y.at(t, 1) == -0.5);
    }
}

TEST_CASE("te handles a single frame") {
    std::mt19937_64 rng(43);
    TEParams p = random_te(rng, 3, 5, 2);
    Tensor x = testutil::random_tensor(rng, {1, 3});
    Tensor y = te_forward(x, p);
    CHECK(y.rows() == 1);
    CHECK(y.cols() == 2);
}

TEST_CASE("te matches the straight-line reference") {
    std::mt19937_64 rng(47);
    TEParams p = random_te(rng, 3, 5, 2);
    Tensor x = testutil::random_tensor(rng, {4, 3});
    Tensor y = te_forward(x, p);
    oracle::Mat expect = oracle::te_forward(oracle::from_tensor(x), p);
    CHECK(oracle::max_diff(expect, y) < 1e-12);
}

TEST_CASE("te gate saturation collapses to the output bias") {
    std::mt19937_64 rng(53);
    TEParams p = random_te(rng, 3, 5, 2);
    p.gate_b = Tensor::full({5}, -1e3); // sigmoid underflows to zero
    Tensor x = testutil::random_tensor(rng, {4, 3});
    Tensor y = te_forward(x, p);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(y.at(t, 0) == doctest::Approx(p.out_b.values()[0]).epsilon(1e-15));
        CHECK(y.at(t, 1) == doctest::Approx(p.out_b.values()[1]).epsilon(1e-15));
    }
}

TEST_CASE("te gradients agree with finite differences") {
    std::mt19937_64 rng(59);
    TEParams p = random_te(rng, 3, 4, 2, true);
    Tensor x = testutil::random_tensor(rng, {4, 3});
    std::vector<Tensor> params{p.proj_w, p.proj_b, p.state_w, p.mix_w,
                               p.mix_b,  p.gate_w, p.gate_b,  p.out_w,
                               p.out_b};
    auto f = [&]() {
        Tensor y = te_forward(x, p);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check(f, params, 1e-5) < 1e-6);
}

TEST_CASE("te is deterministic and length preserving") {
    std::mt19937_64 rng(61);
    TEParams p = random_te(rng, 3, 5, 3);
    Tensor x = testutil::random_tensor(rng, {7, 3});
    Tensor a = te_forward(x, p);
    Tensor b = te_forward(x, p);
    CHECK(a.rows() == 7);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.values()[i] == b.values()[i]);
    }
}

TEST_CASE("ge with zeroed layers reduces to the input projection") {
    std::mt19937_64 rng(67);
    GEParams p = random_ge(rng, 3, 4, 2);
    for (auto& layer : p.layers) {
        layer.conv_w = Tensor::zeros({4, 4, 3});
        layer.conv_b = Tensor::zeros({4});
        layer.pw_w = Tensor::zeros({4, 4});
        layer.pw_b = Tensor::zeros({4});
    }
    Tensor x = testutil::random_tensor(rng, {5, 3});
    Tensor y = ge_forward(x, p);
    Tensor projected = linear(x, p.in_w, p.in_b);
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(y.values()[i] == projected.values()[i]);
    }
}

TEST_CASE("ge handles a single token") {
    std::mt19937_64 rng(71);
    GEParams p = random_ge(rng, 3, 4, 3);
    Tensor x = testutil::random_tensor(rng, {1, 3});
    Tensor y = ge_forward(x, p);
    CHECK(y.rows() == 1);
    CHECK(y.cols() == 4);
    for (double v : y.values()) CHECK(std::isfinite(v));
}

TEST_CASE("ge matches the naive convolution reference") {
    std::mt19937_64 rng(73);
    GEParams p = random_ge(rng, 3, 4, 2);
    Tensor x = testutil::random_tensor(rng, {4, 3});
    Tensor y = ge_forward(x, p);
    oracle::Mat expect = oracle::ge_forward(oracle::from_tensor(x), p);
    CHECK(oracle::max_diff(expect, y) < 1e-12);
}

TEST_CASE("ge gradients agree with finite differences") {
    std::mt19937_64 rng(79);
    GEParams p = random_ge(rng, 2, 3, 2, true);
    Tensor x = testutil::random_tensor(rng, {4, 2});
    std::vector<Tensor> params{p.in_w, p.in_b};
    for (auto& layer : p.layers) {
        params.push_back(layer.conv_w);
        params.push_back(layer.conv_b);
        params.push_back(layer.pw_w);
        params.push_back(layer.pw_b);
    }
    auto f = [&]() {
        Tensor y = ge_forward(x, p);
        return sum_all(mul(y, y));
    };
    CHECK(grad_check(f, params, 1e-5) < 2e-6);
}

TEST_CASE("positional encoding table") {
    Tensor pe = positional_encoding(5, 6);
    // first row alternates sin 0 / cos 0
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(pe.at(0, 2 * k) == 0.0);
        CHECK(pe.at(0, 2 * k + 1) == 1.0);
    }
    for (double v : pe.values()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    for (std::size_t t = 1; t <= 3; ++t) {
        CHECK(pe.at(t, 0) ==
              doctest::Approx(std::sin(static_cast<double>(t))).epsilon(1e-15));
    }
    CHECK_THROWS_AS(positional_encoding(4, 5), ContractError);
    CHECK(pe.requires_grad() == false);
}
