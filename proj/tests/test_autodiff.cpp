#include <cmath>

#include "doctest.h"

#include "hydrodeep/errors.hpp"
#include "hydrodeep/gradcheck.hpp"
#include "hydrodeep/ops.hpp"
#include "test_helpers.hpp"

using namespace hydrodeep;
using namespace hydrodeep::testutil;

namespace {

LstmParams store_lstm(ParamStore& store, const std::string& prefix, std::size_t n_h, std::size_t n_in,
                      Rng& rng) {
    LstmParams p;
    p.w_f = store.create(prefix + ".w_f", random_tensor({n_h, n_h + n_in}, rng));
    p.w_i = store.create(prefix + ".w_i", random_tensor({n_h, n_h + n_in}, rng));
    p.w_o = store.create(prefix + ".w_o", random_tensor({n_h, n_h + n_in}, rng));
    p.w_c = store.create(prefix + ".w_c", random_tensor({n_h, n_h + n_in}, rng));
    p.b_f = store.create(prefix + ".b_f", random_tensor({n_h}, rng));
    p.b_i = store.create(prefix + ".b_i", random_tensor({n_h}, rng));
    p.b_o = store.create(prefix + ".b_o", random_tensor({n_h}, rng));
    p.b_c = store.create(prefix + ".b_c", random_tensor({n_h}, rng));
    return p;
}

GruParams store_gru(ParamStore& store, const std::string& prefix, std::size_t n_h, std::size_t n_in,
                    Rng& rng) {
    GruParams p;
    p.w_z = store.create(prefix + ".w_z", random_tensor({n_h, n_h + n_in}, rng));
    p.w_r = store.create(prefix + ".w_r", random_tensor({n_h, n_h + n_in}, rng));
    p.w_h = store.create(prefix + ".w_h", random_tensor({n_h, n_h + n_in}, rng));
    p.b_z = store.create(prefix + ".b_z", random_tensor({n_h}, rng));
    p.b_r = store.create(prefix + ".b_r", random_tensor({n_h}, rng));
    p.b_h = store.create(prefix + ".b_h", random_tensor({n_h}, rng));
    return p;
}

}  // namespace

TEST_CASE("gradient of a single dense weight is 2w") {
    // loss = (w*x - 0)^2 with x = 1: dL/dw = 2w
    ParamStore store;
    const double w0 = 0.7;
    Var w = store.create("w", Tensor({1, 1}, {w0}));
    Var x = Var::constant(Tensor::vector1d({1.0}));
    Var loss = mse_loss(matvec(w, x), Tensor::vector1d({0.0}));
    loss.backward();
    CHECK(store.entry("w").var.grad()[0] == doctest::Approx(2.0 * w0));
}

TEST_CASE("backward without a recorded pass is a state error") {
    Var undefined;
    CHECK_THROWS_AS(undefined.backward(), StateError);
}

TEST_CASE("backward on a non-scalar needs a seed") {
    Var v = Var::parameter(Tensor::vector1d({1.0, 2.0}));
    CHECK_THROWS_AS(v.backward(), DimensionError);
    v.backward(Tensor::vector1d({1.0, 1.0}));
    CHECK(v.grad().data == std::vector<double>{1.0, 1.0});
}

TEST_CASE("frozen parameters still receive gradients") {
    ParamStore store;
    Var w = store.create("w", Tensor({1, 1}, {2.0}));
    store.entry("w").trainable = false;
    Var loss = mse_loss(matvec(w, Var::constant(Tensor::vector1d({1.0}))), Tensor::vector1d({0.0}));
    loss.backward();
    CHECK(store.entry("w").var.grad()[0] == doctest::Approx(4.0));
    AdamConfig adam;
    store.adam_step(adam);
    CHECK(store.entry("w").var.value()[0] == 2.0);  // update skipped
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
    ParamStore store;
    Var w = store.create("w", Tensor({1, 1}, {1.0}));
    auto make = [&] { return mse_loss(matvec(w, Var::constant(Tensor::vector1d({1.0}))),
                                      Tensor::vector1d({0.0})); };
    make().backward();
    make().backward();
    CHECK(store.entry("w").var.grad()[0] == doctest::Approx(4.0));
    store.zero_grad();
    CHECK(store.entry("w").var.grad()[0] == 0.0);
}

TEST_CASE("finite differences confirm conv1d + maxpool gradients") {
    Rng rng(101);
    ParamStore store;
    Var k = store.create("kernels", random_tensor({3, 2, 3}, rng));
    Var b = store.create("bias", random_tensor({3}, rng));
    Var in = store.create("input", random_tensor({8, 2}, rng));
    auto make_loss = [&] {
        Var y = conv1d(in, k, b, Activation::tanh);  // (8,2) -> (6,3)
        y = maxpool1d(y, 2);                         // -> (3,3)
        return mse_loss(flatten(y), Tensor({9}));
    };
    auto r = grad_check(store, make_loss, 1e-6);
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("finite differences confirm dense gradients for each activation") {
    for (Activation act : {Activation::identity, Activation::tanh, Activation::relu}) {
        Rng rng(103);
        ParamStore store;
        Var w = store.create("w", random_tensor({4, 5}, rng));
        Var b = store.create("b", random_tensor({4}, rng));
        Var x = store.create("x", random_tensor({5}, rng));
        auto make_loss = [&] { return mse_loss(dense(x, w, b, act), Tensor({4})); };
        auto r = grad_check(store, make_loss, 1e-6);
        CHECK(r.max_rel_error < 1e-5);
    }
}

TEST_CASE("finite differences confirm dropout gradients under a fixed mask") {
    Rng rng(107);
    ParamStore store;
    Var x = store.create("x", random_tensor({12}, rng));
    auto make_loss = [&] {
        Rng mask_rng(55);  // same mask on every evaluation
        return mse_loss(dropout(x, 0.4, Mode::train, mask_rng), Tensor({12}));
    };
    auto r = grad_check(store, make_loss, 1e-6);
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("finite differences confirm lstm gradients through a stacked sequence") {
    Rng rng(109);
    ParamStore store;
    auto p0 = store_lstm(store, "lstm0", 3, 2, rng);
    auto p1 = store_lstm(store, "lstm1", 3, 3, rng);
    Var seq = store.create("seq", random_tensor({4, 2}, rng));
    auto make_loss = [&] {
        auto hs = lstm_layer_seq(split_rows(seq), p0);
        return mse_loss(lstm_layer_last(hs, p1), Tensor({3}));
    };
    auto r = grad_check(store, make_loss, 1e-6);
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("finite differences confirm gru gradients") {
    Rng rng(113);
    ParamStore store;
    auto p = store_gru(store, "gru", 3, 2, rng);
    Var seq = store.create("seq", random_tensor({4, 2}, rng));
    auto make_loss = [&] { return mse_loss(gru_layer_last(split_rows(seq), p), Tensor({3})); };
    auto r = grad_check(store, make_loss, 1e-6);
    CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("finite differences confirm bidirectional lstm gradients") {
    Rng rng(127);
    ParamStore store;
    auto pf = store_lstm(store, "fwd", 2, 2, rng);
    auto pb = store_lstm(store, "bwd", 2, 2, rng);
    Var seq = store.create("seq", random_tensor({3, 2}, rng));
    auto make_loss = [&] {
        return mse_loss(bidirectional_lstm(split_rows(seq), pf, pb), Tensor({4}));
    };
    auto r = grad_check(store, make_loss, 1e-6);
    CHECK(r.max_rel_error < 1e-5);
}
