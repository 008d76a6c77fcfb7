#include <cmath>

#include "doctest.h"

#include "hydrodeep/errors.hpp"
#include "hydrodeep/ops.hpp"
#include "hydrodeep/param_store.hpp"
#include "test_helpers.hpp"

using namespace hydrodeep;
using namespace hydrodeep::testutil;

TEST_CASE("adam config validation") {
    AdamConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = AdamConfig{};
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = AdamConfig{};
    bad.beta2 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = AdamConfig{};
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    CHECK_NOTHROW(AdamConfig{}.validate());
}

TEST_CASE("zero gradient leaves values unchanged") {
    ParamStore store;
    store.create("w", Tensor::vector1d({1.0, -2.0, 3.0}));
    AdamConfig adam;
    for (int i = 0; i < 5; ++i) store.adam_step(adam);
    CHECK(store.entry("w").var.value().data == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(store.entry("w").step_count == 5);
}

TEST_CASE("moments are all zero before the first step") {
    ParamStore store;
    store.create("w", Tensor::vector1d({4.0}));
    const ParamEntry& e = store.entry("w");
    CHECK(e.step_count == 0);
    CHECK(e.m[0] == 0.0);
    CHECK(e.v[0] == 0.0);
}

TEST_CASE("first bias-corrected step has magnitude close to the learning rate") {
    for (double g : {1.0, 3.0, -5.0, 100.0}) {
        ParamStore store;
        store.create("w", Tensor::vector1d({0.5}));
        ParamEntry& e = store.entry("w");
        e.var.grad()[0] = g;
        AdamConfig adam;
        store.adam_step(adam);
        const double delta = std::fabs(store.entry("w").var.value()[0] - 0.5);
        CHECK(std::fabs(delta - adam.learning_rate) < adam.learning_rate * 1e-3);
        // direction opposes the gradient
        CHECK((g > 0) == (store.entry("w").var.value()[0] < 0.5));
    }
}

TEST_CASE("frozen entries are bit-identical after many steps") {
    ParamStore store;
    store.create("frozen", Tensor::vector1d({1.25, -0.75}));
    store.create("live", Tensor::vector1d({1.25, -0.75}));
    store.entry("frozen").trainable = false;
    AdamConfig adam;
    for (int i = 0; i < 100; ++i) {
        store.entry("frozen").var.grad().fill(2.0);
        store.entry("live").var.grad().fill(2.0);
        store.adam_step(adam);
    }
    const ParamEntry& f = store.entry("frozen");
    CHECK(f.var.value().data == std::vector<double>{1.25, -0.75});
    CHECK(f.m.data == std::vector<double>{0.0, 0.0});
    CHECK(f.v.data == std::vector<double>{0.0, 0.0});
    CHECK(f.step_count == 0);
    CHECK(store.entry("live").var.value()[0] != 1.25);
}

TEST_CASE("adam matches a hand-stepped reference over several iterations") {
    // independent scalar recurrence as the oracle
    const double g_seq[] = {0.4, -1.2, 2.5, 0.0, 0.9};
    AdamConfig adam;
    adam.learning_rate = 0.01;

    double ref = 1.0, m = 0.0, v = 0.0;
    ParamStore store;
    store.create("w", Tensor::vector1d({1.0}));
    for (int t = 1; t <= 5; ++t) {
        const double g = g_seq[t - 1];
        store.zero_grad();
        store.entry("w").var.grad()[0] = g;
        store.adam_step(adam);

        m = adam.beta1 * m + (1 - adam.beta1) * g;
        v = adam.beta2 * v + (1 - adam.beta2) * g * g;
        const double mhat = m / (1 - std::pow(adam.beta1, t));
        const double vhat = v / (1 - std::pow(adam.beta2, t));
        ref -= adam.learning_rate * mhat / (std::sqrt(vhat) + adam.epsilon);
        CHECK(store.entry("w").var.value()[0] == doctest::Approx(ref).epsilon(1e-15));
    }
}

TEST_CASE("per-entry step counters advance independently") {
    ParamStore store;
    store.create("a", Tensor::vector1d({1.0}));
    store.create("b", Tensor::vector1d({1.0}));
    AdamConfig adam;
    store.entry("b").trainable = false;
    store.adam_step(adam);
    store.adam_step(adam);
    store.entry("b").trainable = true;
    store.adam_step(adam);
    CHECK(store.entry("a").step_count == 3);
    CHECK(store.entry("b").step_count == 1);
}
