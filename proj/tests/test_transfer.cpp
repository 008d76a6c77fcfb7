#include <set>

#include "doctest.h"

#include "hydrodeep/errors.hpp"
#include "hydrodeep/synth.hpp"
#include "hydrodeep/transfer.hpp"

using namespace hydrodeep;

namespace {

ModelConfig tiny_config(int grid_count) {
    ModelConfig cfg;
    cfg.arch = Arch::hydrodeep;
    cfg.lag = 7;
    cfg.grid_count = grid_count;
    cfg.conv_layers = 1;
    cfg.conv_filters = 4;
    cfg.kernel_width = 3;
    cfg.pool_size = 2;
    cfg.lstm_layers = 2;
    cfg.lstm_units = 4;
    cfg.dense_units = 5;
    cfg.adapter_units = 4;
    cfg.dropout_rate = 0.0;
    return cfg;
}

std::set<LayerGroup> frozen_set(FreezePolicy p) {
    std::set<LayerGroup> all = {LayerGroup::input_adapter, LayerGroup::spatial, LayerGroup::temporal,
                                LayerGroup::head};
    for (LayerGroup g : trainable_groups(p)) all.erase(g);
    return all;
}

SynthResult target_watershed(std::size_t grids, std::uint64_t seed, std::size_t days = 120) {
    SynthSpec spec;
    spec.grid_count = grids;
    spec.seed = seed;
    return gen_series(spec, days, 10957);
}

}  // namespace

TEST_CASE("policy tables match the four regimes") {
    CHECK(frozen_set(FreezePolicy::T1) ==
          std::set<LayerGroup>{LayerGroup::spatial, LayerGroup::temporal});
    CHECK(frozen_set(FreezePolicy::T2).empty());
    CHECK(frozen_set(FreezePolicy::T3) == std::set<LayerGroup>{LayerGroup::spatial});
    CHECK(frozen_set(FreezePolicy::T4) == std::set<LayerGroup>{LayerGroup::temporal});

    // T3 and T4 split {spatial, temporal} without overlap
    std::set<LayerGroup> both;
    for (LayerGroup g : frozen_set(FreezePolicy::T3)) both.insert(g);
    for (LayerGroup g : frozen_set(FreezePolicy::T4)) both.insert(g);
    CHECK(both == std::set<LayerGroup>{LayerGroup::spatial, LayerGroup::temporal});
    for (LayerGroup g : frozen_set(FreezePolicy::T3)) {
        CHECK(frozen_set(FreezePolicy::T4).count(g) == 0);
    }
}

TEST_CASE("apply_policy sets flags per group and is idempotent") {
    Model model(tiny_config(4), 1);
    apply_policy(model, FreezePolicy::T3);
    for (auto& [name, e] : model.params()) {
        if (group_of_param(name) == LayerGroup::spatial) {
            CHECK_FALSE(e.trainable);
        } else {
            CHECK(e.trainable);
        }
    }
    apply_policy(model, FreezePolicy::T3);  // second application changes nothing
    for (auto& [name, e] : model.params()) {
        CHECK(e.trainable == (group_of_param(name) != LayerGroup::spatial));
    }

    apply_policy(model, FreezePolicy::T2);
    for (auto& [name, e] : model.params()) CHECK(e.trainable);
}

TEST_CASE("retarget copies everything but the adapter") {
    Model source(tiny_config(4), 2);
    // dirty the moments so the reset is observable
    for (auto& [name, e] : source.params()) {
        e.m.fill(0.5);
        e.v.fill(0.25);
        e.step_count = 7;
    }

    Model same = retarget(source, 4, 99);
    Model wider = retarget(source, 11, 99);
    for (auto& [name, e] : source.params()) {
        if (group_of_param(name) == LayerGroup::input_adapter) continue;
        CHECK(same.params().entry(name).var.value().data == e.var.value().data);
        CHECK(wider.params().entry(name).var.value().data == e.var.value().data);
        CHECK(wider.params().entry(name).m.data == Tensor(e.m.shape).data);  // zeros
        CHECK(wider.params().entry(name).step_count == 0);
    }
    CHECK(wider.config().grid_count == 11);
    CHECK_THROWS_AS(retarget(source, 0, 1), ParameterError);
}

TEST_CASE("retargeted models run for the published grid counts") {
    Model source(tiny_config(29), 3);
    Rng rng(4);
    for (int L : {32, 34, 39, 61, 65}) {
        Model t = retarget(source, L, 5);
        Tensor in1({7, t.config().input1_width()});
        Tensor in2({t.config().input2_width()});
        for (double& v : in1.data) v = rng.uniform(0.0, 1.0);
        for (double& v : in2.data) v = rng.uniform(0.0, 1.0);
        CHECK_NOTHROW(t.predict(in1, in2));
    }
}

TEST_CASE("retarget parameter delta is confined to the adapter") {
    Model source(tiny_config(4), 2);
    Model wider = retarget(source, 9, 1);
    std::size_t adapter_src = 0, adapter_dst = 0;
    for (const std::string& n : source.group_params(LayerGroup::input_adapter)) {
        adapter_src += source.params().entry(n).var.value().size();
    }
    for (const std::string& n : wider.group_params(LayerGroup::input_adapter)) {
        adapter_dst += wider.params().entry(n).var.value().size();
    }
    CHECK(wider.params().parameter_count() - source.params().parameter_count() ==
          adapter_dst - adapter_src);
}

TEST_CASE("adapter reuse requires matching grid counts") {
    Model source(tiny_config(4), 2);
    Model reused = retarget(source, 4, 77, true);
    for (auto& [name, e] : source.params()) {
        CHECK(reused.params().entry(name).var.value().data == e.var.value().data);
    }
    CHECK_THROWS_AS(retarget(source, 5, 77, true), ParameterError);
}

TEST_CASE("finetune freezes exactly the policy's groups") {
    const SynthResult src_w = target_watershed(4, 100, 160);
    PipelineOptions pipe;
    pipe.lag = 7;
    const PreparedData src_data = prepare(src_w.grid, src_w.series, pipe);
    Model source(tiny_config(4), 6);
    source.set_scaler(src_data.scaler);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 8;
    source.train(src_data.train, src_data.val, tc);

    const SynthResult tgt = target_watershed(6, 200, 160);
    for (FreezePolicy p : {FreezePolicy::T1, FreezePolicy::T3, FreezePolicy::T4}) {
        TransferPlan plan;
        plan.policy = p;
        plan.budget_epochs = 2;
        plan.seed = 9;
        plan.train = tc;
        const FinetuneResult r = finetune(source, tgt.grid, tgt.series, plan);
        CHECK(r.history.size() == 2);  // exactly the budget
        for (auto& [name, e] : source.params()) {
            const LayerGroup g = group_of_param(name);
            if (frozen_set(p).count(g)) {
                CHECK(r.model.params().entry(name).var.value().data == e.var.value().data);
            }
        }
    }
}

TEST_CASE("a zero budget evaluates the retargeted model as-is") {
    Model source(tiny_config(4), 6);
    const SynthResult tgt = target_watershed(5, 300, 160);
    TransferPlan plan;
    plan.policy = FreezePolicy::T1;
    plan.budget_epochs = 0;
    const FinetuneResult r = finetune(source, tgt.grid, tgt.series, plan);
    CHECK(r.history.empty());
    CHECK(r.test_report.n > 0);
}

TEST_CASE("fully-trainable finetuning beats frozen features on a temporal shift") {
    SynthSpec base;
    base.grid_count = 5;
    base.seed = 420;
    base.noise_std = 0.08;
    const SynthResult src = gen_series(base, 600, 10957);

    ModelConfig cfg = tiny_config(5);
    cfg.conv_layers = 2;
    cfg.conv_filters = 6;
    cfg.lstm_units = 8;
    cfg.adapter_units = 8;
    cfg.dense_units = 8;

    PipelineOptions pipe;
    pipe.lag = 7;
    const PreparedData src_data = prepare(src.grid, src.series, pipe);
    Model source(cfg, 42);
    source.set_scaler(src_data.scaler);
    TrainConfig tc;
    tc.epochs = 40;
    tc.batch_size = 32;
    tc.seed = 42;
    tc.adam.learning_rate = 2e-3;
    source.train(src_data.train, src_data.val, tc);

    int t2_wins = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        const TransferPair pair =
            make_transfer_pair(base, ShiftMode::temporal_shift, 9000 + s, 600, 10957);
        TransferPlan plan;
        plan.budget_epochs = 20;
        plan.seed = s;
        plan.train = tc;
        plan.policy = FreezePolicy::T1;
        const double nse_t1 =
            finetune(source, pair.target.grid, pair.target.series, plan).test_report.nse;
        plan.policy = FreezePolicy::T2;
        const double nse_t2 =
            finetune(source, pair.target.grid, pair.target.series, plan).test_report.nse;
        if (nse_t2 >= nse_t1) ++t2_wins;
    }
    CHECK(t2_wins >= 4);
}

TEST_CASE("comparison table has one row per approach and target") {
    Model source(tiny_config(4), 6);
    const SynthResult t1 = target_watershed(5, 301, 140);
    const SynthResult t2 = target_watershed(7, 302, 140);
    std::vector<TransferTarget> targets;
    targets.push_back({"t1", t1.grid, t1.series});
    targets.push_back({"t2", t2.grid, t2.series});
    TransferPlan plan;
    plan.budget_epochs = 1;
    plan.train.batch_size = 16;
    const auto rows = compare_approaches(source, targets, plan);
    REQUIRE(rows.size() == 10);  // 2 targets x (scratch + T1..T4)
    CHECK(rows[0].policy == "scratch");
    CHECK(rows[1].policy == "T1");
    CHECK(rows[4].policy == "T4");
    CHECK(rows[5].target == "t2");
    for (const auto& r : rows) CHECK(r.budget_epochs == 1);
}
