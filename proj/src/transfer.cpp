#include "hydrodeep/transfer.hpp"

#include <cstdio>
#include <fstream>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

const char* policy_name(FreezePolicy p) {
    switch (p) {
        case FreezePolicy::T1: return "T1";
        case FreezePolicy::T2: return "T2";
        case FreezePolicy::T3: return "T3";
        case FreezePolicy::T4: return "T4";
    }
    return "T2";
}

FreezePolicy policy_from_name(const std::string& name) {
    for (FreezePolicy p : {FreezePolicy::T1, FreezePolicy::T2, FreezePolicy::T3, FreezePolicy::T4}) {
        if (name == policy_name(p)) return p;
    }
    throw ParameterError("unknown freeze policy: " + name + " (expected T1|T2|T3|T4)");
}

std::vector<LayerGroup> trainable_groups(FreezePolicy p) {
    switch (p) {
        case FreezePolicy::T1: return {LayerGroup::input_adapter, LayerGroup::head};
        case FreezePolicy::T2:
            return {LayerGroup::input_adapter, LayerGroup::spatial, LayerGroup::temporal,
                    LayerGroup::head};
        case FreezePolicy::T3:
            return {LayerGroup::input_adapter, LayerGroup::temporal, LayerGroup::head};
        case FreezePolicy::T4:
            return {LayerGroup::input_adapter, LayerGroup::spatial, LayerGroup::head};
    }
    return {};
}

void apply_policy(Model& model, FreezePolicy p) {
    const auto groups = trainable_groups(p);
    for (auto& [name, e] : model.params()) {
        const LayerGroup g = group_of_param(name);
        bool trainable = false;
        for (LayerGroup t : groups) {
            if (t == g) {
                trainable = true;
                break;
            }
        }
        e.trainable = trainable;
    }
}

Model retarget(const Model& source, int target_grid_count, std::uint64_t seed, bool reuse_adapter) {
    if (target_grid_count < 1) throw ParameterError("retarget: grid count must be >= 1");
    if (reuse_adapter && target_grid_count != source.config().grid_count) {
        throw ParameterError("retarget: adapter can only be reused when grid counts match");
    }
    ModelConfig cfg = source.config();
    cfg.grid_count = target_grid_count;
    Model target(cfg, seed);
    for (auto& [name, e] : target.params()) {
        if (!reuse_adapter && group_of_param(name) == LayerGroup::input_adapter) continue;
        const ParamEntry& src = source.params().entry(name);
        e.var.mutable_value() = src.var.value();
        // Moments stay zero: the source's Adam state has no meaning for the
        // target's data distribution.
    }
    return target;
}

FinetuneResult finetune(const Model& source, const GridSpec& target_grid,
                        const SeriesTable& target_series, const TransferPlan& plan) {
    if (plan.budget_epochs < 0) throw ParameterError("finetune: budget must be >= 0");
    Model model = retarget(source, static_cast<int>(target_grid.grid_count()), plan.seed,
                           plan.reuse_adapter);
    apply_policy(model, plan.policy);

    PipelineOptions pipe = plan.pipeline;
    pipe.lag = model.config().lag;
    pipe.use_runoff = model.config().effective_use_runoff();
    const PreparedData data = prepare(target_grid, target_series, pipe);
    model.set_scaler(data.scaler);

    TrainConfig tc = plan.train;
    tc.epochs = plan.budget_epochs;
    tc.seed = plan.seed;

    FinetuneResult result{std::move(model), {}, {}};
    if (plan.budget_epochs > 0) {
        result.history = result.model.train(data.train, data.val, tc);
    }
    result.test_report = result.model.evaluate(data.test, data.scaler);
    return result;
}

namespace {

ComparisonRow make_row(const std::string& target, const std::string& policy, const MetricReport& r,
                       std::size_t grids, int budget, std::uint64_t seed) {
    ComparisonRow row;
    row.target = target;
    row.policy = policy;
    row.nse = r.nse;
    row.pbias_pct = r.pbias_pct;
    row.rsr = r.rsr;
    row.grids = grids;
    row.budget_epochs = budget;
    row.seed = seed;
    return row;
}

MetricReport scratch_run(const Model& source, const TransferTarget& target, const TransferPlan& plan,
                         int epochs) {
    ModelConfig cfg = source.config();
    cfg.grid_count = static_cast<int>(target.grid.grid_count());
    Model model(cfg, plan.seed);

    PipelineOptions pipe = plan.pipeline;
    pipe.lag = cfg.lag;
    pipe.use_runoff = cfg.effective_use_runoff();
    const PreparedData data = prepare(target.grid, target.series, pipe);
    model.set_scaler(data.scaler);

    TrainConfig tc = plan.train;
    tc.epochs = epochs;
    tc.seed = plan.seed;
    if (epochs > 0) model.train(data.train, data.val, tc);
    return model.evaluate(data.test, data.scaler);
}

}  // namespace

std::vector<ComparisonRow> compare_approaches(const Model& source,
                                              const std::vector<TransferTarget>& targets,
                                              const TransferPlan& base_plan,
                                              std::vector<FreezePolicy> policies,
                                              int scratch_full_epochs) {
    if (policies.empty()) {
        policies = {FreezePolicy::T1, FreezePolicy::T2, FreezePolicy::T3, FreezePolicy::T4};
    }
    std::vector<ComparisonRow> rows;
    for (const TransferTarget& t : targets) {
        const std::size_t grids = t.grid.grid_count();

        MetricReport scratch = scratch_run(source, t, base_plan, base_plan.budget_epochs);
        rows.push_back(make_row(t.id, "scratch", scratch, grids, base_plan.budget_epochs,
                                base_plan.seed));
        if (scratch_full_epochs > 0) {
            MetricReport full = scratch_run(source, t, base_plan, scratch_full_epochs);
            rows.push_back(make_row(t.id, "scratch_full", full, grids, scratch_full_epochs,
                                    base_plan.seed));
        }
        for (FreezePolicy p : policies) {
            TransferPlan plan = base_plan;
            plan.target_id = t.id;
            plan.policy = p;
            const FinetuneResult r = finetune(source, t.grid, t.series, plan);
            rows.push_back(make_row(t.id, policy_name(p), r.test_report, grids, plan.budget_epochs,
                                    plan.seed));
        }
    }
    return rows;
}

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write comparison csv: " + path);
    out << "target,policy,nse,pbias_pct,rsr,grids,budget_epochs,seed\n";
    char buf[128];
    for (const ComparisonRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", r.nse, r.pbias_pct, r.rsr);
        out << r.target << "," << r.policy << "," << buf << "," << r.grids << "," << r.budget_epochs
            << "," << r.seed << "\n";
    }
}

}  // namespace hydrodeep
