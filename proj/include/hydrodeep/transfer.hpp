#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydrodeep/model.hpp"

namespace hydrodeep {

/// The four finetuning regimes. input_adapter and head always stay trainable
/// (the adapter is rebuilt whenever the grid count changes); spatial and
/// temporal groups are what the policies argue about.
enum class FreezePolicy { T1, T2, T3, T4 };

const char* policy_name(FreezePolicy p);
FreezePolicy policy_from_name(const std::string& name);

/// Groups left trainable by a policy:
/// T1 {input_adapter, head}, T2 all, T3 {input_adapter, temporal, head},
/// T4 {input_adapter, spatial, head}.
std::vector<LayerGroup> trainable_groups(FreezePolicy p);

/// Sets the trainable flags per group. Idempotent.
void apply_policy(Model& model, FreezePolicy p);

/// Source model rebuilt for a new grid count: spatial, temporal, and head
/// parameter values copied bit-exactly with Adam moments reset; the input
/// adapter is freshly initialized from `seed`. When `reuse_adapter` is set
/// (valid only for matching grid counts) the adapter is copied too.
Model retarget(const Model& source, int target_grid_count, std::uint64_t seed,
               bool reuse_adapter = false);

struct TransferPlan {
    std::string target_id;
    FreezePolicy policy = FreezePolicy::T2;
    int budget_epochs = 20;
    std::uint64_t seed = 0;
    bool reuse_adapter = false;  // strict no-new-adapter variant, same-L only
    TrainConfig train;           // epochs field is overridden by budget_epochs
    PipelineOptions pipeline;
};

struct FinetuneResult {
    Model model;
    MetricReport test_report;
    TrainHistory history;
};

/// retarget -> apply_policy -> train budget_epochs on the target's train
/// split -> evaluate on the target's test split.
FinetuneResult finetune(const Model& source, const GridSpec& target_grid,
                        const SeriesTable& target_series, const TransferPlan& plan);

struct ComparisonRow {
    std::string target;
    std::string policy;  // scratch, scratch_full, T1..T4
    double nse = 0.0;
    double pbias_pct = 0.0;
    double rsr = 0.0;
    std::size_t grids = 0;
    int budget_epochs = 0;
    std::uint64_t seed = 0;
};

struct TransferTarget {
    std::string id;
    GridSpec grid;
    SeriesTable series;
};

/// One row per (target, approach): a scratch model trained for the same
/// budget, the requested policies, and optionally a full-schedule scratch
/// model. An empty policy list means all four.
std::vector<ComparisonRow> compare_approaches(const Model& source,
                                              const std::vector<TransferTarget>& targets,
                                              const TransferPlan& base_plan,
                                              std::vector<FreezePolicy> policies = {},
                                              int scratch_full_epochs = 0);

void write_comparison_csv(const std::string& path, const std::vector<ComparisonRow>& rows);

}  // namespace hydrodeep
