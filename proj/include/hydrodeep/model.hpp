#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hydrodeep/datapipe.hpp"
#include "hydrodeep/ops.hpp"
#include "hydrodeep/metrics.hpp"
#include "hydrodeep/param_store.hpp"

namespace hydrodeep {

enum class Arch { hydrodeep, cnn, lstm, gru, bilstm, dl_ablation };

const char* arch_name(Arch arch);
Arch arch_from_name(const std::string& name);

/// Freeze units: every parameter belongs to exactly one group.
enum class LayerGroup { input_adapter, spatial, temporal, head };

const char* group_name(LayerGroup g);
LayerGroup group_from_name(const std::string& name);

/// Group is the parameter name's prefix up to '/'.
LayerGroup group_of_param(const std::string& param_name);

struct ModelConfig {
    Arch arch = Arch::hydrodeep;
    int lag = 7;
    int grid_count = 0;  // L, set from the dataset
    int conv_layers = 2;
    int conv_filters = 64;
    int kernel_width = 3;
    int pool_size = 2;
    int lstm_layers = 4;
    int lstm_units = 50;
    double dropout_rate = 0.2;
    int dense_units = 64;
    int adapter_units = 32;  // width both inputs are projected to
    bool use_runoff_inputs = true;

    /// dl_ablation always drops the runoff columns.
    bool effective_use_runoff() const;
    std::size_t input1_width() const;  // 2L+1, or L+1 without runoff
    std::size_t input2_width() const;  // 2L, or L without runoff

    /// Stage-by-stage feasibility check; throws BuildError naming the stage.
    void validate() const;
};

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    AdamConfig adam;
    std::uint64_t seed = 0;  // batch shuffling
    int patience = 0;        // early stop on validation loss; 0 disables

    void validate() const;
};

/// A built network: config, named parameters partitioned into layer groups,
/// the rng that drives dropout, and (after training) the fitted scaler.
class Model {
  public:
    Model(ModelConfig cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return seed_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    Rng& rng() { return rng_; }

    /// Records a forward pass; the result is the scalar prediction in the
    /// scaled units of the dataset.
    Var forward(const Tensor& input1, const Tensor& input2, Mode mode);

    /// Eval-mode forward, value only (no rng consumption).
    double predict(const Tensor& input1, const Tensor& input2);

    /// Reverse sweep through the most recent forward; populates parameter
    /// grads. Throws StateError when no forward pass has been recorded.
    void backward(double loss_seed = 1.0);

    TrainHistory train(const WindowedDataset& train_set, const WindowedDataset& val_set,
                       const TrainConfig& cfg);

    /// Predictions in physical units via the scaler's inverse transform.
    std::vector<double> predict_series(const WindowedDataset& ds, const Scaler& scaler);

    MetricReport evaluate(const WindowedDataset& ds, const Scaler& scaler);

    const std::optional<Scaler>& scaler() const { return scaler_; }
    void set_scaler(Scaler s) { scaler_ = std::move(s); }

    void save_checkpoint(const std::string& path) const;
    static Model load_checkpoint(const std::string& path);

    /// Parameter names of one freeze group, in store order.
    std::vector<std::string> group_params(LayerGroup g) const;

  private:
    void build();
    Var adapted_input2(const Tensor& input2);
    std::vector<Var> adapted_rows(const Tensor& input1);
    LstmParams lstm_params(const std::string& prefix) const;
    GruParams gru_params(const std::string& prefix) const;

    ModelConfig cfg_;
    std::uint64_t seed_;
    Rng rng_;
    ParamStore store_;
    std::optional<Scaler> scaler_;
    Var last_forward_;
};

/// Mean eval-mode MSE over a dataset (no parameter graph kept).
double dataset_loss(Model& model, const WindowedDataset& ds);

}  // namespace hydrodeep
