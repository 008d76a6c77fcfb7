#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hydrodeep/datapipe.hpp"
#include "hydrodeep/errors.hpp"
#include "hydrodeep/gradcheck.hpp"
#include "hydrodeep/metrics.hpp"
#include "hydrodeep/model.hpp"
#include "hydrodeep/synth.hpp"
#include "hydrodeep/transfer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hydrodeep;

namespace {

constexpr const char* kToolVersion = "hydrodeep 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// ---- config file handling ------------------------------------------------

struct RunSettings {
    ModelConfig model;
    TrainConfig train;
    PipelineOptions pipeline;
    SynthSpec synth;
};

void reject_unknown(const json& section, const std::vector<std::string>& known,
                    const std::string& prefix) {
    for (auto it = section.begin(); it != section.end(); ++it) {
        bool ok = false;
        for (const auto& k : known) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ParameterError("unknown config key: " + prefix + it.key());
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void apply_model_json(const json& j, ModelConfig& m) {
    reject_unknown(j,
                   {"arch", "lag", "grid_count", "conv_layers", "conv_filters", "kernel_width",
                    "pool_size", "lstm_layers", "lstm_units", "dropout_rate", "dense_units",
                    "adapter_units", "use_runoff_inputs"},
                   "model.");
    if (j.contains("arch")) m.arch = arch_from_name(j.at("arch").get<std::string>());
    maybe(j, "lag", m.lag);
    maybe(j, "grid_count", m.grid_count);
    maybe(j, "conv_layers", m.conv_layers);
    maybe(j, "conv_filters", m.conv_filters);
    maybe(j, "kernel_width", m.kernel_width);
    maybe(j, "pool_size", m.pool_size);
    maybe(j, "lstm_layers", m.lstm_layers);
    maybe(j, "lstm_units", m.lstm_units);
    maybe(j, "dropout_rate", m.dropout_rate);
    maybe(j, "dense_units", m.dense_units);
    maybe(j, "adapter_units", m.adapter_units);
    maybe(j, "use_runoff_inputs", m.use_runoff_inputs);
}

void apply_train_json(const json& j, TrainConfig& t) {
    reject_unknown(
        j, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "seed", "patience"},
        "train.");
    maybe(j, "epochs", t.epochs);
    maybe(j, "batch_size", t.batch_size);
    maybe(j, "learning_rate", t.adam.learning_rate);
    maybe(j, "beta1", t.adam.beta1);
    maybe(j, "beta2", t.adam.beta2);
    maybe(j, "epsilon", t.adam.epsilon);
    maybe(j, "seed", t.seed);
    maybe(j, "patience", t.patience);
}

void apply_pipeline_json(const json& j, PipelineOptions& p) {
    reject_unknown(j, {"weight_exponent", "weight_floor_km", "train_frac", "val_frac_of_train"},
                   "pipeline.");
    maybe(j, "weight_exponent", p.weight_exponent);
    maybe(j, "weight_floor_km", p.weight_floor_km);
    maybe(j, "train_frac", p.train_frac);
    maybe(j, "val_frac_of_train", p.val_frac_of_train);
}

void apply_synth_json(const json& j, SynthSpec& s) {
    reject_unknown(j,
                   {"grid_count", "extent_km", "dist_min_km", "dist_max_km", "storm_rate_per_day",
                    "storm_depth_mm", "spatial_factor_min", "spatial_factor_max", "reservoir_k_min",
                    "reservoir_k_max", "delay_per_km", "area_scale", "noise_std", "seed"},
                   "synth.");
    maybe(j, "grid_count", s.grid_count);
    maybe(j, "extent_km", s.extent_km);
    maybe(j, "dist_min_km", s.dist_min_km);
    maybe(j, "dist_max_km", s.dist_max_km);
    maybe(j, "storm_rate_per_day", s.storm_rate_per_day);
    maybe(j, "storm_depth_mm", s.storm_depth_mm);
    maybe(j, "spatial_factor_min", s.spatial_factor_min);
    maybe(j, "spatial_factor_max", s.spatial_factor_max);
    maybe(j, "reservoir_k_min", s.reservoir_k_min);
    maybe(j, "reservoir_k_max", s.reservoir_k_max);
    maybe(j, "delay_per_km", s.delay_per_km);
    maybe(j, "area_scale", s.area_scale);
    maybe(j, "noise_std", s.noise_std);
    maybe(j, "seed", s.seed);
}

void load_config_file(const std::string& path, RunSettings& s) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config file is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"model", "train", "pipeline", "synth"}, "");
    if (j.contains("model")) apply_model_json(j["model"], s.model);
    if (j.contains("train")) apply_train_json(j["train"], s.train);
    if (j.contains("pipeline")) apply_pipeline_json(j["pipeline"], s.pipeline);
    if (j.contains("synth")) apply_synth_json(j["synth"], s.synth);
}

json settings_to_json(const RunSettings& s) {
    json j;
    j["model"] = {{"arch", arch_name(s.model.arch)},
                  {"lag", s.model.lag},
                  {"grid_count", s.model.grid_count},
                  {"conv_layers", s.model.conv_layers},
                  {"conv_filters", s.model.conv_filters},
                  {"kernel_width", s.model.kernel_width},
                  {"pool_size", s.model.pool_size},
                  {"lstm_layers", s.model.lstm_layers},
                  {"lstm_units", s.model.lstm_units},
                  {"dropout_rate", s.model.dropout_rate},
                  {"dense_units", s.model.dense_units},
                  {"adapter_units", s.model.adapter_units},
                  {"use_runoff_inputs", s.model.use_runoff_inputs}};
    j["train"] = {{"epochs", s.train.epochs},
                  {"batch_size", s.train.batch_size},
                  {"learning_rate", s.train.adam.learning_rate},
                  {"beta1", s.train.adam.beta1},
                  {"beta2", s.train.adam.beta2},
                  {"epsilon", s.train.adam.epsilon},
                  {"seed", s.train.seed},
                  {"patience", s.train.patience}};
    j["pipeline"] = {{"weight_exponent", s.pipeline.weight_exponent},
                     {"weight_floor_km", s.pipeline.weight_floor_km},
                     {"train_frac", s.pipeline.train_frac},
                     {"val_frac_of_train", s.pipeline.val_frac_of_train}};
    j["synth"] = {{"grid_count", s.synth.grid_count},
                  {"extent_km", s.synth.extent_km},
                  {"dist_min_km", s.synth.dist_min_km},
                  {"dist_max_km", s.synth.dist_max_km},
                  {"storm_rate_per_day", s.synth.storm_rate_per_day},
                  {"storm_depth_mm", s.synth.storm_depth_mm},
                  {"spatial_factor_min", s.synth.spatial_factor_min},
                  {"spatial_factor_max", s.synth.spatial_factor_max},
                  {"reservoir_k_min", s.synth.reservoir_k_min},
                  {"reservoir_k_max", s.synth.reservoir_k_max},
                  {"delay_per_km", s.synth.delay_per_km},
                  {"area_scale", s.synth.area_scale},
                  {"noise_std", s.synth.noise_std},
                  {"seed", s.synth.seed}};
    return j;
}

// ---- output directory helpers ---------------------------------------------

/// Marks a run directory: a FAILED sentinel appears unless the command
/// completes, so partial outputs are never mistaken for good ones.
class RunDir {
  public:
    explicit RunDir(const std::string& path) : path_(path) {
        fs::create_directories(path_);
        fs::remove(fs::path(path_) / "FAILED");
        armed_ = true;
    }
    ~RunDir() {
        if (armed_) write_sentinel("command did not complete");
    }
    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const { return (fs::path(path_) / name).string(); }
    void fail(const std::string& reason) {
        write_sentinel(reason);
        armed_ = false;
    }
    void done() { armed_ = false; }

  private:
    void write_sentinel(const std::string& reason) {
        std::ofstream out(fs::path(path_) / "FAILED");
        out << reason << "\n";
    }
    std::string path_;
    bool armed_ = false;
};

void write_effective_config(RunDir& dir, const std::string& command, const RunSettings& s) {
    json j = settings_to_json(s);
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    std::ofstream out(dir.file("effective_config.json"));
    out << j.dump(2) << "\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << text;
}

std::string format_fixed(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

// ---- shared pipeline steps -------------------------------------------------

struct LoadedData {
    GridSpec grid;
    SeriesTable series;
};

LoadedData load_data_dir(const std::string& dir) {
    LoadedData d;
    d.grid = load_grid_csv((fs::path(dir) / "grid.csv").string());
    d.series = load_series_csv((fs::path(dir) / "series.csv").string());
    if (d.grid.grid_count() != d.series.grids()) {
        throw ParseError("grid.csv and series.csv disagree on grid count");
    }
    return d;
}

void write_history_csv(const std::string& path, const TrainHistory& history) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        os << i + 1 << "," << format_fixed(history[i].train_loss) << ","
           << format_fixed(history[i].val_loss) << "\n";
    }
    write_text(path, os.str());
}

void write_predictions_csv(const std::string& path, const WindowedDataset& ds,
                           const std::vector<double>& predicted) {
    std::ostringstream os;
    os << "date,observed,predicted\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << format_date(ds.target_date[i]) << "," << format_fixed(ds.target_physical[i]) << ","
           << format_fixed(predicted[i]) << "\n";
    }
    write_text(path, os.str());
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// ---- commands ---------------------------------------------------------------

int cmd_generate(const RunSettings& settings, const std::string& out, int days,
                 const std::string& start_date, const std::vector<std::string>& target_modes,
                 std::uint64_t target_seed) {
    if (days < 10) throw ParameterError("generate: need at least 10 days");
    RunDir dir(out);
    try {
        const std::int64_t start = parse_date(start_date);
        const SynthResult src = gen_series(settings.synth, static_cast<std::size_t>(days), start);
        write_grid_csv(dir.file("grid.csv"), src.grid);
        write_series_csv(dir.file("series.csv"), src.series);
        for (const std::string& mode_name : target_modes) {
            const ShiftMode mode = shift_mode_from_name(mode_name);
            const TransferPair pair = make_transfer_pair(settings.synth, mode, target_seed,
                                                         static_cast<std::size_t>(days), start);
            const fs::path tdir = fs::path(dir.path()) / "targets" / mode_name;
            fs::create_directories(tdir);
            write_grid_csv((tdir / "grid.csv").string(), pair.target.grid);
            write_series_csv((tdir / "series.csv").string(), pair.target.series);
        }
        write_effective_config(dir, "generate", settings);
        std::cout << "generated " << days << " days, " << settings.synth.grid_count << " grids -> "
                  << dir.path() << "\n";
        dir.done();
        return kExitOk;
    } catch (...) {
        dir.fail("generate failed");
        throw;
    }
}

int cmd_train(RunSettings settings, const std::string& data_dir, const std::string& out) {
    RunDir dir(out);
    try {
        const LoadedData data = load_data_dir(data_dir);
        settings.model.grid_count = static_cast<int>(data.grid.grid_count());
        settings.pipeline.lag = settings.model.lag;
        settings.pipeline.use_runoff = settings.model.effective_use_runoff();

        const PreparedData prep = prepare(data.grid, data.series, settings.pipeline);
        print_warnings(prep.warnings);

        Model model(settings.model, settings.train.seed);
        model.set_scaler(prep.scaler);
        const TrainHistory history = model.train(prep.train, prep.val, settings.train);
        const std::vector<double> predicted = model.predict_series(prep.test, prep.scaler);
        const MetricReport metrics = report(prep.test.target_physical, predicted);

        model.save_checkpoint(dir.file("model.ckpt"));
        write_history_csv(dir.file("history.csv"), history);
        write_predictions_csv(dir.file("predictions.csv"), prep.test, predicted);
        write_text(dir.file("metrics.json"), metrics.to_json() + "\n");
        write_effective_config(dir, "train", settings);
        std::cout << metrics.to_json() << "\n";
        dir.done();
        return kExitOk;
    } catch (...) {
        dir.fail("train failed");
        throw;
    }
}

int cmd_evaluate(const RunSettings& settings, const std::string& ckpt, const std::string& data_dir,
                 const std::string& out, const std::string& split_name, bool pbias_as_printed) {
    Model model = Model::load_checkpoint(ckpt);
    if (!model.scaler()) throw StateError("checkpoint has no scaler; train before evaluating");
    const LoadedData data = load_data_dir(data_dir);
    if (static_cast<int>(data.grid.grid_count()) != model.config().grid_count) {
        throw DimensionError("evaluate: dataset grid count " + std::to_string(data.grid.grid_count()) +
                             " does not match checkpoint " + std::to_string(model.config().grid_count));
    }

    PipelineOptions pipe = settings.pipeline;
    pipe.lag = model.config().lag;
    pipe.use_runoff = model.config().effective_use_runoff();
    WindowedDataset ds = window_with_scaler(data.series, data.grid, *model.scaler(), pipe);
    if (split_name != "all") {
        SplitDataset parts = split(ds, pipe.train_frac, pipe.val_frac_of_train);
        if (split_name == "train") {
            ds = std::move(parts.train);
        } else if (split_name == "val") {
            ds = std::move(parts.val);
        } else if (split_name == "test") {
            ds = std::move(parts.test);
        } else {
            throw ParameterError("evaluate: unknown split " + split_name);
        }
    }

    const std::vector<double> predicted = model.predict_series(ds, *model.scaler());
    MetricReport metrics = report(ds.target_physical, predicted);
    if (pbias_as_printed) {
        metrics.pbias_pct = pbias_squared_numerator(ds.target_physical, predicted);
    }

    if (!out.empty()) {
        RunDir dir(out);
        try {
            write_predictions_csv(dir.file("predictions.csv"), ds, predicted);
            write_text(dir.file("metrics.json"), metrics.to_json() + "\n");
            write_effective_config(dir, "evaluate", settings);
            dir.done();
        } catch (...) {
            dir.fail("evaluate failed");
            throw;
        }
    }
    std::cout << metrics.to_json() << "\n";
    return kExitOk;
}

std::vector<int> parse_lag_list(const std::string& spec) {
    std::vector<int> lags;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(spec.substr(0, dots));
        const int hi = std::stoi(spec.substr(dots + 2));
        if (lo < 1 || hi < lo) throw ParameterError("bad lag range: " + spec);
        for (int l = lo; l <= hi; ++l) lags.push_back(l);
        return lags;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) lags.push_back(std::stoi(tok));
    }
    if (lags.empty()) throw ParameterError("no lags given");
    return lags;
}

/// Short lookbacks cannot carry the full valid-convolution stack; shrink the
/// stage geometry until the pooled length stays positive so the whole sweep
/// range builds. The effective stages are recorded per row.
ModelConfig fit_config_to_lag(ModelConfig cfg, int lag) {
    cfg.lag = lag;
    if (cfg.arch == Arch::lstm || cfg.arch == Arch::gru || cfg.arch == Arch::bilstm) return cfg;
    cfg.kernel_width = std::min(cfg.kernel_width, lag);
    auto conv_out = [&] { return cfg.lag - cfg.conv_layers * (cfg.kernel_width - 1); };
    while (cfg.conv_layers > 1 && conv_out() < 1) --cfg.conv_layers;
    while (cfg.kernel_width > 1 && conv_out() < 1) --cfg.kernel_width;
    cfg.pool_size = std::max(1, std::min(cfg.pool_size, conv_out()));
    return cfg;
}

int cmd_sweep_lag(RunSettings settings, const std::string& data_dir, const std::string& lag_spec,
                  const std::string& out) {
    RunDir dir(out);
    try {
        const LoadedData data = load_data_dir(data_dir);
        settings.model.grid_count = static_cast<int>(data.grid.grid_count());
        const std::vector<int> lags = parse_lag_list(lag_spec);

        std::ostringstream os;
        os << "lag,nse,pbias_pct,rsr,n,conv_layers,kernel_width,pool_size\n";
        for (int lag : lags) {
            RunSettings local = settings;
            local.model = fit_config_to_lag(settings.model, lag);
            local.pipeline.lag = lag;
            local.pipeline.use_runoff = local.model.effective_use_runoff();
            const PreparedData prep = prepare(data.grid, data.series, local.pipeline);
            Model model(local.model, local.train.seed);
            model.set_scaler(prep.scaler);
            model.train(prep.train, prep.val, local.train);
            const MetricReport m = model.evaluate(prep.test, prep.scaler);
            os << lag << "," << format_fixed(m.nse) << "," << format_fixed(m.pbias_pct) << ","
               << format_fixed(m.rsr) << "," << m.n << "," << local.model.conv_layers << ","
               << local.model.kernel_width << "," << local.model.pool_size << "\n";
            std::cout << "lag " << lag << ": nse " << format_fixed(m.nse) << "\n";
        }
        write_text(dir.file("lag_sweep.csv"), os.str());
        write_effective_config(dir, "sweep-lag", settings);
        dir.done();
        return kExitOk;
    } catch (...) {
        dir.fail("sweep-lag failed");
        throw;
    }
}

int cmd_transfer(RunSettings settings, const std::string& source_ckpt,
                 const std::vector<std::string>& target_dirs, const std::string& policy_spec,
                 int budget, const std::string& out, int scratch_full_epochs) {
    RunDir dir(out);
    try {
        const Model source = Model::load_checkpoint(source_ckpt);
        std::vector<TransferTarget> targets;
        for (const std::string& tdir : target_dirs) {
            LoadedData d = load_data_dir(tdir);
            targets.push_back({fs::path(tdir).filename().string(), std::move(d.grid),
                               std::move(d.series)});
        }

        std::vector<FreezePolicy> policies;
        if (policy_spec != "all") policies.push_back(policy_from_name(policy_spec));

        TransferPlan plan;
        plan.budget_epochs = budget;
        plan.seed = settings.train.seed;
        plan.train = settings.train;
        plan.pipeline = settings.pipeline;

        const auto rows = compare_approaches(source, targets, plan, policies, scratch_full_epochs);
        write_comparison_csv(dir.file("transfer_comparison.csv"), rows);
        for (const auto& r : rows) {
            std::cout << r.target << " " << r.policy << ": nse " << format_fixed(r.nse) << " pbias "
                      << format_fixed(r.pbias_pct) << " rsr " << format_fixed(r.rsr) << "\n";
        }
        write_effective_config(dir, "transfer", settings);
        dir.done();
        return kExitOk;
    } catch (...) {
        dir.fail("transfer failed");
        throw;
    }
}

int cmd_gradcheck(const std::string& arch, std::uint64_t seed) {
    // Small widths keep the finite-difference sweep quick while touching
    // every stage of the chosen architecture.
    ModelConfig cfg;
    cfg.arch = arch_from_name(arch);
    cfg.lag = 7;
    cfg.grid_count = 4;
    cfg.conv_layers = 2;
    cfg.conv_filters = 5;
    cfg.kernel_width = 3;
    cfg.pool_size = 2;
    cfg.lstm_layers = 2;
    cfg.lstm_units = 6;
    cfg.dense_units = 6;
    cfg.adapter_units = 6;
    cfg.dropout_rate = 0.2;

    Model model(cfg, seed);
    Rng data_rng(seed ^ 0x5eedULL);
    Tensor in1({static_cast<std::size_t>(cfg.lag), cfg.input1_width()});
    for (double& v : in1.data) v = data_rng.uniform(0.0, 1.0);
    Tensor in2({cfg.input2_width()});
    for (double& v : in2.data) v = data_rng.uniform(0.0, 1.0);

    // Checking near the current prediction keeps the loss (and with it the
    // finite-difference roundoff) small without shrinking the gradients below
    // the comparison floor.
    model.rng() = Rng(seed).fork(1);
    const double pred0 = model.forward(in1, in2, Mode::train).value()[0];
    const Tensor target = Tensor::scalar(pred0 - 5e-5);

    const auto make_loss = [&]() {
        model.rng() = Rng(seed).fork(1);  // same dropout mask on every call
        return mse_loss(model.forward(in1, in2, Mode::train), target);
    };
    const GradCheckReport report = grad_check(model.params(), make_loss, 1e-6);
    std::cout << "arch " << arch << " max relative gradient error " << report.max_rel_error << " at "
              << report.worst_parameter << "[" << report.worst_index << "]\n";
    if (report.max_rel_error >= 1e-5) {
        std::cerr << "gradient check FAILED (analytic " << report.analytic << ", numeric "
                  << report.numeric << ")\n";
        return kExitNumeric;
    }
    return kExitOk;
}

int cmd_compare(RunSettings settings, const std::string& data_dir, const std::string& archs_spec,
                const std::string& out) {
    RunDir dir(out);
    try {
        const LoadedData data = load_data_dir(data_dir);
        std::vector<std::string> archs;
        std::stringstream ss(archs_spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) archs.push_back(tok);
        }
        if (archs.empty()) throw ParameterError("no architectures given");

        std::ostringstream os;
        os << "arch,nse,pbias_pct,rsr,n\n";
        for (const std::string& arch : archs) {
            RunSettings local = settings;
            local.model.arch = arch_from_name(arch);
            local.model.grid_count = static_cast<int>(data.grid.grid_count());
            local.pipeline.lag = local.model.lag;
            local.pipeline.use_runoff = local.model.effective_use_runoff();
            const PreparedData prep = prepare(data.grid, data.series, local.pipeline);
            Model model(local.model, local.train.seed);
            model.set_scaler(prep.scaler);
            model.train(prep.train, prep.val, local.train);
            const MetricReport m = model.evaluate(prep.test, prep.scaler);
            os << arch << "," << format_fixed(m.nse) << "," << format_fixed(m.pbias_pct) << ","
               << format_fixed(m.rsr) << "," << m.n << "\n";
            std::cout << arch << ": nse " << format_fixed(m.nse) << "\n";
        }
        write_text(dir.file("arch_comparison.csv"), os.str());
        write_effective_config(dir, "compare", settings);
        dir.done();
        return kExitOk;
    } catch (...) {
        dir.fail("compare failed");
        throw;
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const BuildError*>(&e)) {
        return kExitConfig;
    }
    return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kToolVersion) +
                 " - grid-based river discharge prediction with transfer learning"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    RunSettings settings;
    std::string config_path;

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize watershed datasets");
    std::string gen_out;
    int gen_days = 1500;
    std::string gen_start = "2000-01-01";
    std::vector<std::string> gen_targets;
    std::uint64_t gen_target_seed = 0;
    bool gen_target_seed_set = false;
    gen->add_option("--spec", config_path, "JSON config with a synth section");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--days", gen_days, "days to simulate");
    gen->add_option("--start-date", gen_start, "first day (ISO)");
    gen->add_option("--targets", gen_targets, "transfer targets: spatial,temporal,both")
        ->delimiter(',');
    gen->add_option("--target-seed", gen_target_seed, "seed for transfer targets")
        ->each([&](const std::string&) { gen_target_seed_set = true; });
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    gen->add_option("--seed", gen_seed, "override synth seed")->each([&](const std::string&) {
        gen_seed_set = true;
    });
    int gen_grids = 0;
    gen->add_option("--grids", gen_grids, "override synth grid count");
    double gen_noise = -1.0;
    gen->add_option("--noise-std", gen_noise, "override synth noise std");

    // train
    auto* train = app.add_subcommand("train", "train a model on a dataset directory");
    std::string train_data, train_out, train_arch;
    int train_lag = 0, train_epochs = -1, train_batch = 0, train_patience = -1;
    double train_lr = -1.0;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train->add_option("--data", train_data, "dataset directory (grid.csv, series.csv)")->required();
    train->add_option("--config", config_path, "JSON config file");
    train->add_option("--out", train_out, "output directory")->required();
    train->add_option("--arch", train_arch, "hydrodeep|cnn|lstm|gru|bilstm|dl_ablation");
    train->add_option("--lag", train_lag, "lookback days");
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--batch-size", train_batch, "minibatch size");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_option("--patience", train_patience, "early-stop patience (0 disables)");
    train->add_option("--seed", train_seed, "seed")->each([&](const std::string&) {
        train_seed_set = true;
    });

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data, eval_out, eval_split = "test";
    bool eval_as_printed = false;
    eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
    eval->add_option("--data", eval_data, "dataset directory")->required();
    eval->add_option("--out", eval_out, "output directory for predictions csv");
    eval->add_option("--split", eval_split, "all|train|val|test");
    eval->add_flag("--as-printed", eval_as_printed, "report the squared-numerator pbias variant");
    eval->add_option("--config", config_path, "JSON config file");

    // sweep-lag
    auto* sweep = app.add_subcommand("sweep-lag", "per-lag metric table");
    std::string sweep_data, sweep_lags = "3..11", sweep_out;
    sweep->add_option("--data", sweep_data, "dataset directory")->required();
    sweep->add_option("--lags", sweep_lags, "range like 3..11 or list 3,5,7");
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->add_option("--config", config_path, "JSON config file");
    int sweep_epochs = -1;
    sweep->add_option("--epochs", sweep_epochs, "training epochs per lag");
    std::uint64_t sweep_seed = 0;
    bool sweep_seed_set = false;
    sweep->add_option("--seed", sweep_seed, "seed")->each([&](const std::string&) {
        sweep_seed_set = true;
    });

    // transfer
    auto* transfer = app.add_subcommand("transfer", "finetune a source checkpoint on targets");
    std::string tr_ckpt, tr_policy = "all", tr_out;
    std::vector<std::string> tr_targets;
    int tr_budget = 20, tr_scratch_full = 0;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    transfer->add_option("--source-ckpt", tr_ckpt, "source checkpoint")->required();
    transfer->add_option("--targets", tr_targets, "target dataset directories")
        ->required()
        ->delimiter(',');
    transfer->add_option("--policy", tr_policy, "T1|T2|T3|T4|all");
    transfer->add_option("--budget", tr_budget, "finetune epochs");
    transfer->add_option("--out", tr_out, "output directory")->required();
    transfer->add_option("--scratch-full-epochs", tr_scratch_full,
                         "also train a scratch model for this many epochs");
    transfer->add_option("--config", config_path, "JSON config file");
    transfer->add_option("--seed", tr_seed, "seed")->each([&](const std::string&) {
        tr_seed_set = true;
    });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "verify analytic gradients by finite differences");
    std::string gc_arch = "hydrodeep";
    std::uint64_t gc_seed = 1;
    gc->add_option("--arch", gc_arch, "architecture to check");
    gc->add_option("--seed", gc_seed, "seed");

    // compare
    auto* compare = app.add_subcommand("compare", "train several architectures under one protocol");
    std::string cmp_data, cmp_archs = "hydrodeep,cnn,lstm,gru,bilstm,dl_ablation", cmp_out;
    compare->add_option("--data", cmp_data, "dataset directory")->required();
    compare->add_option("--archs", cmp_archs, "comma-separated architecture list");
    compare->add_option("--out", cmp_out, "output directory")->required();
    compare->add_option("--config", config_path, "JSON config file");
    int cmp_epochs = -1;
    compare->add_option("--epochs", cmp_epochs, "training epochs per arch");
    std::uint64_t cmp_seed = 0;
    bool cmp_seed_set = false;
    compare->add_option("--seed", cmp_seed, "seed")->each([&](const std::string&) {
        cmp_seed_set = true;
    });

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) load_config_file(config_path, settings);

        if (gen->parsed()) {
            if (gen_seed_set) settings.synth.seed = gen_seed;
            if (gen_grids > 0) settings.synth.grid_count = static_cast<std::size_t>(gen_grids);
            if (gen_noise >= 0.0) settings.synth.noise_std = gen_noise;
            if (!gen_target_seed_set) gen_target_seed = settings.synth.seed + 1000;
            return cmd_generate(settings, gen_out, gen_days, gen_start, gen_targets, gen_target_seed);
        }
        if (train->parsed()) {
            if (!train_arch.empty()) settings.model.arch = arch_from_name(train_arch);
            if (train_lag > 0) settings.model.lag = train_lag;
            if (train_epochs >= 0) settings.train.epochs = train_epochs;
            if (train_batch > 0) settings.train.batch_size = train_batch;
            if (train_lr >= 0.0) settings.train.adam.learning_rate = train_lr;
            if (train_patience >= 0) settings.train.patience = train_patience;
            if (train_seed_set) settings.train.seed = train_seed;
            return cmd_train(settings, train_data, train_out);
        }
        if (eval->parsed()) {
            return cmd_evaluate(settings, eval_ckpt, eval_data, eval_out, eval_split, eval_as_printed);
        }
        if (sweep->parsed()) {
            if (sweep_epochs >= 0) settings.train.epochs = sweep_epochs;
            if (sweep_seed_set) settings.train.seed = sweep_seed;
            return cmd_sweep_lag(settings, sweep_data, sweep_lags, sweep_out);
        }
        if (transfer->parsed()) {
            if (tr_seed_set) settings.train.seed = tr_seed;
            return cmd_transfer(settings, tr_ckpt, tr_targets, tr_policy, tr_budget, tr_out,
                                tr_scratch_full);
        }
        if (gc->parsed()) {
            return cmd_gradcheck(gc_arch, gc_seed);
        }
        if (compare->parsed()) {
            if (cmp_epochs >= 0) settings.train.epochs = cmp_epochs;
            if (cmp_seed_set) settings.train.seed = cmp_seed;
            return cmd_compare(settings, cmp_data, cmp_archs, cmp_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitConfig;
}
