#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#ifndef HYDRODEEP_CLI_PATH
#define HYDRODEEP_CLI_PATH "hydrodeep"
#endif

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const fs::path& workdir) {
    const fs::path log = workdir / "cli_output.log";
    const std::string cmd =
        std::string(HYDRODEEP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(status);
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kTinyTrainArgs =
    "--arch hydrodeep --lag 5 --epochs 2 --batch-size 16 --seed 7 "
    "--config ";

std::string tiny_config_json() {
    return R"({
  "model": {"conv_layers": 1, "conv_filters": 4, "kernel_width": 3, "pool_size": 1,
            "lstm_layers": 2, "lstm_units": 4, "dense_units": 5, "adapter_units": 4,
            "dropout_rate": 0.0},
  "train": {"learning_rate": 0.002}
})";
}

}  // namespace

TEST_CASE("cli end-to-end: generate, train, evaluate, sweep, gradcheck") {
    TempDir tmp("hydrodeep_cli_e2e");
    const fs::path data = tmp.path / "data";
    const fs::path cfg_path = tmp.path / "config.json";
    std::ofstream(cfg_path) << tiny_config_json();

    // generate
    auto gen = run_cli("generate --out " + data.string() + " --days 160 --grids 3 --seed 5", tmp.path);
    CHECK(gen.exit_code == 0);
    CHECK(fs::exists(data / "series.csv"));
    CHECK(fs::exists(data / "grid.csv"));
    CHECK(fs::exists(data / "effective_config.json"));
    CHECK_FALSE(fs::exists(data / "FAILED"));

    // train
    const fs::path run1 = tmp.path / "run1";
    auto train1 = run_cli("train --data " + data.string() + " --out " + run1.string() + " " +
                              kTinyTrainArgs + cfg_path.string(),
                          tmp.path);
    CHECK(train1.exit_code == 0);
    CHECK(fs::exists(run1 / "model.ckpt"));
    CHECK(fs::exists(run1 / "history.csv"));
    CHECK(fs::exists(run1 / "predictions.csv"));
    CHECK(fs::exists(run1 / "metrics.json"));
    CHECK(train1.output.find("\"nse\"") != std::string::npos);

    // identical rerun is byte-identical
    const fs::path run2 = tmp.path / "run2";
    auto train2 = run_cli("train --data " + data.string() + " --out " + run2.string() + " " +
                              kTinyTrainArgs + cfg_path.string(),
                          tmp.path);
    CHECK(train2.exit_code == 0);
    CHECK(slurp(run1 / "history.csv") == slurp(run2 / "history.csv"));
    CHECK(slurp(run1 / "predictions.csv") == slurp(run2 / "predictions.csv"));
    CHECK(slurp(run1 / "model.ckpt") == slurp(run2 / "model.ckpt"));

    // evaluate with the trained checkpoint
    const fs::path eval_out = tmp.path / "eval";
    auto eval = run_cli("evaluate --ckpt " + (run1 / "model.ckpt").string() + " --data " +
                            data.string() + " --out " + eval_out.string(),
                        tmp.path);
    CHECK(eval.exit_code == 0);
    CHECK(fs::exists(eval_out / "predictions.csv"));
    const std::string preds = slurp(eval_out / "predictions.csv");
    CHECK(preds.rfind("date,observed,predicted", 0) == 0);

    // the --as-printed pbias variant is non-negative
    auto eval2 = run_cli("evaluate --ckpt " + (run1 / "model.ckpt").string() + " --data " +
                             data.string() + " --as-printed",
                         tmp.path);
    CHECK(eval2.exit_code == 0);

    // sweep two lags
    const fs::path sweep_out = tmp.path / "sweep";
    auto sweep = run_cli("sweep-lag --data " + data.string() + " --lags 3..4 --epochs 1 --out " +
                             sweep_out.string() + " --config " + cfg_path.string(),
                         tmp.path);
    CHECK(sweep.exit_code == 0);
    const std::string table = slurp(sweep_out / "lag_sweep.csv");
    CHECK(table.find("lag,nse,") != std::string::npos);
    int rows = 0;
    for (char c : table) rows += c == '\n';
    CHECK(rows == 3);  // header + one row per lag
}

TEST_CASE("cli gradcheck exits zero on a healthy build") {
    TempDir tmp("hydrodeep_cli_gradcheck");
    auto r = run_cli("gradcheck --arch lstm --seed 3", tmp.path);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("max relative gradient error") != std::string::npos);
}

TEST_CASE("cli transfer emits the comparison table") {
    TempDir tmp("hydrodeep_cli_transfer");
    const fs::path data = tmp.path / "data";
    const fs::path cfg_path = tmp.path / "config.json";
    std::ofstream(cfg_path) << tiny_config_json();

    auto gen = run_cli("generate --out " + data.string() +
                           " --days 150 --grids 3 --seed 6 --targets spatial",
                       tmp.path);
    REQUIRE(gen.exit_code == 0);
    REQUIRE(fs::exists(data / "targets" / "spatial" / "series.csv"));

    const fs::path run = tmp.path / "src_run";
    auto train = run_cli("train --data " + data.string() + " --out " + run.string() + " " +
                             kTinyTrainArgs + cfg_path.string(),
                         tmp.path);
    REQUIRE(train.exit_code == 0);

    const fs::path tout = tmp.path / "transfer";
    auto tr = run_cli("transfer --source-ckpt " + (run / "model.ckpt").string() + " --targets " +
                          (data / "targets" / "spatial").string() +
                          " --policy T1 --budget 1 --out " + tout.string() + " --config " +
                          cfg_path.string(),
                      tmp.path);
    CHECK(tr.exit_code == 0);
    const std::string csv = slurp(tout / "transfer_comparison.csv");
    CHECK(csv.rfind("target,policy,nse,pbias_pct,rsr,grids,budget_epochs,seed", 0) == 0);
    CHECK(csv.find("scratch") != std::string::npos);
    CHECK(csv.find("T1") != std::string::npos);
}

TEST_CASE("cli error paths use the documented exit codes") {
    TempDir tmp("hydrodeep_cli_errors");

    // usage error
    auto usage = run_cli("train", tmp.path);
    CHECK(usage.exit_code != 0);

    // missing data -> 2
    const fs::path out = tmp.path / "out";
    auto missing = run_cli("train --data /nonexistent_dir --out " + out.string(), tmp.path);
    CHECK(missing.exit_code == 2);
    CHECK(fs::exists(out / "FAILED"));  // sentinel marks the partial run

    // unknown config key -> 1
    const fs::path bad_cfg = tmp.path / "bad.json";
    std::ofstream(bad_cfg) << R"({"model": {"no_such_knob": 1}})";
    const fs::path data = tmp.path / "data";
    auto gen = run_cli("generate --out " + data.string() + " --days 120 --grids 2 --seed 1", tmp.path);
    REQUIRE(gen.exit_code == 0);
    auto bad = run_cli("train --data " + data.string() + " --out " + (tmp.path / "out2").string() +
                           " --config " + bad_cfg.string(),
                       tmp.path);
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("no_such_knob") != std::string::npos);

    // corrupt checkpoint -> 2
    const fs::path fake = tmp.path / "fake.ckpt";
    std::ofstream(fake) << "not a checkpoint";
    auto ev = run_cli("evaluate --ckpt " + fake.string() + " --data " + data.string(), tmp.path);
    CHECK(ev.exit_code == 2);
}
