#include "hydrodeep/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

using nlohmann::json;

const char* arch_name(Arch arch) {
    switch (arch) {
        case Arch::hydrodeep: return "hydrodeep";
        case Arch::cnn: return "cnn";
        case Arch::lstm: return "lstm";
        case Arch::gru: return "gru";
        case Arch::bilstm: return "bilstm";
        case Arch::dl_ablation: return "dl_ablation";
    }
    return "hydrodeep";
}

Arch arch_from_name(const std::string& name) {
    for (Arch a : {Arch::hydrodeep, Arch::cnn, Arch::lstm, Arch::gru, Arch::bilstm, Arch::dl_ablation}) {
        if (name == arch_name(a)) return a;
    }
    throw ParameterError("unknown arch: " + name);
}

const char* group_name(LayerGroup g) {
    switch (g) {
        case LayerGroup::input_adapter: return "input_adapter";
        case LayerGroup::spatial: return "spatial";
        case LayerGroup::temporal: return "temporal";
        case LayerGroup::head: return "head";
    }
    return "head";
}

LayerGroup group_from_name(const std::string& name) {
    for (LayerGroup g :
         {LayerGroup::input_adapter, LayerGroup::spatial, LayerGroup::temporal, LayerGroup::head}) {
        if (name == group_name(g)) return g;
    }
    throw ParameterError("unknown layer group: " + name);
}

LayerGroup group_of_param(const std::string& param_name) {
    const auto slash = param_name.find('/');
    if (slash == std::string::npos) throw ParameterError("parameter name has no group prefix: " + param_name);
    return group_from_name(param_name.substr(0, slash));
}

bool ModelConfig::effective_use_runoff() const {
    return use_runoff_inputs && arch != Arch::dl_ablation;
}

std::size_t ModelConfig::input1_width() const {
    const std::size_t L = static_cast<std::size_t>(grid_count);
    return effective_use_runoff() ? 2 * L + 1 : L + 1;
}

std::size_t ModelConfig::input2_width() const {
    const std::size_t L = static_cast<std::size_t>(grid_count);
    return effective_use_runoff() ? 2 * L : L;
}

namespace {

bool arch_has_conv(Arch a) { return a == Arch::hydrodeep || a == Arch::dl_ablation || a == Arch::cnn; }
bool arch_has_lstm_stack(Arch a) {
    return a == Arch::hydrodeep || a == Arch::dl_ablation || a == Arch::lstm;
}

}  // namespace

void ModelConfig::validate() const {
    if (grid_count < 1) throw BuildError("input stage: grid_count must be >= 1");
    if (lag < 1) throw BuildError("input stage: lag must be >= 1");
    if (adapter_units < 1) throw BuildError("input stage: adapter_units must be >= 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw BuildError("dropout stage: rate must be in [0,1)");
    }
    if (dense_units < 1) throw BuildError("head stage: dense_units must be >= 1");
    if (arch_has_conv(arch)) {
        if (conv_layers < 1 || conv_filters < 1 || kernel_width < 1) {
            throw BuildError("conv stage: layers, filters, and kernel width must be >= 1");
        }
        const int conv_out = lag - conv_layers * (kernel_width - 1);
        if (conv_out < 1) {
            throw BuildError("conv stage: lag " + std::to_string(lag) + " too short for " +
                             std::to_string(conv_layers) + " layers of width " +
                             std::to_string(kernel_width));
        }
        if (pool_size < 1) throw BuildError("maxpool stage: pool size must be >= 1");
        if (conv_out / pool_size < 1) {
            throw BuildError("maxpool stage: pooled length is zero (conv output " +
                             std::to_string(conv_out) + ", pool " + std::to_string(pool_size) + ")");
        }
    }
    if (arch_has_lstm_stack(arch) || arch == Arch::gru) {
        if (lstm_layers < 1 || lstm_units < 1) {
            throw BuildError("recurrent stage: layers and units must be >= 1");
        }
    }
    if (arch == Arch::bilstm && lstm_units < 1) {
        throw BuildError("recurrent stage: units must be >= 1");
    }
}

void TrainConfig::validate() const {
    if (epochs < 0) throw ParameterError("train: epochs must be >= 0");
    if (batch_size < 1) throw ParameterError("train: batch_size must be >= 1");
    if (patience < 0) throw ParameterError("train: patience must be >= 0");
}

Model::Model(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), rng_(Rng(seed).fork(1)) {
    cfg_.validate();
    build();
}

void Model::build() {
    Rng init = Rng(seed_).fork(0);
    const std::size_t w1 = cfg_.input1_width();
    const std::size_t w2 = cfg_.input2_width();
    const std::size_t A = static_cast<std::size_t>(cfg_.adapter_units);
    const std::size_t U = static_cast<std::size_t>(cfg_.lstm_units);
    const std::size_t F = static_cast<std::size_t>(cfg_.conv_filters);
    const std::size_t D = static_cast<std::size_t>(cfg_.dense_units);
    const std::size_t kw = static_cast<std::size_t>(cfg_.kernel_width);

    // The two shape-dependent projections; everything after them is
    // independent of the grid count.
    store_.create("input_adapter/in1.w", glorot_uniform({A, w1}, w1, A, init));
    store_.create("input_adapter/in1.b", Tensor({A}));
    store_.create("input_adapter/in2.w", glorot_uniform({A, w2}, w2, A, init));
    store_.create("input_adapter/in2.b", Tensor({A}));

    if (arch_has_conv(cfg_.arch)) {
        std::size_t channels = A;
        for (int j = 0; j < cfg_.conv_layers; ++j) {
            const std::string prefix = "spatial/conv" + std::to_string(j);
            store_.create(prefix + ".kernels",
                          glorot_uniform({F, channels, kw}, channels * kw, F * kw, init));
            store_.create(prefix + ".bias", Tensor({F}));
            channels = F;
        }
    }

    auto make_recurrent = [&](const std::string& prefix, std::size_t n_in,
                              std::initializer_list<const char*> gates) {
        for (const char* gate : gates) {
            store_.create(prefix + ".w_" + gate, glorot_uniform({U, U + n_in}, U + n_in, U, init));
            store_.create(prefix + ".b_" + gate, Tensor({U}));
        }
    };

    if (arch_has_lstm_stack(cfg_.arch)) {
        std::size_t n_in = cfg_.arch == Arch::lstm ? A : F;
        for (int j = 0; j < cfg_.lstm_layers; ++j) {
            make_recurrent("temporal/lstm" + std::to_string(j), n_in, {"f", "i", "o", "c"});
            n_in = U;
        }
    } else if (cfg_.arch == Arch::gru) {
        std::size_t n_in = A;
        for (int j = 0; j < cfg_.lstm_layers; ++j) {
            make_recurrent("temporal/gru" + std::to_string(j), n_in, {"z", "r", "h"});
            n_in = U;
        }
    } else if (cfg_.arch == Arch::bilstm) {
        make_recurrent("temporal/bilstm_fwd", A, {"f", "i", "o", "c"});
        make_recurrent("temporal/bilstm_bwd", A, {"f", "i", "o", "c"});
    }

    std::size_t head_in = A;  // the concatenated day-t projection
    switch (cfg_.arch) {
        case Arch::hydrodeep:
        case Arch::dl_ablation:
        case Arch::lstm:
        case Arch::gru: head_in += U; break;
        case Arch::bilstm: head_in += 2 * U; break;
        case Arch::cnn: {
            const std::size_t conv_out =
                static_cast<std::size_t>(cfg_.lag - cfg_.conv_layers * (cfg_.kernel_width - 1));
            head_in += (conv_out / static_cast<std::size_t>(cfg_.pool_size)) * F;
            break;
        }
    }
    store_.create("head/dense.w", glorot_uniform({D, head_in}, head_in, D, init));
    store_.create("head/dense.b", Tensor({D}));
    store_.create("head/out.w", glorot_uniform({1, D}, D, 1, init));
    store_.create("head/out.b", Tensor({1}));
}

LstmParams Model::lstm_params(const std::string& prefix) const {
    LstmParams p;
    p.w_f = store_.get(prefix + ".w_f");
    p.w_i = store_.get(prefix + ".w_i");
    p.w_o = store_.get(prefix + ".w_o");
    p.w_c = store_.get(prefix + ".w_c");
    p.b_f = store_.get(prefix + ".b_f");
    p.b_i = store_.get(prefix + ".b_i");
    p.b_o = store_.get(prefix + ".b_o");
    p.b_c = store_.get(prefix + ".b_c");
    return p;
}

GruParams Model::gru_params(const std::string& prefix) const {
    GruParams p;
    p.w_z = store_.get(prefix + ".w_z");
    p.w_r = store_.get(prefix + ".w_r");
    p.w_h = store_.get(prefix + ".w_h");
    p.b_z = store_.get(prefix + ".b_z");
    p.b_r = store_.get(prefix + ".b_r");
    p.b_h = store_.get(prefix + ".b_h");
    return p;
}

std::vector<Var> Model::adapted_rows(const Tensor& input1) {
    if (input1.rank() != 2 || input1.shape[0] != static_cast<std::size_t>(cfg_.lag) ||
        input1.shape[1] != cfg_.input1_width()) {
        throw DimensionError("forward: input1 must be (" + std::to_string(cfg_.lag) + "," +
                             std::to_string(cfg_.input1_width()) + "), got " + input1.shape_string());
    }
    input1.require_finite("input1");
    const Var in1 = Var::constant(input1);
    const Var w = store_.get("input_adapter/in1.w");
    const Var b = store_.get("input_adapter/in1.b");
    std::vector<Var> rows;
    rows.reserve(input1.shape[0]);
    for (std::size_t t = 0; t < input1.shape[0]; ++t) {
        rows.push_back(add(matvec(w, row(in1, t)), b));
    }
    return rows;
}

Var Model::adapted_input2(const Tensor& input2) {
    if (input2.rank() != 1 || input2.shape[0] != cfg_.input2_width()) {
        throw DimensionError("forward: input2 must be (" + std::to_string(cfg_.input2_width()) +
                             "), got " + input2.shape_string());
    }
    input2.require_finite("input2");
    return add(matvec(store_.get("input_adapter/in2.w"), Var::constant(input2)),
               store_.get("input_adapter/in2.b"));
}

Var Model::forward(const Tensor& input1, const Tensor& input2, Mode mode) {
    std::vector<Var> rows = adapted_rows(input1);

    Var rep;
    if (arch_has_conv(cfg_.arch)) {
        Var x = stack_rows(rows);
        for (int j = 0; j < cfg_.conv_layers; ++j) {
            const std::string prefix = "spatial/conv" + std::to_string(j);
            x = conv1d(x, store_.get(prefix + ".kernels"), store_.get(prefix + ".bias"),
                       Activation::tanh);
        }
        x = maxpool1d(x, cfg_.pool_size);
        if (cfg_.arch == Arch::cnn) {
            rep = flatten(x);
        } else {
            std::vector<Var> seq = split_rows(x);
            for (int j = 0; j + 1 < cfg_.lstm_layers; ++j) {
                seq = lstm_layer_seq(seq, lstm_params("temporal/lstm" + std::to_string(j)));
            }
            rep = lstm_layer_last(seq, lstm_params("temporal/lstm" + std::to_string(cfg_.lstm_layers - 1)));
        }
    } else if (cfg_.arch == Arch::lstm) {
        std::vector<Var> seq = rows;
        for (int j = 0; j + 1 < cfg_.lstm_layers; ++j) {
            seq = lstm_layer_seq(seq, lstm_params("temporal/lstm" + std::to_string(j)));
        }
        rep = lstm_layer_last(seq, lstm_params("temporal/lstm" + std::to_string(cfg_.lstm_layers - 1)));
    } else if (cfg_.arch == Arch::gru) {
        std::vector<Var> seq = rows;
        for (int j = 0; j + 1 < cfg_.lstm_layers; ++j) {
            seq = gru_layer_seq(seq, gru_params("temporal/gru" + std::to_string(j)));
        }
        rep = gru_layer_last(seq, gru_params("temporal/gru" + std::to_string(cfg_.lstm_layers - 1)));
    } else {  // bilstm
        rep = bidirectional_lstm(rows, lstm_params("temporal/bilstm_fwd"),
                                 lstm_params("temporal/bilstm_bwd"));
    }

    rep = dropout(rep, cfg_.dropout_rate, mode, rng_);
    const Var z = concat({rep, adapted_input2(input2)});
    const Var hidden = dense(z, store_.get("head/dense.w"), store_.get("head/dense.b"), Activation::relu);
    last_forward_ = dense(hidden, store_.get("head/out.w"), store_.get("head/out.b"), Activation::identity);
    return last_forward_;
}

double Model::predict(const Tensor& input1, const Tensor& input2) {
    return forward(input1, input2, Mode::eval).value()[0];
}

void Model::backward(double loss_seed) {
    if (!last_forward_.defined()) throw StateError("backward before forward");
    last_forward_.backward(Tensor::scalar(loss_seed));
}

double dataset_loss(Model& model, const WindowedDataset& ds) {
    double acc = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double d = model.predict(ds.input1[i], ds.input2[i]) - ds.target[i];
        acc += d * d;
    }
    return ds.size() ? acc / static_cast<double>(ds.size()) : 0.0;
}

namespace {

struct EntrySnapshot {
    Tensor value, m, v;
    std::int64_t step_count;
};

}  // namespace

TrainHistory Model::train(const WindowedDataset& train_set, const WindowedDataset& val_set,
                          const TrainConfig& tc) {
    tc.validate();
    if (train_set.size() == 0) throw ParameterError("train: empty training set");
    // lr == 0 means "no updates": the history is still produced.
    const bool update = tc.adam.learning_rate > 0.0;
    if (update) tc.adam.validate();

    Rng shuffle_rng(tc.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory history;
    history.reserve(static_cast<std::size_t>(tc.epochs));
    double best_val = std::numeric_limits<double>::infinity();
    int bad_epochs = 0;
    std::map<std::string, EntrySnapshot> best;

    const std::size_t batch = static_cast<std::size_t>(tc.batch_size);
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t stop = std::min(order.size(), start + batch);
            store_.zero_grad();
            Var acc;
            for (std::size_t pos = start; pos < stop; ++pos) {
                const std::size_t i = order[pos];
                const Var pred = forward(train_set.input1[i], train_set.input2[i], Mode::train);
                const Var loss = mse_loss(pred, Tensor::scalar(train_set.target[i]));
                acc = acc.defined() ? add(acc, loss) : loss;
            }
            loss_sum += acc.value()[0];
            acc = scale(acc, 1.0 / static_cast<double>(stop - start));
            acc.backward();
            if (update) store_.adam_step(tc.adam);
        }
        const double train_loss = loss_sum / static_cast<double>(train_set.size());
        const double val_loss = val_set.size() ? dataset_loss(*this, val_set) : train_loss;
        history.push_back({train_loss, val_loss});

        if (tc.patience > 0) {
            if (val_loss < best_val) {
                best_val = val_loss;
                bad_epochs = 0;
                best.clear();
                for (auto& [name, e] : store_) {
                    best[name] = {e.var.value(), e.m, e.v, e.step_count};
                }
            } else if (++bad_epochs > tc.patience) {
                break;
            }
        }
    }

    if (tc.patience > 0 && !best.empty()) {
        for (auto& [name, e] : store_) {
            auto it = best.find(name);
            e.var.mutable_value() = it->second.value;
            e.m = it->second.m;
            e.v = it->second.v;
            e.step_count = it->second.step_count;
        }
    }
    return history;
}

std::vector<double> Model::predict_series(const WindowedDataset& ds, const Scaler& scaler) {
    std::vector<double> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out[i] = scaler.inverse_transform_discharge(predict(ds.input1[i], ds.input2[i]));
    }
    return out;
}

MetricReport Model::evaluate(const WindowedDataset& ds, const Scaler& scaler) {
    return report(ds.target_physical, predict_series(ds, scaler));
}

std::vector<std::string> Model::group_params(LayerGroup g) const {
    std::vector<std::string> names;
    for (const auto& [name, e] : store_) {
        if (group_of_param(name) == g) names.push_back(name);
    }
    return names;
}

// ---- checkpoint --------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'D', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    put_u64(out, bits);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos++])) << (8 * i);
    return v;
}

double get_f64(const std::string& in, std::size_t& pos) {
    const std::uint64_t bits = get_u64(in, pos);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

json config_to_json(const ModelConfig& c) {
    return json{{"arch", arch_name(c.arch)},
                {"lag", c.lag},
                {"grid_count", c.grid_count},
                {"conv_layers", c.conv_layers},
                {"conv_filters", c.conv_filters},
                {"kernel_width", c.kernel_width},
                {"pool_size", c.pool_size},
                {"lstm_layers", c.lstm_layers},
                {"lstm_units", c.lstm_units},
                {"dropout_rate", c.dropout_rate},
                {"dense_units", c.dense_units},
                {"adapter_units", c.adapter_units},
                {"use_runoff_inputs", c.use_runoff_inputs}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.arch = arch_from_name(j.at("arch").get<std::string>());
    c.lag = j.at("lag").get<int>();
    c.grid_count = j.at("grid_count").get<int>();
    c.conv_layers = j.at("conv_layers").get<int>();
    c.conv_filters = j.at("conv_filters").get<int>();
    c.kernel_width = j.at("kernel_width").get<int>();
    c.pool_size = j.at("pool_size").get<int>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.lstm_units = j.at("lstm_units").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.dense_units = j.at("dense_units").get<int>();
    c.adapter_units = j.at("adapter_units").get<int>();
    c.use_runoff_inputs = j.at("use_runoff_inputs").get<bool>();
    return c;
}

}  // namespace

void Model::save_checkpoint(const std::string& path) const {
    json header;
    header["config"] = config_to_json(cfg_);
    header["seed"] = seed_;
    header["rng"] = rng_.serialize();
    if (scaler_) {
        header["scaler"] = json{{"min", scaler_->mins()}, {"max", scaler_->maxs()}};
    } else {
        header["scaler"] = nullptr;
    }
    json params = json::array();
    json groups = json::object();
    for (const auto& [name, e] : store_) {
        params.push_back(json{{"name", name},
                              {"shape", e.var.value().shape},
                              {"trainable", e.trainable},
                              {"step_count", e.step_count}});
        groups[name] = group_name(group_of_param(name));
    }
    header["params"] = std::move(params);
    header["groups"] = std::move(groups);

    std::string buf;
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    const std::string header_text = header.dump();
    put_u64(buf, header_text.size());
    buf += header_text;
    for (const auto& [name, e] : store_) {
        for (double v : e.var.value().data) put_f64(buf, v);
        for (double v : e.m.data) put_f64(buf, v);
        for (double v : e.v.data) put_f64(buf, v);
    }
    put_u64(buf, fnv1a64(buf));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write on checkpoint: " + path);
}

Model Model::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();
    if (buf.size() < 24 || std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw IoError("not a checkpoint file: " + path);
    }
    std::size_t pos = 4;
    const std::uint32_t version = get_u32(buf, pos);
    if (version != kVersion) {
        throw IoError("checkpoint version mismatch: have " + std::to_string(version) + ", expected " +
                      std::to_string(kVersion));
    }
    const std::string body = buf.substr(0, buf.size() - 8);
    std::size_t tail = buf.size() - 8;
    if (fnv1a64(body) != get_u64(buf, tail)) {
        throw IoError("checkpoint digest mismatch: " + path);
    }

    const std::uint64_t header_len = get_u64(buf, pos);
    if (pos + header_len > body.size()) throw IoError("checkpoint header truncated");
    json header;
    try {
        header = json::parse(buf.substr(pos, header_len));
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint header unreadable: ") + e.what());
    }
    pos += header_len;

    Model model(config_from_json(header.at("config")), header.at("seed").get<std::uint64_t>());
    model.rng_ = Rng::deserialize(header.at("rng").get<std::string>());
    if (!header.at("scaler").is_null()) {
        model.scaler_ = Scaler(header["scaler"].at("min").get<std::vector<double>>(),
                               header["scaler"].at("max").get<std::vector<double>>());
    }

    std::size_t seen = 0;
    for (const auto& p : header.at("params")) {
        const std::string name = p.at("name").get<std::string>();
        if (!model.store_.contains(name)) throw IoError("checkpoint parameter unknown to arch: " + name);
        ParamEntry& e = model.store_.entry(name);
        const auto shape = p.at("shape").get<std::vector<std::size_t>>();
        if (shape != e.var.value().shape) throw IoError("checkpoint shape mismatch for " + name);
        e.trainable = p.at("trainable").get<bool>();
        e.step_count = p.at("step_count").get<std::int64_t>();
        const std::size_t n = e.var.value().size();
        if (pos + 3 * n * 8 > body.size()) throw IoError("checkpoint payload truncated");
        for (std::size_t i = 0; i < n; ++i) e.var.mutable_value()[i] = get_f64(buf, pos);
        for (std::size_t i = 0; i < n; ++i) e.m[i] = get_f64(buf, pos);
        for (std::size_t i = 0; i < n; ++i) e.v[i] = get_f64(buf, pos);
        ++seen;
    }
    if (seen != model.store_.size()) throw IoError("checkpoint parameter list incomplete");
    if (pos != body.size()) throw IoError("checkpoint has trailing bytes");
    return model;
}

}  // namespace hydrodeep
