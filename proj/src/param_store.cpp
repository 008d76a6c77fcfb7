#include "hydrodeep/param_store.hpp"

#include <cmath>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

void AdamConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("adam: learning_rate must be > 0");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ParameterError("adam: beta1 must be in (0,1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ParameterError("adam: beta2 must be in (0,1)");
    if (!(epsilon > 0.0)) throw ParameterError("adam: epsilon must be > 0");
}

Var ParamStore::create(const std::string& name, Tensor init) {
    if (entries_.count(name)) throw StateError("parameter already exists: " + name);
    init.require_finite(name.c_str());
    ParamEntry e;
    e.m = Tensor(init.shape);
    e.v = Tensor(init.shape);
    e.var = Var::parameter(std::move(init));
    auto [it, ok] = entries_.emplace(name, std::move(e));
    (void)ok;
    return it->second.var;
}

Var ParamStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw StateError("unknown parameter: " + name);
    return it->second.var;
}

ParamEntry& ParamStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [name, e] : entries_) e.var.zero_grad();
}

void ParamStore::adam_step(const AdamConfig& cfg) {
    cfg.validate();
    for (auto& [name, e] : entries_) {
        if (!e.trainable) continue;
        const Tensor& g = e.var.grad();
        Tensor& value = e.var.mutable_value();
        e.step_count += 1;
        const double t = static_cast<double>(e.step_count);
        const double bc1 = 1.0 - std::pow(cfg.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, t);
        for (std::size_t i = 0; i < value.size(); ++i) {
            e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * g[i];
            e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = e.m[i] / bc1;
            const double v_hat = e.v[i] / bc2;
            value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.var.value().size();
    return n;
}

Tensor glorot_uniform(const std::vector<std::size_t>& shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(-limit, limit);
    return t;
}

}  // namespace hydrodeep
