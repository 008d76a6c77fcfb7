#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hydrodeep/autodiff.hpp"
#include "hydrodeep/rng.hpp"
#include "hydrodeep/tensor.hpp"

namespace hydrodeep {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// One named parameter: the leaf var (value + gradient) plus Adam state and
/// the freeze flag. m and v stay all-zero until the first optimizer step.
struct ParamEntry {
    Var var;
    Tensor m;
    Tensor v;
    std::int64_t step_count = 0;
    bool trainable = true;
};

/// Name-ordered parameter map. Iteration order (and therefore every update
/// and serialization order) is the lexicographic name order.
class ParamStore {
  public:
    /// Registers a new leaf parameter; throws if the name already exists.
    Var create(const std::string& name, Tensor init);

    Var get(const std::string& name) const;
    bool contains(const std::string& name) const { return entries_.count(name) > 0; }

    ParamEntry& entry(const std::string& name);
    const ParamEntry& entry(const std::string& name) const;

    void zero_grad();

    /// Adam update over trainable entries; frozen entries are left untouched
    /// (value, moments, and step count all bit-identical).
    void adam_step(const AdamConfig& cfg);

    std::size_t parameter_count() const;

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    std::size_t size() const { return entries_.size(); }

  private:
    std::map<std::string, ParamEntry> entries_;
};

/// Symmetric uniform init in +-sqrt(6/(fan_in+fan_out)).
Tensor glorot_uniform(const std::vector<std::size_t>& shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);

}  // namespace hydrodeep
