#pragma once

#include <functional>
#include <string>

#include "hydrodeep/param_store.hpp"

namespace hydrodeep {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares the analytic gradient of a scalar loss against central finite
/// differences for every parameter entry. `make_loss` must rebuild the same
/// deterministic forward pass on each call (reseed any rng it uses).
/// Relative error per coordinate is |a-n| / max(|a|,|n|,1e-8).
GradCheckReport grad_check(ParamStore& store, const std::function<Var()>& make_loss, double eps);

}  // namespace hydrodeep
