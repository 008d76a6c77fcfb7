#pragma once

#include <vector>

#include "hydrodeep/ops.hpp"
#include "hydrodeep/param_store.hpp"
#include "hydrodeep/rng.hpp"
#include "hydrodeep/tensor.hpp"

namespace hydrodeep::testutil {

inline Tensor random_tensor(const std::vector<std::size_t>& shape, Rng& rng, double lo = -0.5,
                            double hi = 0.5) {
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

inline Var random_param(const std::vector<std::size_t>& shape, Rng& rng) {
    return Var::parameter(random_tensor(shape, rng));
}

/// LSTM parameters as free leaf vars (no store).
inline LstmParams random_lstm(std::size_t n_h, std::size_t n_in, Rng& rng) {
    LstmParams p;
    p.w_f = random_param({n_h, n_h + n_in}, rng);
    p.w_i = random_param({n_h, n_h + n_in}, rng);
    p.w_o = random_param({n_h, n_h + n_in}, rng);
    p.w_c = random_param({n_h, n_h + n_in}, rng);
    p.b_f = random_param({n_h}, rng);
    p.b_i = random_param({n_h}, rng);
    p.b_o = random_param({n_h}, rng);
    p.b_c = random_param({n_h}, rng);
    return p;
}

inline LstmParams zero_lstm(std::size_t n_h, std::size_t n_in) {
    LstmParams p;
    p.w_f = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.w_i = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.w_o = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.w_c = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.b_f = Var::parameter(Tensor({n_h}));
    p.b_i = Var::parameter(Tensor({n_h}));
    p.b_o = Var::parameter(Tensor({n_h}));
    p.b_c = Var::parameter(Tensor({n_h}));
    return p;
}

inline GruParams random_gru(std::size_t n_h, std::size_t n_in, Rng& rng) {
    GruParams p;
    p.w_z = random_param({n_h, n_h + n_in}, rng);
    p.w_r = random_param({n_h, n_h + n_in}, rng);
    p.w_h = random_param({n_h, n_h + n_in}, rng);
    p.b_z = random_param({n_h}, rng);
    p.b_r = random_param({n_h}, rng);
    p.b_h = random_param({n_h}, rng);
    return p;
}

inline GruParams zero_gru(std::size_t n_h, std::size_t n_in) {
    GruParams p;
    p.w_z = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.w_r = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.w_h = Var::parameter(Tensor({n_h, n_h + n_in}));
    p.b_z = Var::parameter(Tensor({n_h}));
    p.b_r = Var::parameter(Tensor({n_h}));
    p.b_h = Var::parameter(Tensor({n_h}));
    return p;
}

inline std::vector<Var> const_seq(const std::vector<std::vector<double>>& rows) {
    std::vector<Var> seq;
    for (const auto& r : rows) seq.push_back(Var::constant(Tensor::vector1d(r)));
    return seq;
}

}  // namespace hydrodeep::testutil
