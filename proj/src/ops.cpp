#include "hydrodeep/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

const char* activation_name(Activation act) {
    switch (act) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw ParameterError("unknown activation: " + name);
}

Var apply_activation(const Var& x, Activation act) {
    switch (act) {
        case Activation::identity: return x;
        case Activation::tanh: return tanh(x);
        case Activation::relu: return relu(x);
    }
    return x;
}

namespace {

// Derivative factor of an activation given its output y (valid for the three
// activations used here; relu's kink at exactly 0 maps to slope 0).
inline double act_deriv_from_output(Activation act, double y) {
    switch (act) {
        case Activation::identity: return 1.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

}  // namespace

Var conv1d(const Var& input, const Var& kernels, const Var& bias, Activation act) {
    const Tensor& in = input.value();
    const Tensor& ker = kernels.value();
    const Tensor& b = bias.value();
    if (in.rank() != 2 || ker.rank() != 3 || b.rank() != 1) {
        throw DimensionError("conv1d: expected input [TxC], kernels [KxCxW], bias [K]");
    }
    const std::size_t T = in.shape[0];
    const std::size_t C = in.shape[1];
    const std::size_t K = ker.shape[0];
    const std::size_t W = ker.shape[2];
    if (ker.shape[1] != C) {
        throw DimensionError("conv1d: kernel channels " + std::to_string(ker.shape[1]) +
                             " do not match input channels " + std::to_string(C));
    }
    if (b.shape[0] != K) throw DimensionError("conv1d: bias length does not match kernel count");
    if (W < 1) throw ParameterError("conv1d: kernel width must be >= 1");
    if (T < W) {
        throw WindowError("conv1d: input length " + std::to_string(T) + " shorter than kernel width " +
                          std::to_string(W));
    }

    const std::size_t T_out = T - W + 1;
    Tensor out({T_out, K});
    for (std::size_t t = 0; t < T_out; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
            double acc = b[k];
            const double* kk = ker.data.data() + k * C * W;
            for (std::size_t c = 0; c < C; ++c) {
                const double* kc = kk + c * W;
                for (std::size_t w = 0; w < W; ++w) acc += in.at(t + w, c) * kc[w];
            }
            out.at(t, k) = acc;
        }
    }
    std::vector<double> y(out.size());
    if (act == Activation::tanh) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    } else if (act == Activation::relu) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    }
    std::copy(out.data.begin(), out.data.end(), y.begin());

    auto pin = input.node();
    auto pker = kernels.node();
    auto pb = bias.node();
    return make_op(std::move(out), {pin, pker, pb},
                   [pin, pker, pb, act, y = std::move(y), T_out, C, K, W](const Node& n) {
                       // Gradient w.r.t. the pre-activation.
                       std::vector<double> gpre(n.grad.size());
                       for (std::size_t i = 0; i < gpre.size(); ++i) {
                           gpre[i] = n.grad[i] * act_deriv_from_output(act, y[i]);
                       }
                       for (std::size_t t = 0; t < T_out; ++t) {
                           for (std::size_t k = 0; k < K; ++k) {
                               const double g = gpre[t * K + k];
                               if (g == 0.0) continue;
                               if (pb->requires_grad) pb->grad[k] += g;
                               for (std::size_t c = 0; c < C; ++c) {
                                   for (std::size_t w = 0; w < W; ++w) {
                                       const std::size_t kidx = (k * C + c) * W + w;
                                       const std::size_t iidx = (t + w) * C + c;
                                       if (pker->requires_grad) {
                                           pker->grad[kidx] += g * pin->value[iidx];
                                       }
                                       if (pin->requires_grad) {
                                           pin->grad[iidx] += g * pker->value[kidx];
                                       }
                                   }
                               }
                           }
                       }
                   });
}

Var maxpool1d(const Var& input, int pool) {
    if (pool <= 0) throw ParameterError("maxpool1d: pool size must be positive");
    const Tensor& in = input.value();
    if (in.rank() != 2) throw DimensionError("maxpool1d expects [T x K] input");
    const std::size_t T = in.shape[0];
    const std::size_t K = in.shape[1];
    const std::size_t P = static_cast<std::size_t>(pool);
    const std::size_t T_out = T / P;
    if (T_out == 0) {
        throw WindowError("maxpool1d: input length " + std::to_string(T) + " shorter than pool " +
                          std::to_string(P));
    }
    Tensor out({T_out, K});
    std::vector<std::size_t> argmax(T_out * K);
    for (std::size_t t = 0; t < T_out; ++t) {
        for (std::size_t k = 0; k < K; ++k) {
            std::size_t best = t * P;
            double best_v = in.at(best, k);
            for (std::size_t w = 1; w < P; ++w) {
                const double v = in.at(t * P + w, k);
                if (v > best_v) {
                    best_v = v;
                    best = t * P + w;
                }
            }
            out.at(t, k) = best_v;
            argmax[t * K + k] = best * K + k;
        }
    }
    auto pin = input.node();
    return make_op(std::move(out), {pin}, [pin, argmax = std::move(argmax)](const Node& n) {
        if (!pin->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) pin->grad[argmax[i]] += n.grad[i];
    });
}

Var dense(const Var& x, const Var& w, const Var& b, Activation act) {
    return apply_activation(add(matvec(w, x), b), act);
}

Var dropout(const Var& x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout rate must be in [0,1)");
    if (mode == Mode::eval || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    const double inv_keep = 1.0 / keep;
    std::vector<double> mask(x.value().size());
    for (double& m : mask) m = rng.uniform01() < rate ? 0.0 : inv_keep;
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
    auto px = x.node();
    return make_op(std::move(out), {px}, [px, mask = std::move(mask)](const Node& n) {
        if (!px->requires_grad) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) px->grad[i] += n.grad[i] * mask[i];
    });
}

Var mse_loss(const Var& pred, const Tensor& target) {
    require_same_shape(pred.value(), target, "mse_loss");
    const std::size_t n = target.size();
    if (n == 0) throw DimensionError("mse_loss on empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.value()[i] - target[i];
        acc += d * d;
    }
    auto pp = pred.node();
    return make_op(Tensor::scalar(acc / static_cast<double>(n)), {pp}, [pp, target](const Node& node) {
        if (!pp->requires_grad) return;
        const double g = node.grad[0] * 2.0 / static_cast<double>(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) {
            pp->grad[i] += g * (pp->value[i] - target[i]);
        }
    });
}

namespace {

void check_recurrent_dims(const Tensor& w, const Tensor& b, std::size_t n_h, std::size_t n_in,
                          const char* gate) {
    if (w.rank() != 2 || w.shape[0] != n_h || w.shape[1] != n_h + n_in) {
        throw DimensionError(std::string(gate) + ": weight shape " + w.shape_string() +
                             " does not match state " + std::to_string(n_h) + " + input " +
                             std::to_string(n_in));
    }
    if (b.rank() != 1 || b.shape[0] != n_h) {
        throw DimensionError(std::string(gate) + ": bias shape mismatch");
    }
}

}  // namespace

std::pair<Var, Var> lstm_cell_step(const Var& x, const Var& h_prev, const Var& c_prev,
                                   const LstmParams& p) {
    const std::size_t n_in = x.value().size();
    const std::size_t n_h = h_prev.value().size();
    if (c_prev.value().size() != n_h) throw DimensionError("lstm: c_prev size mismatch");
    check_recurrent_dims(p.w_f.value(), p.b_f.value(), n_h, n_in, "lstm forget gate");
    check_recurrent_dims(p.w_i.value(), p.b_i.value(), n_h, n_in, "lstm input gate");
    check_recurrent_dims(p.w_o.value(), p.b_o.value(), n_h, n_in, "lstm output gate");
    check_recurrent_dims(p.w_c.value(), p.b_c.value(), n_h, n_in, "lstm candidate");

    const Var z = concat({h_prev, x});
    const Var f = sigmoid(add(matvec(p.w_f, z), p.b_f));
    const Var i = sigmoid(add(matvec(p.w_i, z), p.b_i));
    const Var o = sigmoid(add(matvec(p.w_o, z), p.b_o));
    const Var cand = tanh(add(matvec(p.w_c, z), p.b_c));
    const Var c = add(mul(f, c_prev), mul(i, cand));
    const Var h = mul(o, tanh(c));
    return {h, c};
}

std::vector<Var> lstm_layer_seq(const std::vector<Var>& seq, const LstmParams& p) {
    if (seq.empty()) throw WindowError("lstm layer: empty sequence");
    const std::size_t n_h = p.b_f.value().size();
    Var h = Var::constant(Tensor({n_h}));
    Var c = Var::constant(Tensor({n_h}));
    std::vector<Var> hs;
    hs.reserve(seq.size());
    for (const Var& x : seq) {
        auto [h2, c2] = lstm_cell_step(x, h, c, p);
        h = h2;
        c = c2;
        hs.push_back(h);
    }
    return hs;
}

Var lstm_layer_last(const std::vector<Var>& seq, const LstmParams& p) {
    return lstm_layer_seq(seq, p).back();
}

Var lstm_layer_forward(const Var& seq, const LstmParams& p, bool return_sequence) {
    auto hs = lstm_layer_seq(split_rows(seq), p);
    if (return_sequence) return stack_rows(hs);
    return hs.back();
}

Var gru_cell_step(const Var& x, const Var& h_prev, const GruParams& p) {
    const std::size_t n_in = x.value().size();
    const std::size_t n_h = h_prev.value().size();
    check_recurrent_dims(p.w_z.value(), p.b_z.value(), n_h, n_in, "gru update gate");
    check_recurrent_dims(p.w_r.value(), p.b_r.value(), n_h, n_in, "gru reset gate");
    check_recurrent_dims(p.w_h.value(), p.b_h.value(), n_h, n_in, "gru candidate");

    const Var z_in = concat({h_prev, x});
    const Var z = sigmoid(add(matvec(p.w_z, z_in), p.b_z));
    const Var r = sigmoid(add(matvec(p.w_r, z_in), p.b_r));
    const Var cand = tanh(add(matvec(p.w_h, concat({mul(r, h_prev), x})), p.b_h));
    // h' = (1-z)*h + z*cand == h + z*(cand - h)
    return add(h_prev, mul(z, sub(cand, h_prev)));
}

std::vector<Var> gru_layer_seq(const std::vector<Var>& seq, const GruParams& p) {
    if (seq.empty()) throw WindowError("gru layer: empty sequence");
    const std::size_t n_h = p.b_z.value().size();
    Var h = Var::constant(Tensor({n_h}));
    std::vector<Var> hs;
    hs.reserve(seq.size());
    for (const Var& x : seq) {
        h = gru_cell_step(x, h, p);
        hs.push_back(h);
    }
    return hs;
}

Var gru_layer_last(const std::vector<Var>& seq, const GruParams& p) {
    return gru_layer_seq(seq, p).back();
}

Var bidirectional_lstm(const std::vector<Var>& seq, const LstmParams& fwd, const LstmParams& bwd) {
    std::vector<Var> rev(seq.rbegin(), seq.rend());
    return concat({lstm_layer_last(seq, fwd), lstm_layer_last(rev, bwd)});
}

std::vector<Var> split_rows(const Var& seq) {
    const Tensor& s = seq.value();
    if (s.rank() != 2) throw DimensionError("split_rows expects a rank-2 input");
    std::vector<Var> rows;
    rows.reserve(s.shape[0]);
    for (std::size_t t = 0; t < s.shape[0]; ++t) rows.push_back(row(seq, t));
    return rows;
}

}  // namespace hydrodeep
