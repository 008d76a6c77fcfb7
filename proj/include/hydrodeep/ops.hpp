#pragma once

#include <utility>
#include <vector>

#include "hydrodeep/autodiff.hpp"
#include "hydrodeep/rng.hpp"

namespace hydrodeep {

enum class Activation { identity, tanh, relu };

enum class Mode { train, eval };

/// Valid (no padding) 1-D convolution, stride 1.
/// input [T x C], kernels [K x C x W], bias [K] -> [(T-W+1) x K].
Var conv1d(const Var& input, const Var& kernels, const Var& bias, Activation act);

/// Non-overlapping max pooling over time; trailing remainder rows dropped.
/// input [T x K] -> [floor(T/pool) x K].
Var maxpool1d(const Var& input, int pool);

/// act(W x + b). W [n_out x n_in], b [n_out].
Var dense(const Var& x, const Var& w, const Var& b, Activation act);

/// Inverted dropout: train mode zeroes entries with probability `rate` and
/// scales survivors by 1/(1-rate); eval mode is the identity.
Var dropout(const Var& x, double rate, Mode mode, Rng& rng);

/// Mean squared error against a fixed target.
Var mse_loss(const Var& pred, const Tensor& target);

struct LstmParams {
    Var w_f, w_i, w_o, w_c;  // each [n_h x (n_h + n_in)], acting on [h_prev, x]
    Var b_f, b_i, b_o, b_c;  // each [n_h]
};

struct GruParams {
    Var w_z, w_r, w_h;  // each [n_h x (n_h + n_in)]
    Var b_z, b_r, b_h;  // each [n_h]
};

/// One LSTM step: gates f,i,o = sigmoid(W.[h_prev,x]+b), candidate
/// tanh(W_c.[h_prev,x]+b_c), c = f*c_prev + i*cand, h = o*tanh(c).
std::pair<Var, Var> lstm_cell_step(const Var& x, const Var& h_prev, const Var& c_prev,
                                   const LstmParams& p);

/// Unrolls lstm_cell_step from zero state over the sequence; returns every h_t.
std::vector<Var> lstm_layer_seq(const std::vector<Var>& seq, const LstmParams& p);

/// Final hidden state only.
Var lstm_layer_last(const std::vector<Var>& seq, const LstmParams& p);

/// Tensor-in, tensor-out form: seq [T x n_in] -> [T x n_h] or [n_h].
Var lstm_layer_forward(const Var& seq, const LstmParams& p, bool return_sequence);

/// One GRU step: z,r = sigmoid gates, cand = tanh(W_h.[r*h,x]+b_h),
/// h' = (1-z)*h + z*cand.
Var gru_cell_step(const Var& x, const Var& h_prev, const GruParams& p);

std::vector<Var> gru_layer_seq(const std::vector<Var>& seq, const GruParams& p);
Var gru_layer_last(const std::vector<Var>& seq, const GruParams& p);

/// Concatenation of the forward pass's final state and the final state of an
/// independent pass over the reversed sequence -> [2 n_h].
Var bidirectional_lstm(const std::vector<Var>& seq, const LstmParams& fwd, const LstmParams& bwd);

/// Splits a [T x C] var into T row vars (shared execution record).
std::vector<Var> split_rows(const Var& seq);

Var apply_activation(const Var& x, Activation act);

const char* activation_name(Activation act);
Activation activation_from_name(const std::string& name);

}  // namespace hydrodeep
