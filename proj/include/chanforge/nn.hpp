// SPDX-License-Identifier: Apache-2.0
//
// chanforge - multi-frequency double-directional channel model toolkit
// Copyright (C) 2026 chanforge contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Dense networks over the tape engine: a plain MLP, the split-input
// conditional generator, the condition-expanding critic, and Adam.
// Everything is 64-bit; parameters live in flat ParamSet lists so
// initialization, updates and serialization stay uniform.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "chanforge/autodiff.hpp"
#include "chanforge/encoding.hpp"
#include "chanforge/rng.hpp"

namespace chanforge::nn {

using ad::Mat;
using ad::Tape;

enum class Act { identity, leaky_relu, tanh, sigmoid };
enum class Mode { train, eval };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.9;

struct ParamShape {
    int rows = 0, cols = 0;
    bool bias = false;  // biases initialize to zero
};

struct ParamSet {
    std::vector<Mat> mats;

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& m : mats) n += static_cast<std::size_t>(m.size());
        return n;
    }
    bool finite() const {
        for (const auto& m : mats)
            if (!m.allFinite()) return false;
        return true;
    }
};

/// Scaled-uniform fan-in initialization, biases zero; deterministic in seed.
inline ParamSet init_params(const std::vector<ParamShape>& shapes, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x1417ULL));
    ParamSet p;
    p.mats.reserve(shapes.size());
    for (const auto& s : shapes) {
        Mat m(s.rows, s.cols);
        if (s.bias) {
            m.setZero();
        } else {
            const double bound = 1.0 / std::sqrt(static_cast<double>(s.rows));
            for (int r = 0; r < s.rows; ++r)
                for (int c = 0; c < s.cols; ++c) m(r, c) = rng.uniform(-bound, bound);
        }
        p.mats.push_back(std::move(m));
    }
    return p;
}

inline std::vector<int> make_leaves(Tape& t, const ParamSet& p) {
    std::vector<int> ids;
    ids.reserve(p.mats.size());
    for (const auto& m : p.mats) ids.push_back(t.leaf(m));
    return ids;
}

inline std::vector<int> make_constants(Tape& t, const ParamSet& p) {
    std::vector<int> ids;
    ids.reserve(p.mats.size());
    for (const auto& m : p.mats) ids.push_back(t.constant(m));
    return ids;
}

inline int dense(Tape& t, int x, int w, int b) { return t.rowwise_add_vec(t.matmul(x, w), b); }

inline int activation(Tape& t, int x, Act act, double slope = kLeakySlope) {
    switch (act) {
        case Act::identity: return x;
        case Act::leaky_relu: return t.leaky_relu(x, slope);
        case Act::tanh: return t.tanh_act(x);
        case Act::sigmoid: return t.sigmoid_act(x);
    }
    throw std::logic_error("unknown activation");
}

/// Non-trainable batch normalization: scale/shift fixed at 1/0, running
/// statistics tracked for eval mode.
struct BnState {
    Eigen::RowVectorXd run_mean;
    Eigen::RowVectorXd run_var;
    bool initialized = false;

    void ensure(int dim) {
        if (run_mean.size() != dim) {
            run_mean = Eigen::RowVectorXd::Zero(dim);
            run_var = Eigen::RowVectorXd::Ones(dim);
            initialized = false;
        }
    }
};

inline int batch_norm(Tape& t, int x, Mode mode, BnState& state) {
    const int n = static_cast<int>(t.value(x).rows());
    const int d = static_cast<int>(t.value(x).cols());
    state.ensure(d);
    if (mode == Mode::train) {
        const int mean = t.scale(t.colwise_sum(x), 1.0 / n);
        const int centered = t.sub(x, t.repeat_rows(mean, n));
        const int var = t.scale(t.colwise_sum(t.square(centered)), 1.0 / n);
        const int inv_sd = t.inv_guarded(t.sqrt_guarded(t.add_scalar(var, kBnEps)));
        const int out = t.mul(centered, t.repeat_rows(inv_sd, n));
        // running statistics update is a training side effect
        const Eigen::RowVectorXd bmean = t.value(mean).row(0);
        const Eigen::RowVectorXd bvar = t.value(var).row(0);
        if (!state.initialized) {
            state.run_mean = bmean;
            state.run_var = bvar;
            state.initialized = true;
        } else {
            state.run_mean = kBnMomentum * state.run_mean + (1.0 - kBnMomentum) * bmean;
            state.run_var = kBnMomentum * state.run_var + (1.0 - kBnMomentum) * bvar;
        }
        return out;
    }
    const Eigen::RowVectorXd inv_sd =
        (state.run_var.array() + kBnEps).sqrt().inverse().matrix();
    const int mean_c = t.constant(state.run_mean);
    const int inv_c = t.constant(inv_sd);
    return t.mul(t.sub(x, t.repeat_rows(mean_c, n)), t.repeat_rows(inv_c, n));
}

/// Apply a per-column squashing pattern via constant masks, so one matrix
/// pass covers all three activation kinds.
inline int per_field_activation(Tape& t, int y, const std::vector<FieldAct>& acts) {
    const int n = static_cast<int>(t.value(y).rows());
    const int d = static_cast<int>(t.value(y).cols());
    if (static_cast<int>(acts.size()) != d)
        throw std::invalid_argument("per_field_activation: pattern width mismatch");
    Eigen::RowVectorXd ms = Eigen::RowVectorXd::Zero(d), mt = ms, mi = ms;
    bool any_s = false, any_t = false, any_i = false;
    for (int i = 0; i < d; ++i) {
        switch (acts[i]) {
            case FieldAct::sigmoid01: ms[i] = 1.0; any_s = true; break;
            case FieldAct::tanh_sym: mt[i] = 1.0; any_t = true; break;
            case FieldAct::identity: mi[i] = 1.0; any_i = true; break;
        }
    }
    int out = -1;
    auto blend = [&](int part, const Eigen::RowVectorXd& mask) {
        const int masked = t.mul(part, t.repeat_rows(t.constant(mask), n));
        out = out < 0 ? masked : t.add(out, masked);
    };
    if (any_s) blend(t.sigmoid_act(y), ms);
    if (any_t) blend(t.tanh_act(y), mt);
    if (any_i) blend(y, mi);
    return out;
}

// ---------------------------------------------------------------------------
// Plain MLP
// ---------------------------------------------------------------------------

struct MlpSpec {
    int input_dim = 0;
    std::vector<int> hidden;
    int output_dim = 0;
    Act hidden_act = Act::leaky_relu;
    double leaky_slope = kLeakySlope;
    std::vector<FieldAct> output_act;  // empty = identity
    std::vector<bool> batch_norm;      // per hidden layer

    void validate() const {
        if (input_dim < 1 || output_dim < 1) throw std::invalid_argument("MlpSpec: dims must be >= 1");
        for (int h : hidden)
            if (h < 1) throw std::invalid_argument("MlpSpec: hidden dims must be >= 1");
        if (!batch_norm.empty() && batch_norm.size() != hidden.size())
            throw std::invalid_argument("MlpSpec: batch_norm flags must match hidden layers");
    }

    std::vector<ParamShape> shapes() const {
        validate();
        std::vector<ParamShape> out;
        int in = input_dim;
        for (int h : hidden) {
            out.push_back({in, h, false});
            out.push_back({1, h, true});
            in = h;
        }
        out.push_back({in, output_dim, false});
        out.push_back({1, output_dim, true});
        return out;
    }
};

struct MlpForward {
    int output = -1;
};

inline int mlp_forward(Tape& t, const MlpSpec& spec, const std::vector<int>& params, int input,
                       Mode mode = Mode::eval, std::vector<BnState>* bn = nullptr) {
    if (t.value(input).cols() != spec.input_dim) throw std::invalid_argument("mlp_forward: input width");
    if (params.size() != spec.shapes().size()) throw std::invalid_argument("mlp_forward: param count");
    int x = input;
    std::size_t pi = 0;
    for (std::size_t layer = 0; layer < spec.hidden.size(); ++layer) {
        x = dense(t, x, params[pi], params[pi + 1]);
        pi += 2;
        x = activation(t, x, spec.hidden_act, spec.leaky_slope);
        if (!spec.batch_norm.empty() && spec.batch_norm[layer]) {
            if (bn == nullptr) throw std::invalid_argument("mlp_forward: batch norm state required");
            if (bn->size() <= layer) bn->resize(spec.hidden.size());
            x = batch_norm(t, x, mode, (*bn)[layer]);
        }
    }
    x = dense(t, x, params[pi], params[pi + 1]);
    if (!spec.output_act.empty()) x = per_field_activation(t, x, spec.output_act);
    return x;
}

/// Value-only forward pass.
inline Mat mlp_eval(const MlpSpec& spec, const ParamSet& p, const Mat& input,
                    std::vector<BnState>* bn = nullptr, Mode mode = Mode::eval) {
    Tape t;
    std::vector<BnState> scratch;
    const int out =
        mlp_forward(t, spec, make_constants(t, p), t.constant(input), mode, bn ? bn : &scratch);
    return t.value(out);
}

/// Per-row gradient of a scalar-output network with respect to its input.
inline Mat input_gradient(const MlpSpec& spec, const ParamSet& p, const Mat& input) {
    if (spec.output_dim != 1) throw std::invalid_argument("input_gradient: scalar output required");
    Tape t;
    const int x = t.leaf(input);
    std::vector<BnState> scratch;
    const int out = mlp_forward(t, spec, make_constants(t, p), x, Mode::eval, &scratch);
    const int g = t.backward_single(t.sum_all(out), x);
    return t.value(g);
}

// ---------------------------------------------------------------------------
// Conditional GAN networks
// ---------------------------------------------------------------------------

/// Generator: latent and condition each pass through their own dense layer
/// of width hidden[0], the branches are concatenated, batch-normalized,
/// then flow through hidden[1:] and the squashed output layer.
struct GeneratorSpec {
    int latent_dim = 20;
    int cond_dim = 2;
    int data_dim = 0;
    std::vector<int> hidden;  // hidden[0] = branch width
    std::vector<FieldAct> output_act;
    double leaky_slope = kLeakySlope;
    bool batch_norm = true;

    void validate() const {
        if (latent_dim < 1 || cond_dim < 1 || data_dim < 1 || hidden.size() < 2)
            throw std::invalid_argument("GeneratorSpec: bad dimensions");
        if (!output_act.empty() && static_cast<int>(output_act.size()) != data_dim)
            throw std::invalid_argument("GeneratorSpec: output activation width");
    }

    std::vector<ParamShape> shapes() const {
        validate();
        std::vector<ParamShape> out;
        out.push_back({latent_dim, hidden[0], false});
        out.push_back({1, hidden[0], true});
        out.push_back({cond_dim, hidden[0], false});
        out.push_back({1, hidden[0], true});
        int in = 2 * hidden[0];
        for (std::size_t i = 1; i < hidden.size(); ++i) {
            out.push_back({in, hidden[i], false});
            out.push_back({1, hidden[i], true});
            in = hidden[i];
        }
        out.push_back({in, data_dim, false});
        out.push_back({1, data_dim, true});
        return out;
    }
};

inline int generator_forward(Tape& t, const GeneratorSpec& spec, const std::vector<int>& params, int z,
                             int c, Mode mode, BnState& bn) {
    if (t.value(z).cols() != spec.latent_dim || t.value(c).cols() != spec.cond_dim)
        throw std::invalid_argument("generator_forward: input width");
    std::size_t pi = 0;
    const int hz = activation(t, dense(t, z, params[pi], params[pi + 1]), Act::leaky_relu, spec.leaky_slope);
    pi += 2;
    const int hc = activation(t, dense(t, c, params[pi], params[pi + 1]), Act::leaky_relu, spec.leaky_slope);
    pi += 2;
    int x = t.concat_cols(hz, hc);
    if (spec.batch_norm) x = batch_norm(t, x, mode, bn);
    for (std::size_t i = 1; i < spec.hidden.size(); ++i) {
        x = activation(t, dense(t, x, params[pi], params[pi + 1]), Act::leaky_relu, spec.leaky_slope);
        pi += 2;
    }
    x = dense(t, x, params[pi], params[pi + 1]);
    if (!spec.output_act.empty()) x = per_field_activation(t, x, spec.output_act);
    return x;
}

inline Mat generator_eval(const GeneratorSpec& spec, const ParamSet& p, const Mat& z, const Mat& c,
                          BnState& bn, Mode mode = Mode::eval) {
    Tape t;
    return t.value(generator_forward(t, spec, make_constants(t, p), t.constant(z), t.constant(c), mode, bn));
}

/// Critic: the condition is expanded to data width by a dense layer, then
/// concatenated with the data vector and scored by the hidden chain.
struct CriticSpec {
    int data_dim = 0;
    int cond_dim = 2;
    std::vector<int> hidden;
    double leaky_slope = kLeakySlope;

    void validate() const {
        if (data_dim < 1 || cond_dim < 1 || hidden.empty())
            throw std::invalid_argument("CriticSpec: bad dimensions");
    }

    std::vector<ParamShape> shapes() const {
        validate();
        std::vector<ParamShape> out;
        out.push_back({cond_dim, data_dim, false});  // condition expansion
        out.push_back({1, data_dim, true});
        int in = 2 * data_dim;
        for (int h : hidden) {
            out.push_back({in, h, false});
            out.push_back({1, h, true});
            in = h;
        }
        out.push_back({in, 1, false});
        out.push_back({1, 1, true});
        return out;
    }
};

inline int critic_forward(Tape& t, const CriticSpec& spec, const std::vector<int>& params, int x, int c) {
    if (t.value(x).cols() != spec.data_dim || t.value(c).cols() != spec.cond_dim)
        throw std::invalid_argument("critic_forward: input width");
    std::size_t pi = 0;
    const int ce = activation(t, dense(t, c, params[pi], params[pi + 1]), Act::leaky_relu, spec.leaky_slope);
    pi += 2;
    int h = t.concat_cols(x, ce);
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        h = activation(t, dense(t, h, params[pi], params[pi + 1]), Act::leaky_relu, spec.leaky_slope);
        pi += 2;
    }
    return dense(t, h, params[pi], params[pi + 1]);  // unbounded score
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Mat> m;
    std::vector<Mat> v;
    long step = 0;

    static AdamState like(const ParamSet& p) {
        AdamState s;
        for (const auto& mat : p.mats) {
            s.m.push_back(Mat::Zero(mat.rows(), mat.cols()));
            s.v.push_back(Mat::Zero(mat.rows(), mat.cols()));
        }
        return s;
    }
};

/// Standard bias-corrected Adam update, in place.
inline void adam_step(ParamSet& params, const std::vector<Mat>& grads, AdamState& state,
                      const AdamConfig& cfg) {
    if (grads.size() != params.mats.size() || state.m.size() != params.mats.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.mats.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i].cwiseProduct(grads[i]);
        const Mat mhat = state.m[i] / bc1;
        const Mat vhat = state.v[i] / bc2;
        params.mats[i].array() -= cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    }
}

}  // namespace chanforge::nn
