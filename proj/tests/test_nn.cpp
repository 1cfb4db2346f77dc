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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chanforge/nn.hpp"

using namespace chanforge;
using namespace chanforge::nn;
using ad::Mat;
using ad::Tape;

namespace {

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3}); }

Mat random_mat(Rng& rng, int r, int c, double scale = 1.0) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
    return m;
}

MlpSpec random_smooth_spec(Rng& rng) {
    MlpSpec spec;
    spec.input_dim = 1 + static_cast<int>(rng.below(8));
    spec.output_dim = 1 + static_cast<int>(rng.below(4));
    const int layers = static_cast<int>(rng.below(4));  // up to 3 hidden layers
    for (int i = 0; i < layers; ++i) spec.hidden.push_back(1 + static_cast<int>(rng.below(16)));
    spec.hidden_act = Act::tanh;
    return spec;
}

/// Scalar loss used by the finite-difference oracle: sum of squares of the
/// network output against a fixed target.
double loss_value(const MlpSpec& spec, const ParamSet& p, const Mat& x, const Mat& target) {
    const Mat out = mlp_eval(spec, p, x);
    return (out - target).squaredNorm();
}

}  // namespace

TEST_CASE("init_params determinism and layout") {
    const MlpSpec spec{.input_dim = 4, .hidden = {8, 5}, .output_dim = 3};
    const ParamSet a = init_params(spec.shapes(), 11);
    const ParamSet b = init_params(spec.shapes(), 11);
    REQUIRE(a.mats.size() == b.mats.size());
    for (std::size_t i = 0; i < a.mats.size(); ++i) CHECK(a.mats[i] == b.mats[i]);

    const ParamSet c = init_params(spec.shapes(), 12);
    CHECK(a.mats[0] != c.mats[0]);

    // biases start at zero
    CHECK(a.mats[1].norm() == 0.0);

    // zero hidden layers degenerate to a single linear map
    const MlpSpec lin{.input_dim = 6, .hidden = {}, .output_dim = 2};
    const auto shapes = lin.shapes();
    REQUIRE(shapes.size() == 2);
    CHECK(shapes[0].rows == 6);
    CHECK(shapes[0].cols == 2);
}

TEST_CASE("parameter count of the paper-profile generator follows the closed form") {
    GeneratorSpec gen;
    gen.latent_dim = 20;
    gen.cond_dim = 2;
    gen.data_dim = 170;
    gen.hidden = {280, 560, 1120};
    const ParamSet p = init_params(gen.shapes(), 1);

    const std::size_t expected = (20 * 280 + 280) + (2 * 280 + 280) + (560 * 560 + 560) +
                                 (560 * 1120 + 1120) + (1120 * 170 + 170);
    CHECK(p.count() == expected);

    CriticSpec critic;
    critic.data_dim = 170;
    critic.cond_dim = 2;
    critic.hidden = {1120, 560, 280};
    const std::size_t critic_expected = (2 * 170 + 170) + (340 * 1120 + 1120) + (1120 * 560 + 560) +
                                        (560 * 280 + 280) + (280 * 1 + 1);
    CHECK(init_params(critic.shapes(), 2).count() == critic_expected);
}

TEST_CASE("identity linear layer reproduces its input") {
    const MlpSpec spec{.input_dim = 3, .hidden = {}, .output_dim = 3};
    ParamSet p = init_params(spec.shapes(), 1);
    p.mats[0] = Mat::Identity(3, 3);
    p.mats[1].setZero();
    Rng rng(2);
    const Mat x = random_mat(rng, 5, 3);
    CHECK((mlp_eval(spec, p, x) - x).norm() == 0.0);
}

TEST_CASE("leaky rectifier slope") {
    Tape t;
    Mat x(1, 3);
    x << -1.0, 0.0, 2.0;
    const int out = t.leaky_relu(t.constant(x), 0.2);
    CHECK(t.value(out)(0, 0) == Catch::Approx(-0.2));
    CHECK(t.value(out)(0, 1) == 0.0);
    CHECK(t.value(out)(0, 2) == 2.0);
}

TEST_CASE("batched forward equals row-wise forwards in eval mode") {
    Rng rng(7);
    const MlpSpec spec = random_smooth_spec(rng);
    const ParamSet p = init_params(spec.shapes(), 3);
    const Mat batch = random_mat(rng, 6, spec.input_dim);
    const Mat full = mlp_eval(spec, p, batch);
    for (int r = 0; r < batch.rows(); ++r) {
        const Mat row = mlp_eval(spec, p, batch.row(r));
        CHECK((full.row(r) - row.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("quadratic loss on a linear layer matches the analytic gradient") {
    Rng rng(13);
    const MlpSpec spec{.input_dim = 4, .hidden = {}, .output_dim = 2};
    const ParamSet p = init_params(spec.shapes(), 5);
    const Mat x = random_mat(rng, 3, 4);
    const Mat y = random_mat(rng, 3, 2);

    Tape t;
    const auto leaves = make_leaves(t, p);
    const int pred = mlp_forward(t, spec, leaves, t.constant(x));
    const int loss = t.sum_all(t.square(t.sub(pred, t.constant(y))));
    const auto grads = t.backward(loss, leaves);

    const Mat resid = x * p.mats[0] + Mat::Ones(3, 1) * p.mats[1] - y;
    const Mat dw = 2.0 * x.transpose() * resid;
    const Mat db = 2.0 * resid.colwise().sum();
    CHECK((t.value(grads[0]) - dw).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.value(grads[1]) - db).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero loss produces zero gradients") {
    const MlpSpec spec{.input_dim = 3, .hidden = {4}, .output_dim = 2, .hidden_act = Act::tanh};
    const ParamSet p = init_params(spec.shapes(), 9);
    Rng rng(4);
    Tape t;
    const auto leaves = make_leaves(t, p);
    const int pred = mlp_forward(t, spec, leaves, t.constant(random_mat(rng, 2, 3)));
    const int loss = t.sum_all(t.scale(pred, 0.0));
    for (int g : t.backward(loss, leaves)) CHECK(t.value(g).norm() == 0.0);
}

TEST_CASE("backward rejects non-scalar losses") {
    Tape t;
    const int x = t.leaf(Mat::Ones(2, 2));
    CHECK_THROWS_AS(t.backward_single(x, x), std::invalid_argument);
}

TEST_CASE("parameter gradients match central finite differences") {
    Rng rng(101);
    for (int net = 0; net < 25; ++net) {
        const MlpSpec spec = random_smooth_spec(rng);
        ParamSet p = init_params(spec.shapes(), mix_seed(55, net));
        const Mat x = random_mat(rng, 3, spec.input_dim);
        const Mat target = random_mat(rng, 3, spec.output_dim);

        Tape t;
        const auto leaves = make_leaves(t, p);
        const int pred = mlp_forward(t, spec, leaves, t.constant(x));
        const int loss = t.sum_all(t.square(t.sub(pred, t.constant(target))));
        const auto grads = t.backward(loss, leaves);

        const double h = 1e-3;
        for (std::size_t mi = 0; mi < p.mats.size(); ++mi) {
            for (int idx = 0; idx < p.mats[mi].size(); ++idx) {
                ParamSet pp = p;
                pp.mats[mi].data()[idx] += h;
                const double up = loss_value(spec, pp, x, target);
                pp.mats[mi].data()[idx] -= 2 * h;
                const double dn = loss_value(spec, pp, x, target);
                const double fd = (up - dn) / (2 * h);
                CHECK(rel_err(t.value(grads[mi]).data()[idx], fd) < 1e-4);
            }
        }
    }
}

TEST_CASE("linear critic input gradient equals its weight vector") {
    const MlpSpec spec{.input_dim = 5, .hidden = {}, .output_dim = 1};
    const ParamSet p = init_params(spec.shapes(), 77);
    Rng rng(6);
    const Mat x = random_mat(rng, 4, 5);
    const Mat g = input_gradient(spec, p, x);
    for (int r = 0; r < 4; ++r)
        CHECK((g.row(r).transpose() - p.mats[0]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("input gradients match central finite differences") {
    Rng rng(303);
    for (int net = 0; net < 25; ++net) {
        MlpSpec spec = random_smooth_spec(rng);
        spec.output_dim = 1;
        const ParamSet p = init_params(spec.shapes(), mix_seed(56, net));
        Mat x = random_mat(rng, 2, spec.input_dim);
        const Mat g = input_gradient(spec, p, x);

        const double h = 1e-3;
        for (int r = 0; r < x.rows(); ++r) {
            for (int cidx = 0; cidx < x.cols(); ++cidx) {
                Mat xp = x;
                xp(r, cidx) += h;
                const double up = mlp_eval(spec, p, xp)(r, 0);
                xp(r, cidx) -= 2 * h;
                const double dn = mlp_eval(spec, p, xp)(r, 0);
                CHECK(rel_err(g(r, cidx), (up - dn) / (2 * h)) < 1e-4);
            }
        }
    }
}

TEST_CASE("gradient-penalty double backprop matches parameter finite differences") {
    // 2-2-1 critic with smooth activations so the finite-difference oracle
    // is valid for the second-order term
    const MlpSpec spec{.input_dim = 2, .hidden = {2}, .output_dim = 1, .hidden_act = Act::tanh};
    ParamSet p = init_params(spec.shapes(), 123);
    Rng rng(8);
    const Mat x = random_mat(rng, 3, 2);

    auto penalty_value = [&](const ParamSet& params) {
        const Mat g = input_gradient(spec, params, x);
        double total = 0.0;
        for (int r = 0; r < g.rows(); ++r) {
            const double n = g.row(r).norm();
            total += (n - 1.0) * (n - 1.0);
        }
        return total / g.rows();
    };

    // tape version with the double backward
    Tape t;
    const auto leaves = make_leaves(t, p);
    const int xin = t.leaf(x);
    const int score = mlp_forward(t, spec, leaves, xin);
    const int gx = t.backward_single(t.sum_all(score), xin);
    const int norms = t.row_norms(gx);
    const int pen = t.mean_all(t.square(t.add_scalar(norms, -1.0)));
    const auto grads = t.backward(pen, leaves);

    const double h = 1e-4;
    for (std::size_t mi = 0; mi < p.mats.size(); ++mi) {
        for (int idx = 0; idx < p.mats[mi].size(); ++idx) {
            ParamSet pp = p;
            pp.mats[mi].data()[idx] += h;
            const double up = penalty_value(pp);
            pp.mats[mi].data()[idx] -= 2 * h;
            const double dn = penalty_value(pp);
            const double fd = (up - dn) / (2 * h);
            CHECK(rel_err(t.value(grads[mi]).data()[idx], fd) < 1e-3);
        }
    }
}

TEST_CASE("batch norm normalizes in train mode and freezes in eval mode") {
    Rng rng(15);
    GeneratorSpec spec;
    spec.latent_dim = 4;
    spec.cond_dim = 2;
    spec.data_dim = 3;
    spec.hidden = {6, 8};
    const ParamSet p = init_params(spec.shapes(), 21);
    BnState bn;

    const Mat z = random_mat(rng, 32, 4);
    const Mat c = random_mat(rng, 32, 2);
    (void)generator_eval(spec, p, z, c, bn, Mode::train);
    REQUIRE(bn.initialized);

    // eval output of a row is independent of what it is batched with
    const Mat z2 = random_mat(rng, 8, 4);
    const Mat c2 = random_mat(rng, 8, 2);
    const Mat full = generator_eval(spec, p, z2, c2, bn, Mode::eval);
    for (int r = 0; r < 8; ++r) {
        BnState bn_copy = bn;
        const Mat row = generator_eval(spec, p, z2.row(r), c2.row(r), bn_copy, Mode::eval);
        CHECK((full.row(r) - row.row(0)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("per-field output activation routes each column") {
    Tape t;
    Mat y(2, 3);
    y << -2.0, -2.0, -2.0, 1.5, 1.5, 1.5;
    const std::vector<FieldAct> acts{FieldAct::sigmoid01, FieldAct::tanh_sym, FieldAct::identity};
    const int out = per_field_activation(t, t.constant(y), acts);
    CHECK(t.value(out)(0, 0) == Catch::Approx(1.0 / (1.0 + std::exp(2.0))));
    CHECK(t.value(out)(0, 1) == Catch::Approx(std::tanh(-2.0)));
    CHECK(t.value(out)(0, 2) == -2.0);
    CHECK(t.value(out)(1, 2) == 1.5);
}

TEST_CASE("adam_step") {
    const MlpSpec spec{.input_dim = 2, .hidden = {}, .output_dim = 2};
    ParamSet p = init_params(spec.shapes(), 31);
    const ParamSet orig = p;
    AdamState st = AdamState::like(p);
    const AdamConfig cfg;

    SECTION("zero gradient leaves parameters unchanged") {
        std::vector<Mat> zero{Mat::Zero(2, 2), Mat::Zero(1, 2)};
        adam_step(p, zero, st, cfg);
        CHECK(st.step == 1);
        for (std::size_t i = 0; i < p.mats.size(); ++i) CHECK(p.mats[i] == orig.mats[i]);
    }
    SECTION("first step follows the bias-corrected closed form") {
        Rng rng(77);
        std::vector<Mat> g{random_mat(rng, 2, 2), random_mat(rng, 1, 2)};
        adam_step(p, g, st, cfg);
        for (std::size_t i = 0; i < p.mats.size(); ++i) {
            for (int idx = 0; idx < p.mats[i].size(); ++idx) {
                const double gi = g[i].data()[idx];
                const double expected = orig.mats[i].data()[idx] - cfg.lr * gi / (std::abs(gi) + cfg.eps);
                CHECK(p.mats[i].data()[idx] == Catch::Approx(expected).margin(1e-12));
            }
        }
    }
    SECTION("identical calls from identical state agree") {
        Rng rng(78);
        std::vector<Mat> g{random_mat(rng, 2, 2), random_mat(rng, 1, 2)};
        ParamSet p2 = orig;
        AdamState st2 = AdamState::like(p2);
        adam_step(p, g, st, cfg);
        adam_step(p2, g, st2, cfg);
        for (std::size_t i = 0; i < p.mats.size(); ++i) CHECK(p.mats[i] == p2.mats[i]);
    }
}
