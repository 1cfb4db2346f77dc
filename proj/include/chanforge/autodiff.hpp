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
// Matrix-valued reverse-mode differentiation.  Every backward rule emits
// ordinary tape operations, so gradients are themselves differentiable
// nodes: a second reverse pass over the extended tape yields the
// second-order terms the gradient penalty needs.
//
// Non-smooth points follow the usual conventions: the leaky rectifier's
// derivative is treated as piecewise constant, and sqrt/inv take derivative
// 0 at non-positive inputs.

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace chanforge::ad {

using Mat = Eigen::MatrixXd;

class Tape {
  public:
    struct Node {
        Mat value;
        bool needs_grad = false;
        // emits gradient contributions for the parents into gmap
        std::function<void(Tape&, int self, int gself, std::vector<int>& gmap)> backward;
    };

    int size() const { return static_cast<int>(nodes_.size()); }
    const Mat& value(int id) const { return nodes_[id].value; }
    bool needs_grad(int id) const { return nodes_[id].needs_grad; }

    int constant(Mat v) {
        nodes_.push_back({std::move(v), false, nullptr});
        return size() - 1;
    }

    int leaf(Mat v) {
        nodes_.push_back({std::move(v), true, nullptr});
        return size() - 1;
    }

    // ---- elementwise binary -------------------------------------------------

    int add(int a, int b) {
        check_same_shape(a, b, "add");
        return push(value(a) + value(b), a, b, [a, b](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, g);
            t.accumulate(gm, b, g);
        });
    }

    int sub(int a, int b) {
        check_same_shape(a, b, "sub");
        return push(value(a) - value(b), a, b, [a, b](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, g);
            t.accumulate(gm, b, t.scale(g, -1.0));
        });
    }

    int mul(int a, int b) {
        check_same_shape(a, b, "mul");
        return push(value(a).cwiseProduct(value(b)), a, b,
                    [a, b](Tape& t, int, int g, std::vector<int>& gm) {
                        t.accumulate(gm, a, t.mul(g, b));
                        t.accumulate(gm, b, t.mul(g, a));
                    });
    }

    // ---- linear algebra -----------------------------------------------------

    int matmul(int a, int b) {
        if (value(a).cols() != value(b).rows()) throw std::invalid_argument("matmul: shape mismatch");
        return push(value(a) * value(b), a, b, [a, b](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.matmul(g, t.transpose(b)));
            t.accumulate(gm, b, t.matmul(t.transpose(a), g));
        });
    }

    int transpose(int a) {
        return push(value(a).transpose(), a, -1, [a](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.transpose(g));
        });
    }

    // ---- scalar coefficients ------------------------------------------------

    int scale(int a, double k) {
        return push(value(a) * k, a, -1, [a, k](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.scale(g, k));
        });
    }

    int add_scalar(int a, double k) {
        Mat v = (value(a).array() + k).matrix();
        return push(std::move(v), a, -1, [a](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, g);
        });
    }

    // ---- broadcasts and reductions -------------------------------------------

    /// X (N x D) + b (1 x D) broadcast over rows.
    int rowwise_add_vec(int x, int b) {
        if (value(b).rows() != 1 || value(x).cols() != value(b).cols())
            throw std::invalid_argument("rowwise_add_vec: shape mismatch");
        Mat v = value(x);
        v.rowwise() += value(b).row(0);
        return push(std::move(v), x, b, [x, b](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, x, g);
            t.accumulate(gm, b, t.colwise_sum(g));
        });
    }

    int colwise_sum(int x) {
        const int n = static_cast<int>(value(x).rows());
        return push(value(x).colwise().sum(), x, -1, [x, n](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, x, t.repeat_rows(g, n));
        });
    }

    int rowwise_sum(int x) {
        const int d = static_cast<int>(value(x).cols());
        return push(value(x).rowwise().sum(), x, -1, [x, d](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, x, t.repeat_cols(g, d));
        });
    }

    int repeat_rows(int v, int n) {
        if (value(v).rows() != 1) throw std::invalid_argument("repeat_rows: expected a row vector");
        return push(value(v).replicate(n, 1), v, -1, [v](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, v, t.colwise_sum(g));
        });
    }

    int repeat_cols(int v, int d) {
        if (value(v).cols() != 1) throw std::invalid_argument("repeat_cols: expected a column vector");
        return push(value(v).replicate(1, d), v, -1, [v](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, v, t.rowwise_sum(g));
        });
    }

    int sum_all(int x) {
        const int n = static_cast<int>(value(x).rows());
        const int d = static_cast<int>(value(x).cols());
        Mat v(1, 1);
        v(0, 0) = value(x).sum();
        return push(std::move(v), x, -1, [x, n, d](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, x, t.broadcast_scalar(g, n, d));
        });
    }

    int mean_all(int x) {
        const double inv = 1.0 / static_cast<double>(value(x).size());
        return scale(sum_all(x), inv);
    }

    int broadcast_scalar(int s, int n, int d) {
        if (value(s).size() != 1) throw std::invalid_argument("broadcast_scalar: expected a scalar");
        return push(Mat::Constant(n, d, value(s)(0, 0)), s, -1,
                    [s](Tape& t, int, int g, std::vector<int>& gm) { t.accumulate(gm, s, t.sum_all(g)); });
    }

    // ---- nonlinearities -------------------------------------------------------

    int leaky_relu(int a, double slope) {
        const Mat& x = value(a);
        Mat v = x.unaryExpr([slope](double e) { return e >= 0.0 ? e : slope * e; });
        Mat mask = x.unaryExpr([slope](double e) { return e >= 0.0 ? 1.0 : slope; });
        return push(std::move(v), a, -1,
                    [a, mask = std::move(mask)](Tape& t, int, int g, std::vector<int>& gm) {
                        t.accumulate(gm, a, t.mul(g, t.constant(mask)));
                    });
    }

    int tanh_act(int a) {
        Mat v = value(a).array().tanh().matrix();
        return push(std::move(v), a, -1, [a](Tape& t, int self, int g, std::vector<int>& gm) {
            // dy = g * (1 - y^2)
            const int one_minus_y2 = t.add_scalar(t.scale(t.mul(self, self), -1.0), 1.0);
            t.accumulate(gm, a, t.mul(g, one_minus_y2));
        });
    }

    int sigmoid_act(int a) {
        Mat v = value(a).unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
        return push(std::move(v), a, -1, [a](Tape& t, int self, int g, std::vector<int>& gm) {
            // dy = g * y * (1 - y)
            const int one_minus_y = t.add_scalar(t.scale(self, -1.0), 1.0);
            t.accumulate(gm, a, t.mul(g, t.mul(self, one_minus_y)));
        });
    }

    /// Elementwise sqrt with derivative 0 at non-positive inputs.
    int sqrt_guarded(int a) {
        Mat v = value(a).unaryExpr([](double e) { return e > 0.0 ? std::sqrt(e) : 0.0; });
        return push(std::move(v), a, -1, [a](Tape& t, int self, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.mul(g, t.scale(t.inv_guarded(self), 0.5)));
        });
    }

    /// Elementwise reciprocal with value and derivative 0 at 0.
    int inv_guarded(int a) {
        Mat v = value(a).unaryExpr([](double e) { return e != 0.0 ? 1.0 / e : 0.0; });
        return push(std::move(v), a, -1, [a](Tape& t, int self, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.scale(t.mul(g, t.mul(self, self)), -1.0));
        });
    }

    // ---- structure -------------------------------------------------------------

    int concat_cols(int a, int b) {
        if (value(a).rows() != value(b).rows()) throw std::invalid_argument("concat_cols: row mismatch");
        const int da = static_cast<int>(value(a).cols());
        const int db = static_cast<int>(value(b).cols());
        Mat v(value(a).rows(), da + db);
        v.leftCols(da) = value(a);
        v.rightCols(db) = value(b);
        return push(std::move(v), a, b, [a, b, da, db](Tape& t, int, int g, std::vector<int>& gm) {
            t.accumulate(gm, a, t.slice_cols(g, 0, da));
            t.accumulate(gm, b, t.slice_cols(g, da, db));
        });
    }

    int slice_cols(int a, int off, int n) {
        if (off < 0 || off + n > value(a).cols()) throw std::invalid_argument("slice_cols: out of range");
        const int total = static_cast<int>(value(a).cols());
        return push(value(a).middleCols(off, n), a, -1,
                    [a, off, n, total](Tape& t, int, int g, std::vector<int>& gm) {
                        t.accumulate(gm, a, t.pad_cols(g, off, total));
                    });
    }

    int pad_cols(int g, int off, int total) {
        const int n = static_cast<int>(value(g).cols());
        if (off < 0 || off + n > total) throw std::invalid_argument("pad_cols: out of range");
        Mat v = Mat::Zero(value(g).rows(), total);
        v.middleCols(off, n) = value(g);
        return push(std::move(v), g, -1, [g, off, n](Tape& t, int, int gg, std::vector<int>& gm) {
            t.accumulate(gm, g, t.slice_cols(gg, off, n));
        });
    }

    int square(int a) { return mul(a, a); }

    /// Per-row Euclidean norm of X as an N x 1 node.
    int row_norms(int x) { return sqrt_guarded(rowwise_sum(square(x))); }

    // ---- reverse pass ------------------------------------------------------------

    /// Reverse-mode gradients of a scalar node with respect to the given
    /// nodes.  The returned gradients are tape nodes, so they can be used in
    /// further computation and differentiated again.
    std::vector<int> backward(int loss, std::span<const int> wrt) {
        if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be scalar");
        std::vector<int> gmap(static_cast<std::size_t>(loss) + 1, -1);
        gmap[loss] = constant(Mat::Ones(1, 1));
        for (int id = loss; id >= 0; --id) {
            if (gmap[id] < 0) continue;
            if (nodes_[id].backward && nodes_[id].needs_grad) nodes_[id].backward(*this, id, gmap[id], gmap);
        }
        std::vector<int> out;
        out.reserve(wrt.size());
        for (int w : wrt) {
            if (w <= loss && gmap[w] >= 0)
                out.push_back(gmap[w]);
            else
                out.push_back(constant(Mat::Zero(value(w).rows(), value(w).cols())));
        }
        return out;
    }

    int backward_single(int loss, int wrt) {
        const int w[1] = {wrt};
        return backward(loss, w)[0];
    }

  private:
    template <typename V, typename F>
    int push(V&& v, int pa, int pb, F&& bw) {
        Node n;
        n.value = std::forward<V>(v);
        n.needs_grad = (pa >= 0 && nodes_[pa].needs_grad) || (pb >= 0 && nodes_[pb].needs_grad);
        if (n.needs_grad) n.backward = std::forward<F>(bw);
        nodes_.push_back(std::move(n));
        return size() - 1;
    }

    void accumulate(std::vector<int>& gmap, int target, int contribution) {
        if (!nodes_[target].needs_grad) return;
        if (target >= static_cast<int>(gmap.size())) return;  // created after the loss
        gmap[target] = gmap[target] < 0 ? contribution : add(gmap[target], contribution);
    }

    void check_same_shape(int a, int b, const char* what) const {
        if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
            throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }

    std::vector<Node> nodes_;
};

}  // namespace chanforge::ad
