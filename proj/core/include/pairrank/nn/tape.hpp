#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "pairrank/nn/mat.hpp"

namespace pairrank::nn {

/// A named trainable tensor. Gradients accumulate across tape backward
/// passes until the optimizer clears them, which is what batch accumulation
/// relies on.
struct Parameter {
    std::string name;
    Mat value;
    Mat grad;

    Parameter() = default;
    Parameter(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
        grad = Mat::zeros_like(value);
    }
    void zero_grad() { std::fill(grad.w.begin(), grad.w.end(), 0.0); }
};

/// Reverse-mode autodiff over matrices. Ops append nodes; backward() walks
/// the node list in reverse, each node pushing its gradient into its parents
/// (or directly into Parameter::grad for leaves). One tape per forward pass.
class Tape {
public:
    struct Node {
        Mat value;
        Mat grad;
        bool needs_grad = false;
        std::function<void(Node&)> backprop;
    };

    Node* constant(Mat v);
    Node* param(Parameter& p);
    /// Gathers rows of an embedding table; gradients scatter-add back into
    /// the table without materializing it on the tape.
    Node* embedding(Parameter& table, const std::vector<int>& ids);

    Node* select_rows(Node* a, std::vector<int> row_indices);
    Node* slice_cols(Node* a, int start, int count);
    Node* concat_cols(const std::vector<Node*>& parts);
    Node* transpose(Node* a);

    Node* matmul(Node* a, Node* b);
    Node* add(Node* a, Node* b);
    Node* sub(Node* a, Node* b);
    Node* add_row(Node* a, Node* row);  // broadcast a 1 x n row over every row of a
    Node* hadamard(Node* a, Node* b);
    Node* scale(Node* a, double s);
    Node* add_const(Node* a, double c);
    Node* scale_by(Node* a, Node* scalar);  // scalar is a 1 x 1 node

    Node* tanh_op(Node* a);
    Node* relu(Node* a);
    Node* sigmoid(Node* a);
    Node* softplus(Node* a);
    Node* sqrt_op(Node* a);
    Node* reciprocal(Node* a);

    Node* softmax_rows(Node* a);
    Node* layer_norm_rows(Node* a, Node* gain, Node* bias, double eps = 1e-5);

    Node* log_op(Node* a);  // elementwise log, inputs clamped at 1e-300
    /// Picks a[r][cols[r]] per row, yielding a rows x 1 column.
    Node* pick_per_row(Node* a, std::vector<int> cols);

    Node* sum_all(Node* a);
    Node* mean_all(Node* a);

    /// Seeds the root gradient (root must be 1 x 1) and runs every node's
    /// backprop in reverse creation order.
    void backward(Node* root);

    size_t node_count() const { return nodes_.size(); }

private:
    std::deque<Node> nodes_;
    Node* make(Mat value, bool needs_grad, std::function<void(Node&)> backprop);
};

/// Numerically stable sigmoid / softplus shared by ops and losses.
double stable_sigmoid(double x);
double stable_softplus(double x);

} // namespace pairrank::nn
