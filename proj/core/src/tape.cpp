#include "pairrank/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "pairrank/errors.hpp"

namespace pairrank::nn {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

double stable_softplus(double x) {
    // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

Tape::Node* Tape::make(Mat value, bool needs_grad, std::function<void(Node&)> backprop) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backprop = std::move(backprop);
    if (needs_grad) n.grad = Mat::zeros_like(n.value);
    return &n;
}

Tape::Node* Tape::constant(Mat v) { return make(std::move(v), false, nullptr); }

Tape::Node* Tape::param(Parameter& p) {
    return make(p.value, true, [&p](Node& n) {
        for (size_t i = 0; i < n.grad.w.size(); ++i) p.grad.w[i] += n.grad.w[i];
    });
}

Tape::Node* Tape::embedding(Parameter& table, const std::vector<int>& ids) {
    const int width = table.value.cols;
    Mat out(static_cast<int>(ids.size()), width);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= table.value.rows) {
            throw RuntimeFailure("embedding: id out of range in table \"" + table.name + "\"");
        }
        for (int c = 0; c < width; ++c) {
            out.at(static_cast<int>(i), c) = table.value.at(ids[i], c);
        }
    }
    return make(std::move(out), true, [&table, ids, width](Node& n) {
        for (size_t i = 0; i < ids.size(); ++i) {
            for (int c = 0; c < width; ++c) {
                table.grad.at(ids[i], c) += n.grad.at(static_cast<int>(i), c);
            }
        }
    });
}

Tape::Node* Tape::select_rows(Node* a, std::vector<int> row_indices) {
    Mat out(static_cast<int>(row_indices.size()), a->value.cols);
    for (size_t i = 0; i < row_indices.size(); ++i) {
        const int r = row_indices[i];
        if (r < 0 || r >= a->value.rows) throw RuntimeFailure("select_rows: index out of range");
        for (int c = 0; c < a->value.cols; ++c) out.at(static_cast<int>(i), c) = a->value.at(r, c);
    }
    return make(std::move(out), a->needs_grad, [a, idx = std::move(row_indices)](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < idx.size(); ++i) {
            for (int c = 0; c < a->value.cols; ++c) {
                a->grad.at(idx[i], c) += n.grad.at(static_cast<int>(i), c);
            }
        }
    });
}

Tape::Node* Tape::slice_cols(Node* a, int start, int count) {
    if (start < 0 || count <= 0 || start + count > a->value.cols) {
        throw RuntimeFailure("slice_cols: range out of bounds");
    }
    Mat out(a->value.rows, count);
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < count; ++c) out.at(r, c) = a->value.at(r, start + c);
    }
    return make(std::move(out), a->needs_grad, [a, start, count](Node& n) {
        if (!a->needs_grad) return;
        for (int r = 0; r < n.grad.rows; ++r) {
            for (int c = 0; c < count; ++c) a->grad.at(r, start + c) += n.grad.at(r, c);
        }
    });
}

Tape::Node* Tape::concat_cols(const std::vector<Node*>& parts) {
    if (parts.empty()) throw RuntimeFailure("concat_cols: no parts");
    const int rows = parts.front()->value.rows;
    int cols = 0;
    bool needs = false;
    for (Node* p : parts) {
        if (p->value.rows != rows) throw RuntimeFailure("concat_cols: row mismatch");
        cols += p->value.cols;
        needs = needs || p->needs_grad;
    }
    Mat out(rows, cols);
    int off = 0;
    for (Node* p : parts) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < p->value.cols; ++c) out.at(r, off + c) = p->value.at(r, c);
        }
        off += p->value.cols;
    }
    return make(std::move(out), needs, [parts](Node& n) {
        int off2 = 0;
        for (Node* p : parts) {
            if (p->needs_grad) {
                for (int r = 0; r < p->value.rows; ++r) {
                    for (int c = 0; c < p->value.cols; ++c) {
                        p->grad.at(r, c) += n.grad.at(r, off2 + c);
                    }
                }
            }
            off2 += p->value.cols;
        }
    });
}

Tape::Node* Tape::transpose(Node* a) {
    Mat out(a->value.cols, a->value.rows);
    for (int r = 0; r < a->value.rows; ++r) {
        for (int c = 0; c < a->value.cols; ++c) out.at(c, r) = a->value.at(r, c);
    }
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (int r = 0; r < n.grad.rows; ++r) {
            for (int c = 0; c < n.grad.cols; ++c) a->grad.at(c, r) += n.grad.at(r, c);
        }
    });
}

Tape::Node* Tape::matmul(Node* a, Node* b) {
    if (a->value.cols != b->value.rows) throw RuntimeFailure("matmul: shape mismatch");
    const int n = a->value.rows, k = a->value.cols, m = b->value.cols;
    Mat out(n, m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < k; ++j) {
            const double av = a->value.at(i, j);
            if (av == 0.0) continue;
            for (int c = 0; c < m; ++c) out.at(i, c) += av * b->value.at(j, c);
        }
    }
    return make(std::move(out), a->needs_grad || b->needs_grad, [a, b, n, k, m](Node& nd) {
        if (a->needs_grad) {
            // dA = dC * B^T
            for (int i = 0; i < n; ++i) {
                for (int c = 0; c < m; ++c) {
                    const double g = nd.grad.at(i, c);
                    if (g == 0.0) continue;
                    for (int j = 0; j < k; ++j) a->grad.at(i, j) += g * b->value.at(j, c);
                }
            }
        }
        if (b->needs_grad) {
            // dB = A^T * dC
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < k; ++j) {
                    const double av = a->value.at(i, j);
                    if (av == 0.0) continue;
                    for (int c = 0; c < m; ++c) b->grad.at(j, c) += av * nd.grad.at(i, c);
                }
            }
        }
    });
}

Tape::Node* Tape::add(Node* a, Node* b) {
    if (!a->value.same_shape(b->value)) throw RuntimeFailure("add: shape mismatch");
    Mat out = a->value;
    for (size_t i = 0; i < out.w.size(); ++i) out.w[i] += b->value.w[i];
    return make(std::move(out), a->needs_grad || b->needs_grad, [a, b](Node& n) {
        if (a->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += n.grad.w[i];
        }
        if (b->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) b->grad.w[i] += n.grad.w[i];
        }
    });
}

Tape::Node* Tape::sub(Node* a, Node* b) {
    if (!a->value.same_shape(b->value)) throw RuntimeFailure("sub: shape mismatch");
    Mat out = a->value;
    for (size_t i = 0; i < out.w.size(); ++i) out.w[i] -= b->value.w[i];
    return make(std::move(out), a->needs_grad || b->needs_grad, [a, b](Node& n) {
        if (a->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += n.grad.w[i];
        }
        if (b->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) b->grad.w[i] -= n.grad.w[i];
        }
    });
}

Tape::Node* Tape::add_row(Node* a, Node* row) {
    if (row->value.rows != 1 || row->value.cols != a->value.cols) {
        throw RuntimeFailure("add_row: row must be 1 x cols(a)");
    }
    Mat out = a->value;
    for (int r = 0; r < out.rows; ++r) {
        for (int c = 0; c < out.cols; ++c) out.at(r, c) += row->value.at(0, c);
    }
    return make(std::move(out), a->needs_grad || row->needs_grad, [a, row](Node& n) {
        if (a->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += n.grad.w[i];
        }
        if (row->needs_grad) {
            for (int r = 0; r < n.grad.rows; ++r) {
                for (int c = 0; c < n.grad.cols; ++c) row->grad.at(0, c) += n.grad.at(r, c);
            }
        }
    });
}

Tape::Node* Tape::hadamard(Node* a, Node* b) {
    if (!a->value.same_shape(b->value)) throw RuntimeFailure("hadamard: shape mismatch");
    Mat out = a->value;
    for (size_t i = 0; i < out.w.size(); ++i) out.w[i] *= b->value.w[i];
    return make(std::move(out), a->needs_grad || b->needs_grad, [a, b](Node& n) {
        if (a->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += n.grad.w[i] * b->value.w[i];
        }
        if (b->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) b->grad.w[i] += n.grad.w[i] * a->value.w[i];
        }
    });
}

Tape::Node* Tape::scale(Node* a, double s) {
    Mat out = a->value;
    for (auto& v : out.w) v *= s;
    return make(std::move(out), a->needs_grad, [a, s](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += s * n.grad.w[i];
    });
}

Tape::Node* Tape::add_const(Node* a, double c) {
    Mat out = a->value;
    for (auto& v : out.w) v += c;
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += n.grad.w[i];
    });
}

Tape::Node* Tape::scale_by(Node* a, Node* scalar) {
    if (scalar->value.rows != 1 || scalar->value.cols != 1) {
        throw RuntimeFailure("scale_by: scalar must be 1 x 1");
    }
    const double s = scalar->value.at(0, 0);
    Mat out = a->value;
    for (auto& v : out.w) v *= s;
    return make(std::move(out), a->needs_grad || scalar->needs_grad, [a, scalar, s](Node& n) {
        if (a->needs_grad) {
            for (size_t i = 0; i < n.grad.w.size(); ++i) a->grad.w[i] += s * n.grad.w[i];
        }
        if (scalar->needs_grad) {
            double acc = 0.0;
            for (size_t i = 0; i < n.grad.w.size(); ++i) acc += n.grad.w[i] * a->value.w[i];
            scalar->grad.at(0, 0) += acc;
        }
    });
}

Tape::Node* Tape::tanh_op(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = std::tanh(v);
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            const double y = n.value.w[i];
            a->grad.w[i] += n.grad.w[i] * (1.0 - y * y);
        }
    });
}

Tape::Node* Tape::relu(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = std::max(v, 0.0);
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            if (a->value.w[i] > 0.0) a->grad.w[i] += n.grad.w[i];
        }
    });
}

Tape::Node* Tape::sigmoid(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = stable_sigmoid(v);
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            const double y = n.value.w[i];
            a->grad.w[i] += n.grad.w[i] * y * (1.0 - y);
        }
    });
}

Tape::Node* Tape::softplus(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = stable_softplus(v);
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            a->grad.w[i] += n.grad.w[i] * stable_sigmoid(a->value.w[i]);
        }
    });
}

Tape::Node* Tape::sqrt_op(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) {
        if (v < 0.0) throw RuntimeFailure("sqrt_op: negative input");
        v = std::sqrt(v);
    }
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            a->grad.w[i] += n.grad.w[i] * 0.5 / std::max(n.value.w[i], 1e-12);
        }
    });
}

Tape::Node* Tape::reciprocal(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = 1.0 / v;
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            const double y = n.value.w[i];
            a->grad.w[i] += -n.grad.w[i] * y * y;
        }
    });
}

Tape::Node* Tape::softmax_rows(Node* a) {
    Mat out = a->value;
    for (int r = 0; r < out.rows; ++r) {
        double mx = out.at(r, 0);
        for (int c = 1; c < out.cols; ++c) mx = std::max(mx, out.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < out.cols; ++c) {
            const double e = std::exp(out.at(r, c) - mx);
            out.at(r, c) = e;
            sum += e;
        }
        for (int c = 0; c < out.cols; ++c) out.at(r, c) /= sum;
    }
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (int r = 0; r < n.value.rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < n.value.cols; ++c) dot += n.grad.at(r, c) * n.value.at(r, c);
            for (int c = 0; c < n.value.cols; ++c) {
                a->grad.at(r, c) += n.value.at(r, c) * (n.grad.at(r, c) - dot);
            }
        }
    });
}

Tape::Node* Tape::layer_norm_rows(Node* a, Node* gain, Node* bias, double eps) {
    const int cols = a->value.cols;
    if (gain->value.rows != 1 || gain->value.cols != cols || bias->value.rows != 1 ||
        bias->value.cols != cols) {
        throw RuntimeFailure("layer_norm_rows: gain/bias must be 1 x cols");
    }
    Mat out(a->value.rows, cols);
    Mat xhat(a->value.rows, cols);
    std::vector<double> inv_std(a->value.rows);
    for (int r = 0; r < a->value.rows; ++r) {
        double mean = 0.0;
        for (int c = 0; c < cols; ++c) mean += a->value.at(r, c);
        mean /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double d = a->value.at(r, c) - mean;
            var += d * d;
        }
        var /= cols;
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std[r] = istd;
        for (int c = 0; c < cols; ++c) {
            const double xh = (a->value.at(r, c) - mean) * istd;
            xhat.at(r, c) = xh;
            out.at(r, c) = xh * gain->value.at(0, c) + bias->value.at(0, c);
        }
    }
    const bool needs = a->needs_grad || gain->needs_grad || bias->needs_grad;
    return make(std::move(out), needs,
                [a, gain, bias, xh = std::move(xhat), istd = std::move(inv_std), cols](Node& n) {
        for (int r = 0; r < n.value.rows; ++r) {
            if (gain->needs_grad || bias->needs_grad) {
                for (int c = 0; c < cols; ++c) {
                    if (gain->needs_grad) gain->grad.at(0, c) += n.grad.at(r, c) * xh.at(r, c);
                    if (bias->needs_grad) bias->grad.at(0, c) += n.grad.at(r, c);
                }
            }
            if (a->needs_grad) {
                double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
                for (int c = 0; c < cols; ++c) {
                    const double dxh = n.grad.at(r, c) * gain->value.at(0, c);
                    mean_dxhat += dxh;
                    mean_dxhat_xhat += dxh * xh.at(r, c);
                }
                mean_dxhat /= cols;
                mean_dxhat_xhat /= cols;
                for (int c = 0; c < cols; ++c) {
                    const double dxh = n.grad.at(r, c) * gain->value.at(0, c);
                    a->grad.at(r, c) +=
                        istd[r] * (dxh - mean_dxhat - xh.at(r, c) * mean_dxhat_xhat);
                }
            }
        }
    });
}

Tape::Node* Tape::log_op(Node* a) {
    Mat out = a->value;
    for (auto& v : out.w) v = std::log(std::max(v, 1e-300));
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        for (size_t i = 0; i < n.grad.w.size(); ++i) {
            a->grad.w[i] += n.grad.w[i] / std::max(a->value.w[i], 1e-300);
        }
    });
}

Tape::Node* Tape::pick_per_row(Node* a, std::vector<int> cols) {
    if (static_cast<int>(cols.size()) != a->value.rows) {
        throw RuntimeFailure("pick_per_row: one column index per row required");
    }
    Mat out(a->value.rows, 1);
    for (int r = 0; r < a->value.rows; ++r) {
        if (cols[r] < 0 || cols[r] >= a->value.cols) {
            throw RuntimeFailure("pick_per_row: column out of range");
        }
        out.at(r, 0) = a->value.at(r, cols[r]);
    }
    return make(std::move(out), a->needs_grad, [a, cs = std::move(cols)](Node& n) {
        if (!a->needs_grad) return;
        for (int r = 0; r < n.grad.rows; ++r) a->grad.at(r, cs[r]) += n.grad.at(r, 0);
    });
}

Tape::Node* Tape::sum_all(Node* a) {
    double s = 0.0;
    for (double v : a->value.w) s += v;
    Mat out(1, 1);
    out.at(0, 0) = s;
    return make(std::move(out), a->needs_grad, [a](Node& n) {
        if (!a->needs_grad) return;
        const double g = n.grad.at(0, 0);
        for (auto& v : a->grad.w) v += g;
    });
}

Tape::Node* Tape::mean_all(Node* a) {
    Node* s = sum_all(a);
    return scale(s, 1.0 / static_cast<double>(a->value.size()));
}

void Tape::backward(Node* root) {
    if (root->value.rows != 1 || root->value.cols != 1) {
        throw RuntimeFailure("backward: root must be a scalar node");
    }
    if (!root->needs_grad) return;
    root->grad.at(0, 0) = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->needs_grad && it->backprop) it->backprop(*it);
    }
}

} // namespace pairrank::nn
