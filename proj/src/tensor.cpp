#include "qignn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qignn {

std::string shape_str(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions differ (" + shape_str(a) + " * " + shape_str(b) + ")");
    }
    const Eigen::Index n = a.rows(), inner = a.cols(), m = b.cols();
    Matrix c = Matrix::Zero(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
        double* ci = c.data() + i * m;
        const double* ai = a.data() + i * inner;
        for (Eigen::Index k = 0; k < inner; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.data() + k * m;
            for (Eigen::Index j = 0; j < m; ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: inner dimensions differ (" + shape_str(a) + " * " + shape_str(b) + "^T)");
    }
    Matrix bt = b.transpose();
    return matmul(a, bt);
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("matmul_tn: inner dimensions differ (" + shape_str(a) + "^T * " + shape_str(b) + ")");
    }
    Matrix at = a.transpose();
    return matmul(at, b);
}

void BlockDiagonal::append(Matrix block) {
    if (block.rows() != block.cols()) throw ShapeError("BlockDiagonal: block must be square, got " + shape_str(block));
    offsets_.push_back(size_);
    size_ += static_cast<std::size_t>(block.rows());
    blocks_.push_back(std::move(block));
}

Matrix BlockDiagonal::apply(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != size_) {
        throw ShapeError("BlockDiagonal::apply: operand has " + std::to_string(x.rows()) + " rows, expected " +
                         std::to_string(size_));
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto n = blocks_[b].rows();
        const auto off = static_cast<Eigen::Index>(offsets_[b]);
        out.middleRows(off, n) = matmul(blocks_[b], x.middleRows(off, n));
    }
    return out;
}

Matrix BlockDiagonal::apply_transpose(const Matrix& x) const {
    if (static_cast<std::size_t>(x.rows()) != size_) {
        throw ShapeError("BlockDiagonal::apply_transpose: row mismatch");
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto n = blocks_[b].rows();
        const auto off = static_cast<Eigen::Index>(offsets_[b]);
        out.middleRows(off, n) = matmul_tn(blocks_[b], x.middleRows(off, n));
    }
    return out;
}

Matrix BlockDiagonal::dense() const {
    const auto n = static_cast<Eigen::Index>(size_);
    Matrix d = Matrix::Zero(n, n);
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const auto off = static_cast<Eigen::Index>(offsets_[b]);
        d.block(off, off, blocks_[b].rows(), blocks_[b].cols()) = blocks_[b];
    }
    return d;
}

namespace ad {

const Matrix& Var::value() const {
    if (!tape) throw std::logic_error("Var::value on an unbound variable");
    return tape->value(*this);
}

Matrix Gradients::of(Var v) const {
    if (v.id < grads_.size() && grads_[v.id].size() > 0) return grads_[v.id];
    if (v.id < shapes_.size()) return Matrix::Zero(shapes_[v.id].first, shapes_[v.id].second);
    return Matrix::Zero(v.rows(), v.cols());
}

bool Gradients::has(Var v) const { return v.id < grads_.size() && grads_[v.id].size() > 0; }

void Tape::check(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) throw std::logic_error("variable does not belong to this tape");
}

Var Tape::leaf(Matrix value) {
    if (!value.allFinite()) throw NumericError("leaf value contains non-finite entries");
    Node n;
    n.value = std::move(value);
    n.requires_grad = grad_enabled_;
    n.is_leaf = true;
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
    if (!value.allFinite()) throw NumericError("constant contains non-finite entries");
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::vector<Var> parents, VjpFn vjp) {
    if (!value.allFinite()) throw NumericError("operation produced non-finite entries");
    Node n;
    n.value = std::move(value);
    n.parents.reserve(parents.size());
    for (const auto& p : parents) {
        check(p);
        n.parents.push_back(p.id);
        n.requires_grad = n.requires_grad || nodes_[p.id].requires_grad;
    }
    if (n.requires_grad) n.vjp = std::move(vjp);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

const Matrix& Tape::value(Var v) const {
    check(v);
    return nodes_[v.id].value;
}

bool Tape::requires_grad(Var v) const {
    check(v);
    return nodes_[v.id].requires_grad;
}

void Tape::sweep(std::vector<Matrix>& grads, std::size_t top, const std::vector<char>* allowed) const {
    std::vector<bool> needs;
    std::vector<Matrix> out;
    for (std::size_t i = top + 1; i-- > 0;) {
        const Node& node = nodes_[i];
        if (grads[i].size() == 0 || !node.vjp) continue;
        needs.assign(node.parents.size(), false);
        bool any = false;
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            const std::size_t p = node.parents[k];
            const bool want = nodes_[p].requires_grad && (allowed == nullptr || (*allowed)[p]);
            needs[k] = want;
            any = any || want;
        }
        if (any) {
            out.assign(node.parents.size(), Matrix());
            node.vjp(grads[i], needs, out);
            for (std::size_t k = 0; k < node.parents.size(); ++k) {
                if (!needs[k]) continue;
                const std::size_t p = node.parents[k];
                if (out[k].rows() != nodes_[p].value.rows() || out[k].cols() != nodes_[p].value.cols()) {
                    throw std::logic_error("vjp rule returned a cotangent of the wrong shape");
                }
                if (grads[p].size() == 0) {
                    grads[p] = std::move(out[k]);
                } else {
                    grads[p] += out[k];
                }
            }
        }
        if (!node.is_leaf) grads[i] = Matrix();
    }
}

Gradients Tape::backward(Var loss) const {
    check(loss);
    if (nodes_[loss.id].value.rows() != 1 || nodes_[loss.id].value.cols() != 1) {
        throw ShapeError("backward: loss must be 1x1, got " + shape_str(nodes_[loss.id].value));
    }
    const std::pair<Var, Matrix> seed{loss, Matrix::Ones(1, 1)};
    return backward(std::span<const std::pair<Var, Matrix>>(&seed, 1));
}

Gradients Tape::backward(std::span<const std::pair<Var, Matrix>> seeds) const {
    Gradients g;
    g.grads_.assign(nodes_.size(), Matrix());
    g.shapes_.reserve(nodes_.size());
    for (const auto& n : nodes_) g.shapes_.emplace_back(n.value.rows(), n.value.cols());
    std::size_t top = 0;
    bool any = false;
    for (const auto& [v, cot] : seeds) {
        check(v);
        if (cot.rows() != nodes_[v.id].value.rows() || cot.cols() != nodes_[v.id].value.cols()) {
            throw ShapeError("backward: seed cotangent shape mismatch");
        }
        if (!nodes_[v.id].requires_grad) continue;
        if (g.grads_[v.id].size() == 0) {
            g.grads_[v.id] = cot;
        } else {
            g.grads_[v.id] += cot;
        }
        top = std::max(top, v.id);
        any = true;
    }
    if (any) sweep(g.grads_, top, nullptr);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].is_leaf) g.grads_[i] = Matrix();
    }
    return g;
}

Matrix Tape::vjp(Var output, const Matrix& cotangent, Var wrt) const {
    check(output);
    check(wrt);
    const auto& ov = nodes_[output.id].value;
    if (cotangent.rows() != ov.rows() || cotangent.cols() != ov.cols()) {
        throw ShapeError("vjp: cotangent shape mismatch");
    }
    const auto& wv = nodes_[wrt.id].value;
    if (output.id < wrt.id || !nodes_[wrt.id].requires_grad) return Matrix::Zero(wv.rows(), wv.cols());

    std::vector<char> allowed(nodes_.size(), 0);
    allowed[wrt.id] = 1;
    for (std::size_t i = wrt.id + 1; i <= output.id; ++i) {
        for (auto p : nodes_[i].parents) {
            if (allowed[p]) {
                allowed[i] = 1;
                break;
            }
        }
    }
    if (!allowed[output.id]) return Matrix::Zero(wv.rows(), wv.cols());

    std::vector<Matrix> grads(output.id + 1);
    grads[output.id] = cotangent;
    // Keep the cotangent at `wrt` even when it is an interior node.
    std::vector<Matrix> keep;
    std::vector<bool> needs;
    std::vector<Matrix> out;
    for (std::size_t i = output.id + 1; i-- > wrt.id + 1;) {
        const Node& node = nodes_[i];
        if (!allowed[i] || grads[i].size() == 0 || !node.vjp) continue;
        needs.assign(node.parents.size(), false);
        bool any = false;
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            needs[k] = allowed[node.parents[k]] != 0;
            any = any || needs[k];
        }
        if (!any) continue;
        out.assign(node.parents.size(), Matrix());
        node.vjp(grads[i], needs, out);
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            if (!needs[k]) continue;
            const std::size_t p = node.parents[k];
            if (grads[p].size() == 0) {
                grads[p] = std::move(out[k]);
            } else {
                grads[p] += out[k];
            }
        }
        grads[i] = Matrix();
    }
    if (grads[wrt.id].size() == 0) return Matrix::Zero(wv.rows(), wv.cols());
    return grads[wrt.id];
}

namespace {

Tape& tape_of(std::initializer_list<Var> vs) {
    Tape* t = nullptr;
    for (const auto& v : vs) {
        if (!v.valid()) throw std::logic_error("operation on an unbound variable");
        if (t && v.tape != t) throw std::logic_error("operands live on different tapes");
        t = v.tape;
    }
    return *t;
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": shape mismatch (" + shape_str(a) + " vs " + shape_str(b) + ")");
    }
}

}  // namespace

Var matmul(Var a, Var b) {
    Tape& t = tape_of({a, b});
    Matrix av = a.value(), bv = b.value();
    Matrix out = qignn::matmul(av, bv);
    return t.record(std::move(out), {a, b},
                    [av = std::move(av), bv = std::move(bv)](const Matrix& g, const std::vector<bool>& needs,
                                                             std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = qignn::matmul_nt(g, bv);
                        if (needs[1]) o[1] = qignn::matmul_tn(av, g);
                    });
}

Var matmul_nt(Var a, Var b) {
    Tape& t = tape_of({a, b});
    Matrix av = a.value(), bv = b.value();
    Matrix out = qignn::matmul_nt(av, bv);
    return t.record(std::move(out), {a, b},
                    [av = std::move(av), bv = std::move(bv)](const Matrix& g, const std::vector<bool>& needs,
                                                             std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = qignn::matmul(g, bv);
                        if (needs[1]) o[1] = qignn::matmul_tn(g, av);
                    });
}

Var transpose(Var a) {
    Tape& t = tape_of({a});
    Matrix out = a.value().transpose();
    return t.record(std::move(out), {a}, [](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = g.transpose();
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of({a, b});
    require_same_shape(a.value(), b.value(), "add");
    Matrix out = a.value() + b.value();
    return t.record(std::move(out), {a, b},
                    [](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = g;
                        if (needs[1]) o[1] = g;
                    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of({a, b});
    require_same_shape(a.value(), b.value(), "sub");
    Matrix out = a.value() - b.value();
    return t.record(std::move(out), {a, b},
                    [](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = g;
                        if (needs[1]) o[1] = -g;
                    });
}

Var mul(Var a, Var b) {
    Tape& t = tape_of({a, b});
    require_same_shape(a.value(), b.value(), "mul");
    Matrix av = a.value(), bv = b.value();
    Matrix out = av.cwiseProduct(bv);
    return t.record(std::move(out), {a, b},
                    [av = std::move(av), bv = std::move(bv)](const Matrix& g, const std::vector<bool>& needs,
                                                             std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = g.cwiseProduct(bv);
                        if (needs[1]) o[1] = g.cwiseProduct(av);
                    });
}

Var scale(Var a, double s) {
    Tape& t = tape_of({a});
    Matrix out = a.value() * s;
    return t.record(std::move(out), {a}, [s](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = g * s;
    });
}

Var add_row(Var a, Var row) {
    Tape& t = tape_of({a, row});
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ShapeError("add_row: expected 1x" + std::to_string(av.cols()) + " row, got " + shape_str(rv));
    }
    Matrix out = av.rowwise() + rv.row(0);
    return t.record(std::move(out), {a, row},
                    [](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = g;
                        if (needs[1]) o[1] = g.colwise().sum();
                    });
}

Var tanh(Var a) {
    Tape& t = tape_of({a});
    Matrix y = a.value().unaryExpr([](double x) { return std::tanh(x); });
    Matrix saved = y;
    return t.record(std::move(y), {a},
                    [y = std::move(saved)](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
                        o[0] = g.array() * (1.0 - y.array().square());
                    });
}

Var relu(Var a) {
    Tape& t = tape_of({a});
    Matrix x = a.value();
    Matrix y = x.cwiseMax(0.0);
    return t.record(std::move(y), {a},
                    [x = std::move(x)](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
                        o[0] = (x.array() > 0.0).select(g, 0.0);
                    });
}

Var sum(Var a) {
    Tape& t = tape_of({a});
    const auto r = a.rows(), c = a.cols();
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t.record(std::move(out), {a}, [r, c](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = Matrix::Constant(r, c, g(0, 0));
    });
}

Var sum_rows(Var a) {
    Tape& t = tape_of({a});
    const auto r = a.rows();
    Matrix out = a.value().colwise().sum();
    return t.record(std::move(out), {a}, [r](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = g.replicate(r, 1);
    });
}

Var sum_cols(Var a) {
    Tape& t = tape_of({a});
    const auto c = a.cols();
    Matrix out = a.value().rowwise().sum();
    return t.record(std::move(out), {a}, [c](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = g.replicate(1, c);
    });
}

Var softmax_rows(Var a, const Matrix* mask) {
    Tape& t = tape_of({a});
    const Matrix& x = a.value();
    if (mask) require_same_shape(x, *mask, "softmax_rows mask");
    Matrix p = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (!mask || (*mask)(i, j) != 0.0) mx = std::max(mx, x(i, j));
        }
        if (!std::isfinite(mx)) throw ShapeError("softmax_rows: row " + std::to_string(i) + " is fully masked");
        double z = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (!mask || (*mask)(i, j) != 0.0) {
                p(i, j) = std::exp(x(i, j) - mx);
                z += p(i, j);
            }
        }
        p.row(i) /= z;
    }
    Matrix saved = p;
    return t.record(std::move(p), {a},
                    [p = std::move(saved)](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
                        Matrix gp = g.cwiseProduct(p);
                        Vector dots = gp.rowwise().sum();
                        o[0] = gp - p.cwiseProduct(dots.replicate(1, p.cols()));
                    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no operands");
    Tape& t = tape_of({parts[0]});
    const auto r = parts[0].rows();
    Eigen::Index total = 0;
    std::vector<Eigen::Index> widths;
    for (const auto& v : parts) {
        tape_of({parts[0], v});
        if (v.rows() != r) throw ShapeError("concat_cols: row counts differ");
        widths.push_back(v.cols());
        total += v.cols();
    }
    Matrix out(r, total);
    Eigen::Index off = 0;
    for (const auto& v : parts) {
        out.middleCols(off, v.cols()) = v.value();
        off += v.cols();
    }
    return t.record(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                    [widths](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        Eigen::Index off = 0;
                        for (std::size_t k = 0; k < widths.size(); ++k) {
                            if (needs[k]) o[k] = g.middleCols(off, widths[k]);
                            off += widths[k];
                        }
                    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no operands");
    Tape& t = tape_of({parts[0]});
    const auto c = parts[0].cols();
    Eigen::Index total = 0;
    std::vector<Eigen::Index> heights;
    for (const auto& v : parts) {
        tape_of({parts[0], v});
        if (v.cols() != c) throw ShapeError("concat_rows: column counts differ");
        heights.push_back(v.rows());
        total += v.rows();
    }
    Matrix out(total, c);
    Eigen::Index off = 0;
    for (const auto& v : parts) {
        out.middleRows(off, v.rows()) = v.value();
        off += v.rows();
    }
    return t.record(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                    [heights](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        Eigen::Index off = 0;
                        for (std::size_t k = 0; k < heights.size(); ++k) {
                            if (needs[k]) o[k] = g.middleRows(off, heights[k]);
                            off += heights[k];
                        }
                    });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
    Tape& t = tape_of({a});
    const auto r = a.rows(), c = a.cols();
    if (begin < 0 || count < 0 || begin + count > r) throw ShapeError("slice_rows: range out of bounds");
    Matrix out = a.value().middleRows(begin, count);
    return t.record(std::move(out), {a},
                    [r, c, begin, count](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
                        o[0] = Matrix::Zero(r, c);
                        o[0].middleRows(begin, count) = g;
                    });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
    Tape& t = tape_of({a});
    const auto r = a.rows(), c = a.cols();
    if (begin < 0 || count < 0 || begin + count > c) throw ShapeError("slice_cols: range out of bounds");
    Matrix out = a.value().middleCols(begin, count);
    return t.record(std::move(out), {a},
                    [r, c, begin, count](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
                        o[0] = Matrix::Zero(r, c);
                        o[0].middleCols(begin, count) = g;
                    });
}

Var divide(Var a, Var s) {
    Tape& t = tape_of({a, s});
    if (s.rows() != 1 || s.cols() != 1) throw ShapeError("divide: divisor must be 1x1");
    const double sv = s.value()(0, 0);
    if (sv == 0.0) throw NumericError("divide: division by zero");
    Matrix av = a.value();
    Matrix out = av / sv;
    return t.record(std::move(out), {a, s},
                    [av = std::move(av), sv](const Matrix& g, const std::vector<bool>& needs, std::vector<Matrix>& o) {
                        if (needs[0]) o[0] = g / sv;
                        if (needs[1]) {
                            o[1] = Matrix(1, 1);
                            o[1](0, 0) = -g.cwiseProduct(av).sum() / (sv * sv);
                        }
                    });
}

Var mul_const(Var a, const Matrix& c) {
    Tape& t = tape_of({a});
    require_same_shape(a.value(), c, "mul_const");
    Matrix out = a.value().cwiseProduct(c);
    return t.record(std::move(out), {a}, [c](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = g.cwiseProduct(c);
    });
}

Var propagate(const BlockDiagonal& p, Var a) {
    Tape& t = tape_of({a});
    Matrix out = p.apply(a.value());
    // The operator is referenced, not copied: it must outlive every sweep over this tape.
    const BlockDiagonal* pp = &p;
    return t.record(std::move(out), {a}, [pp](const Matrix& g, const std::vector<bool>&, std::vector<Matrix>& o) {
        o[0] = pp->apply_transpose(g);
    });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
    Tape& t = tape_of({logits});
    const Matrix& x = logits.value();
    if (static_cast<std::size_t>(x.rows()) != labels.size() || x.rows() == 0) {
        throw ShapeError("cross_entropy: one label per logit row required");
    }
    Matrix prob(x.rows(), x.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= x.cols()) throw ShapeError("cross_entropy: label out of range");
        const double mx = x.row(i).maxCoeff();
        double z = 0.0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) z += std::exp(x(i, j) - mx);
        const double lse = mx + std::log(z);
        total += lse - x(i, y);
        for (Eigen::Index j = 0; j < x.cols(); ++j) prob(i, j) = std::exp(x(i, j) - lse);
    }
    const double n = static_cast<double>(x.rows());
    Matrix out(1, 1);
    out(0, 0) = total / n;
    std::vector<int> ys(labels.begin(), labels.end());
    return t.record(std::move(out), {logits},
                    [prob = std::move(prob), ys = std::move(ys), n](const Matrix& g, const std::vector<bool>&,
                                                                     std::vector<Matrix>& o) {
                        Matrix d = prob;
                        for (std::size_t i = 0; i < ys.size(); ++i) d(static_cast<Eigen::Index>(i), ys[i]) -= 1.0;
                        o[0] = d * (g(0, 0) / n);
                    });
}

}  // namespace ad
}  // namespace qignn
