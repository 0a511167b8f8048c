#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qignn {

/// Dense 64-bit real matrix, row-major.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string shape_str(const Matrix& m);

/// Matrix product with a fixed accumulation order: every output entry sums over
/// the inner index in ascending order, so the result for one row never depends
/// on how many other rows are present.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// a^T * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Square block-diagonal operator stored as its dense diagonal blocks.
class BlockDiagonal {
public:
    BlockDiagonal() = default;
    explicit BlockDiagonal(Matrix single) { append(std::move(single)); }

    void append(Matrix block);

    std::size_t size() const { return size_; }
    std::size_t block_count() const { return blocks_.size(); }
    const Matrix& block(std::size_t i) const { return blocks_.at(i); }
    std::size_t offset(std::size_t i) const { return offsets_.at(i); }

    Matrix apply(const Matrix& x) const;
    Matrix apply_transpose(const Matrix& x) const;
    Matrix dense() const;

private:
    std::vector<Matrix> blocks_;
    std::vector<std::size_t> offsets_;
    std::size_t size_ = 0;
};

namespace ad {

class Tape;

/// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = std::numeric_limits<std::size_t>::max();

    bool valid() const { return tape != nullptr; }
    const Matrix& value() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
};

/// Vector-Jacobian product rule. `needs[i]` says whether parent i wants a
/// cotangent; the rule writes it into `out[i]` (left empty otherwise).
using VjpFn = std::function<void(const Matrix& grad, const std::vector<bool>& needs,
                                 std::vector<Matrix>& out)>;

/// Gradients of the leaves reached by one reverse sweep.
class Gradients {
public:
    Gradients() = default;

    /// Gradient for `v`; zeros of the right shape when `v` was not reached.
    Matrix of(Var v) const;
    bool has(Var v) const;

private:
    friend class Tape;
    std::vector<Matrix> grads_;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> shapes_;
};

/// Define-by-run reverse-mode tape. Single-threaded; independent tapes share
/// nothing and may live on different threads.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const { return grad_enabled_; }

    /// Trainable input. Behaves as a constant on a tape with gradients disabled.
    Var leaf(Matrix value);
    Var constant(Matrix value);

    /// Appends an operation. The VJP rule is dropped when no parent needs a gradient.
    Var record(Matrix value, std::vector<Var> parents, VjpFn vjp);

    const Matrix& value(Var v) const;
    bool requires_grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Reverse sweep from a 1x1 loss.
    Gradients backward(Var loss) const;

    /// Reverse sweep seeded with several (output, cotangent) pairs at once.
    Gradients backward(std::span<const std::pair<Var, Matrix>> seeds) const;

    /// Cotangent of `wrt` given `cotangent` at `output`, propagating only along
    /// nodes that depend on `wrt`.
    Matrix vjp(Var output, const Matrix& cotangent, Var wrt) const;

private:
    struct Node {
        Matrix value;
        std::vector<std::size_t> parents;
        VjpFn vjp;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    void check(Var v) const;
    void sweep(std::vector<Matrix>& grads, std::size_t top, const std::vector<char>* allowed) const;

    std::vector<Node> nodes_;
    bool grad_enabled_;
};

// Differentiable operations. All operands must live on the same tape.

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);
Var tanh(Var a);
Var relu(Var a);
Var sum(Var a);
Var sum_rows(Var a);
Var sum_cols(Var a);
/// Row-wise softmax. With a mask (same shape, nonzero = keep) masked entries get
/// probability exactly zero; each row must keep at least one entry.
Var softmax_rows(Var a, const Matrix* mask = nullptr);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// a / s for a 1x1 tensor s.
Var divide(Var a, Var s);
/// Elementwise product with a constant matrix.
Var mul_const(Var a, const Matrix& c);
/// Block-diagonal propagation P * a with P constant.
Var propagate(const BlockDiagonal& p, Var a);
/// Mean cross-entropy of row-wise logits against class indices (1x1).
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace ad
}  // namespace qignn
