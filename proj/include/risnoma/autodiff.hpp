#pragma once

// Reverse-mode differentiation over dense real tensors.
//
// A Tape owns every node created while evaluating an expression. Nodes are
// appended in evaluation order, so the record list is topologically sorted
// by construction and backward() is a single reverse sweep over it.
//
// Complex quantities are carried as (re, im) pairs of real tensors; see
// complex_ops.hpp. arg(z) is deliberately absent: it is only used to build
// channel features, which are constants during training.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "risnoma/tensor.hpp"

namespace risnoma::grad {

using NodeId = std::size_t;

enum class Op : std::uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    MatMul,
    Transpose,
    ConcatRows,
    Relu,
    Sin,
    Cos,
    Exp,
    Log,
    Square,
    Reciprocal,
    AddBroadcast,  // x (r×c) + b (r×1), b added to every column
    MeanCols,      // r×c -> r×1
    SumAll,        // r×c -> 1×1
    SliceRows,
};

class Tape;

// Lightweight handle to a node on a tape. Valid while the tape is alive.
class Var {
public:
    Var() = default;
    Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

    NodeId id() const noexcept { return id_; }
    Tape& tape() const noexcept { return *tape_; }
    const Tensor& value() const;
    bool requires_grad() const;

private:
    Tape* tape_ = nullptr;
    NodeId id_ = 0;
};

// Gradients of a scalar output with respect to tracked leaves.
class Gradients {
public:
    bool contains(const Var& leaf) const { return grads_.contains(leaf.id()); }
    const Tensor& at(const Var& leaf) const;
    Tensor& at(const Var& leaf);
    std::size_t size() const noexcept { return grads_.size(); }

private:
    friend class Tape;
    std::unordered_map<NodeId, Tensor> grads_;
};

class Tape {
public:
    // With tracking disabled every node is created with requires_grad = false
    // and backward() is rejected.
    explicit Tape(bool tracking = true) : tracking_(tracking) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    bool tracking() const noexcept { return tracking_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const Tensor& value(NodeId id) const { return nodes_.at(id).value; }
    bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }
    Op op(NodeId id) const { return nodes_.at(id).op; }

    // Vector-Jacobian sweep from a 1×1 output.
    Gradients backward(const Var& output) const;

    // Inputs of every ReLU on the tape, in creation order. Used by the
    // finite-difference checker to detect kink crossings.
    std::vector<const Tensor*> relu_inputs() const;

    // Appends a node. Primitive functions below are the intended callers.
    Var push(Op op, std::vector<NodeId> inputs, Tensor value, std::size_t arg = 0);

private:
    struct Node {
        Op op = Op::Leaf;
        bool requires_grad = false;
        std::vector<NodeId> inputs;
        std::size_t arg = 0;  // slice offset for SliceRows
        Tensor value;
    };

    void accumulate_vjp(const Node& node, const Tensor& upstream, std::vector<Tensor>& grads) const;

    bool tracking_;
    std::vector<Node> nodes_;
};

// Primitive set. Shape mismatches raise ConfigurationError naming the shapes.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var concat_rows(std::span<const Var> parts);
Var relu(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var reciprocal(const Var& a);
Var add_broadcast(const Var& x, const Var& column);
Var mean_cols(const Var& a);
Var sum_all(const Var& a);
Var slice_rows(const Var& a, std::size_t begin, std::size_t count);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// Shorthand for a 1×1 constant on the same tape as `like`.
Var scalar_like(const Var& like, double value);
Var divide(const Var& a, const Var& b);

// Builds the scalar of interest on the given tape from the supplied leaves.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

// Max over all leaf entries of |analytic - central difference| /
// max(|analytic|, |central difference|, 1e-12). Entries whose perturbation
// touches a ReLU input lying within 10*step of its kink are skipped.
double finite_diff_check(const ScalarFunction& fn, std::span<const Tensor> leaves, double step);

} // namespace risnoma::grad
