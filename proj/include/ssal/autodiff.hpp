#pragma once

#include "ssal/core.hpp"

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssal::ad {

/// A named trainable tensor. Lives outside any tape; tapes bind it as a leaf.
struct Parameter {
    std::string name;
    Matrix value;
    /// Decoupled weight decay applies (true for weight matrices only).
    bool decay = true;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const;

    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

enum class Op {
    leaf,
    constant,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    matmul,
    transpose,
    sigmoid,
    tanh,
    relu,
    softmax,
    sum,
    mean,
    mse,
    pow,
    sqrt,
    concat,
    slice,
    flatten,
    repeat_rows,
    conv1d_causal,
    lag_dot,
    layer_norm,
    custom,
};

const char* op_name(Op op);

struct Node {
    using Backward = std::function<void(Tape&, int self)>;

    Matrix value;
    Matrix grad;
    Op op = Op::constant;
    std::vector<int> parents;
    Backward backward;
    bool requires_grad = false;
};

/// Which parameters a tape differentiates with respect to.
///   all      - every bound Parameter (training, gradient checks)
///   explicit_only - only those registered through track() (frozen-model interpretation)
enum class TrackPolicy { all, explicit_only };

/// Append-only record of one forward computation.
class Tape {
public:
    explicit Tape(TrackPolicy policy = TrackPolicy::all) : policy_(policy) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf bound to `p`. Binding the same parameter twice returns the same node.
    Var param(const Parameter& p);
    Var constant(Matrix value);
    Var scalar_constant(double v);

    void track(const Parameter& p) { tracked_.push_back(&p); }

    /// Reverse accumulation from a 1x1 node. Throws if the reachable graph has a cycle.
    void backward(Var loss);

    /// Gradient w.r.t. a bound parameter after backward(); zero if unused.
    Matrix gradient(const Parameter& p) const;
    const Matrix& grad(Var v) const;

    // Low-level access, used by op implementations.
    int push(Node node);
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return nodes_.size(); }

    template <typename Expr>
    void accumulate(int id, const Expr& contribution)
    {
        Node& n = node(id);
        if (!n.requires_grad) return;
        if (n.grad.size() == 0)
            n.grad = contribution;
        else
            n.grad += contribution;
    }

    /// Sign pattern of every relu input seen so far; a change between two
    /// evaluations means a kink was crossed.
    const std::vector<std::uint8_t>& kink_pattern() const { return kinks_; }
    std::vector<std::uint8_t>& kink_pattern() { return kinks_; }

private:
    bool is_tracked(const Parameter& p) const;

    TrackPolicy policy_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> bound_;
    std::vector<const Parameter*> tracked_;
    std::vector<std::uint8_t> kinks_;
};

// Element-wise and shape ops. Shapes must match exactly; the only broadcast is
// scalar x tensor via scale()/add_scalar().
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var matmul(Var a, Var b);
Var transpose(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
/// axis 1: normalize each row; axis 0: normalize each column.
Var softmax(Var a, int axis = 1);
Var sum(Var a);
Var mean(Var a);
Var mse(Var target, Var prediction);
Var pow(Var a, double p);
Var sqrt(Var a);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(Var a, Var b, int axis);
Var slice(Var a, Index row, Index col, Index rows, Index cols);
/// Row-major flatten into a 1 x (rows*cols) row.
Var flatten(Var a);
/// Stack n copies of a 1 x c row.
Var repeat_rows(Var row, Index n);
/// Causal convolution along rows. `input` is T x C_in, `kernel` is (k*C_in) x C_out with
/// block j holding the tap applied to input row t-(k-1)+j. Rows before 0 read as zero.
Var conv1d_causal(Var input, Var kernel, Index kernel_size);
/// out(d) = sum_k weights(d,k) * image(rows-1-k, d); weights is D x (p+1).
Var lag_dot(Var image, Var weights);
/// Per-row standardization (no affine part).
Var layer_norm_rows(Var a, double eps = 1e-5);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return scale(a, -1.0); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }

struct GradCheckReport {
    double max_rel_error = 0.0;
    Index checked = 0;
    Index excluded = 0;
};

/// Relative error |a-b| / max(1e-8, |a|+|b|) used by grad_check.
double relative_error(double analytic, double numeric);

/// Central-difference check of d f / d params. `f` rebuilds its graph on the
/// tape it is handed. Coordinates whose +-h evaluations change the relu sign
/// pattern are excluded as non-differentiable.
GradCheckReport grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                           double h = 1e-5);

} // namespace ssal::ad
