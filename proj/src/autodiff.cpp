#include "ssal/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace ssal::ad {

const char* op_name(Op op)
{
    switch (op) {
    case Op::leaf: return "leaf";
    case Op::constant: return "constant";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::add_scalar: return "add_scalar";
    case Op::matmul: return "matmul";
    case Op::transpose: return "transpose";
    case Op::sigmoid: return "sigmoid";
    case Op::tanh: return "tanh";
    case Op::relu: return "relu";
    case Op::softmax: return "softmax";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::mse: return "mse";
    case Op::pow: return "pow";
    case Op::sqrt: return "sqrt";
    case Op::concat: return "concat";
    case Op::slice: return "slice";
    case Op::flatten: return "flatten";
    case Op::repeat_rows: return "repeat_rows";
    case Op::conv1d_causal: return "conv1d_causal";
    case Op::lag_dot: return "lag_dot";
    case Op::layer_norm: return "layer_norm";
    case Op::custom: return "custom";
    }
    return "?";
}

const Matrix& Var::value() const { return tape_->node(id_).value; }

double Var::scalar() const
{
    const Matrix& v = value();
    if (v.size() != 1) throw ValidationError("scalar(): node is " + shape_of(v));
    return v(0, 0);
}

// ---------------------------------------------------------------------------
// Tape

int Tape::push(Node node)
{
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size() - 1);
}

bool Tape::is_tracked(const Parameter& p) const
{
    if (policy_ == TrackPolicy::all) return true;
    return std::find(tracked_.begin(), tracked_.end(), &p) != tracked_.end();
}

Var Tape::param(const Parameter& p)
{
    if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
    Node n;
    n.value = p.value;
    n.requires_grad = is_tracked(p);
    n.op = n.requires_grad ? Op::leaf : Op::constant;
    const int id = push(std::move(n));
    bound_.emplace(&p, id);
    return Var(this, id);
}

Var Tape::constant(Matrix value)
{
    Node n;
    n.value = std::move(value);
    n.op = Op::constant;
    return Var(this, push(std::move(n)));
}

Var Tape::scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

void Tape::backward(Var loss)
{
    if (loss.tape() != this) throw ValidationError("backward: loss belongs to another tape");
    if (loss.value().size() != 1)
        throw ValidationError("backward: loss must be scalar, got " + shape_of(loss.value()));

    // Iterative DFS topological order; a grey node reached again is a cycle.
    enum : std::uint8_t { white, grey, black };
    std::vector<std::uint8_t> color(nodes_.size(), white);
    std::vector<int> order;
    std::vector<std::pair<int, std::size_t>> stack{{loss.id(), 0}};
    color[static_cast<std::size_t>(loss.id())] = grey;
    while (!stack.empty()) {
        auto& [id, next] = stack.back();
        const auto& parents = node(id).parents;
        if (next < parents.size()) {
            const int p = parents[next++];
            if (p < 0 || static_cast<std::size_t>(p) >= nodes_.size())
                throw ValidationError("backward: node " + std::to_string(id) + " has invalid parent");
            auto& c = color[static_cast<std::size_t>(p)];
            if (c == grey)
                throw ValidationError("backward: graph is not a DAG (cycle through node " +
                                      std::to_string(p) + ")");
            if (c == white) {
                c = grey;
                stack.emplace_back(p, 0);
            }
        } else {
            color[static_cast<std::size_t>(id)] = black;
            order.push_back(id);
            stack.pop_back();
        }
    }

    for (auto& n : nodes_) n.grad.resize(0, 0);
    Node& root = node(loss.id());
    if (!root.requires_grad) return;
    root.grad = Matrix::Ones(1, 1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node& n = node(*it);
        if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
        n.backward(*this, *it);
    }
}

Matrix Tape::gradient(const Parameter& p) const
{
    auto it = bound_.find(&p);
    if (it == bound_.end()) return Matrix::Zero(p.value.rows(), p.value.cols());
    const Node& n = node(it->second);
    if (n.grad.size() == 0) return Matrix::Zero(p.value.rows(), p.value.cols());
    return n.grad;
}

const Matrix& Tape::grad(Var v) const { return node(v.id()).grad; }

// ---------------------------------------------------------------------------
// Op helpers

namespace {

Tape& same_tape(Var a, Var b, const char* op)
{
    if (!a.valid() || !b.valid() || a.tape() != b.tape())
        throw ValidationError(std::string(op) + ": operands on different tapes");
    return *a.tape();
}

void require_same_shape(Var a, Var b, const char* op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ValidationError(std::string(op) + ": shape mismatch " + shape_of(a.value()) + " vs " +
                              shape_of(b.value()));
}

Var make(Tape& t, Op op, Matrix value, std::vector<int> parents, Node::Backward backward)
{
    Node n;
    n.value = std::move(value);
    n.op = op;
    for (int p : parents) n.requires_grad = n.requires_grad || t.node(p).requires_grad;
    n.parents = std::move(parents);
    if (n.requires_grad) n.backward = std::move(backward);
    return Var(&t, t.push(std::move(n)));
}

const Matrix& val(Tape& t, int id) { return t.node(id).value; }
const Matrix& grd(Tape& t, int id) { return t.node(id).grad; }

} // namespace

Var add(Var a, Var b)
{
    Tape& t = same_tape(a, b, "add");
    require_same_shape(a, b, "add");
    const int ia = a.id(), ib = b.id();
    return make(t, Op::add, a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
        tp.accumulate(ia, grd(tp, self));
        tp.accumulate(ib, grd(tp, self));
    });
}

Var sub(Var a, Var b)
{
    Tape& t = same_tape(a, b, "sub");
    require_same_shape(a, b, "sub");
    const int ia = a.id(), ib = b.id();
    return make(t, Op::sub, a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
        tp.accumulate(ia, grd(tp, self));
        tp.accumulate(ib, -grd(tp, self));
    });
}

Var mul(Var a, Var b)
{
    Tape& t = same_tape(a, b, "mul");
    require_same_shape(a, b, "mul");
    const int ia = a.id(), ib = b.id();
    return make(t, Op::mul, a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& tp, int self) {
        tp.accumulate(ia, grd(tp, self).cwiseProduct(val(tp, ib)));
        tp.accumulate(ib, grd(tp, self).cwiseProduct(val(tp, ia)));
    });
}

Var scale(Var a, double c)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::scale, a.value() * c, {ia},
                [ia, c](Tape& tp, int self) { tp.accumulate(ia, grd(tp, self) * c); });
}

Var add_scalar(Var a, double c)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::add_scalar, (a.value().array() + c).matrix(), {ia},
                [ia](Tape& tp, int self) { tp.accumulate(ia, grd(tp, self)); });
}

Var matmul(Var a, Var b)
{
    Tape& t = same_tape(a, b, "matmul");
    if (a.cols() != b.rows())
        throw ValidationError("matmul: shape mismatch " + shape_of(a.value()) + " x " + shape_of(b.value()));
    const int ia = a.id(), ib = b.id();
    return make(t, Op::matmul, a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
        const Matrix& g = grd(tp, self);
        if (tp.node(ia).requires_grad) tp.accumulate(ia, g * val(tp, ib).transpose());
        if (tp.node(ib).requires_grad) tp.accumulate(ib, val(tp, ia).transpose() * g);
    });
}

Var transpose(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::transpose, a.value().transpose(), {ia},
                [ia](Tape& tp, int self) { tp.accumulate(ia, grd(tp, self).transpose()); });
}

Var sigmoid(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    return make(t, Op::sigmoid, std::move(y), {ia}, [ia](Tape& tp, int self) {
        const auto y = val(tp, self).array();
        tp.accumulate(ia, (grd(tp, self).array() * y * (1.0 - y)).matrix());
    });
}

Var tanh(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::tanh, a.value().array().tanh().matrix(), {ia}, [ia](Tape& tp, int self) {
        const auto y = val(tp, self).array();
        tp.accumulate(ia, (grd(tp, self).array() * (1.0 - y * y)).matrix());
    });
}

Var relu(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    auto& kinks = t.kink_pattern();
    const Matrix& x = a.value();
    for (Index i = 0; i < x.size(); ++i) kinks.push_back(x.data()[i] > 0.0 ? 1 : 0);
    return make(t, Op::relu, x.cwiseMax(0.0), {ia}, [ia](Tape& tp, int self) {
        const auto mask = (val(tp, ia).array() > 0.0).cast<double>();
        tp.accumulate(ia, (grd(tp, self).array() * mask).matrix());
    });
}

Var softmax(Var a, int axis)
{
    if (axis != 0 && axis != 1) throw ValidationError("softmax: axis must be 0 or 1");
    Tape& t = *a.tape();
    const int ia = a.id();
    const Matrix x = axis == 1 ? a.value() : Matrix(a.value().transpose());
    Matrix y(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        const Eigen::RowVectorXd e = (x.row(i).array() - x.row(i).maxCoeff()).exp();
        y.row(i) = e / e.sum();
    }
    if (axis == 0) y.transposeInPlace();
    return make(t, Op::softmax, std::move(y), {ia}, [ia, axis](Tape& tp, int self) {
        Matrix yv = val(tp, self);
        Matrix g = grd(tp, self);
        if (axis == 0) {
            yv.transposeInPlace();
            g.transposeInPlace();
        }
        const Vector dots = g.cwiseProduct(yv).rowwise().sum();
        Matrix gx = yv.cwiseProduct(g - dots.replicate(1, g.cols()));
        if (axis == 0) gx.transposeInPlace();
        tp.accumulate(ia, gx);
    });
}

Var sum(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    const Index r = a.rows(), c = a.cols();
    return make(t, Op::sum, Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia, r, c](Tape& tp, int self) {
        tp.accumulate(ia, Matrix::Constant(r, c, grd(tp, self)(0, 0)));
    });
}

Var mean(Var a)
{
    Tape& t = *a.tape();
    if (a.value().size() == 0) throw ValidationError("mean: empty tensor");
    const int ia = a.id();
    const Index r = a.rows(), c = a.cols();
    const double n = static_cast<double>(a.value().size());
    return make(t, Op::mean, Matrix::Constant(1, 1, a.value().mean()), {ia}, [ia, r, c, n](Tape& tp, int self) {
        tp.accumulate(ia, Matrix::Constant(r, c, grd(tp, self)(0, 0) / n));
    });
}

Var mse(Var target, Var prediction)
{
    Tape& t = same_tape(target, prediction, "mse");
    require_same_shape(target, prediction, "mse");
    const int iy = target.id(), ip = prediction.id();
    const double n = static_cast<double>(target.value().size());
    const double v = (prediction.value() - target.value()).squaredNorm() / n;
    return make(t, Op::mse, Matrix::Constant(1, 1, v), {iy, ip}, [iy, ip, n](Tape& tp, int self) {
        const double g = grd(tp, self)(0, 0);
        const Matrix diff = (val(tp, ip) - val(tp, iy)) * (2.0 * g / n);
        tp.accumulate(ip, diff);
        tp.accumulate(iy, -diff);
    });
}

Var pow(Var a, double p)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::pow, a.value().array().pow(p).matrix(), {ia}, [ia, p](Tape& tp, int self) {
        tp.accumulate(ia, (grd(tp, self).array() * p * val(tp, ia).array().pow(p - 1.0)).matrix());
    });
}

Var sqrt(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    return make(t, Op::sqrt, a.value().array().sqrt().matrix(), {ia}, [ia](Tape& tp, int self) {
        tp.accumulate(ia, (grd(tp, self).array() * 0.5 / val(tp, self).array()).matrix());
    });
}

Var concat(Var a, Var b, int axis)
{
    Tape& t = same_tape(a, b, "concat");
    const int ia = a.id(), ib = b.id();
    Matrix out;
    if (axis == 0) {
        if (a.cols() != b.cols())
            throw ValidationError("concat: column mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
        out.resize(a.rows() + b.rows(), a.cols());
        out << a.value(), b.value();
    } else if (axis == 1) {
        if (a.rows() != b.rows())
            throw ValidationError("concat: row mismatch " + shape_of(a.value()) + " vs " + shape_of(b.value()));
        out.resize(a.rows(), a.cols() + b.cols());
        out << a.value(), b.value();
    } else {
        throw ValidationError("concat: axis must be 0 or 1");
    }
    const Index ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    return make(t, Op::concat, std::move(out), {ia, ib}, [=](Tape& tp, int self) {
        const Matrix& g = grd(tp, self);
        if (axis == 0) {
            tp.accumulate(ia, g.topRows(ar));
            tp.accumulate(ib, g.bottomRows(br));
        } else {
            tp.accumulate(ia, g.leftCols(ac));
            tp.accumulate(ib, g.rightCols(bc));
        }
    });
}

Var slice(Var a, Index row, Index col, Index rows, Index cols)
{
    Tape& t = *a.tape();
    if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > a.rows() || col + cols > a.cols())
        throw ValidationError("slice: block (" + std::to_string(row) + "," + std::to_string(col) + ") " +
                              shape_string(rows, cols) + " outside " + shape_of(a.value()));
    const int ia = a.id();
    const Index r = a.rows(), c = a.cols();
    return make(t, Op::slice, a.value().block(row, col, rows, cols), {ia}, [=](Tape& tp, int self) {
        Matrix g = Matrix::Zero(r, c);
        g.block(row, col, rows, cols) = grd(tp, self);
        tp.accumulate(ia, g);
    });
}

Var flatten(Var a)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    const Index r = a.rows(), c = a.cols();
    Matrix out(1, r * c);
    for (Index i = 0; i < r; ++i) out.block(0, i * c, 1, c) = a.value().row(i);
    return make(t, Op::flatten, std::move(out), {ia}, [ia, r, c](Tape& tp, int self) {
        const Matrix& g = grd(tp, self);
        Matrix gx(r, c);
        for (Index i = 0; i < r; ++i) gx.row(i) = g.block(0, i * c, 1, c);
        tp.accumulate(ia, gx);
    });
}

Var repeat_rows(Var row, Index n)
{
    Tape& t = *row.tape();
    if (row.rows() != 1) throw ValidationError("repeat_rows: expected a row, got " + shape_of(row.value()));
    const int ia = row.id();
    return make(t, Op::repeat_rows, row.value().replicate(n, 1), {ia}, [ia](Tape& tp, int self) {
        tp.accumulate(ia, grd(tp, self).colwise().sum());
    });
}

namespace {

Matrix causal_columns(const Matrix& x, Index k)
{
    const Index T = x.rows(), cin = x.cols();
    Matrix cols = Matrix::Zero(T, k * cin);
    for (Index t = 0; t < T; ++t)
        for (Index j = 0; j < k; ++j) {
            const Index src = t - (k - 1) + j;
            if (src >= 0) cols.block(t, j * cin, 1, cin) = x.row(src);
        }
    return cols;
}

} // namespace

Var conv1d_causal(Var input, Var kernel, Index kernel_size)
{
    Tape& t = same_tape(input, kernel, "conv1d_causal");
    if (kernel_size < 1 || kernel.rows() != kernel_size * input.cols())
        throw ValidationError("conv1d_causal: kernel " + shape_of(kernel.value()) + " incompatible with input " +
                              shape_of(input.value()) + " and kernel size " + std::to_string(kernel_size));
    const int ix = input.id(), ik = kernel.id();
    Matrix cols = causal_columns(input.value(), kernel_size);
    Matrix out = cols * kernel.value();
    const Index T = input.rows(), cin = input.cols();
    return make(t, Op::conv1d_causal, std::move(out), {ix, ik},
                [ix, ik, kernel_size, T, cin, cols = std::move(cols)](Tape& tp, int self) {
                    const Matrix& g = grd(tp, self);
                    if (tp.node(ik).requires_grad) tp.accumulate(ik, cols.transpose() * g);
                    if (!tp.node(ix).requires_grad) return;
                    const Matrix gcols = g * val(tp, ik).transpose();
                    Matrix gx = Matrix::Zero(T, cin);
                    for (Index tt = 0; tt < T; ++tt)
                        for (Index j = 0; j < kernel_size; ++j) {
                            const Index src = tt - (kernel_size - 1) + j;
                            if (src >= 0) gx.row(src) += gcols.block(tt, j * cin, 1, cin);
                        }
                    tp.accumulate(ix, gx);
                });
}

Var lag_dot(Var image, Var weights)
{
    Tape& t = same_tape(image, weights, "lag_dot");
    const Index w = image.rows(), d = image.cols(), lags = weights.cols();
    if (weights.rows() != d || lags > w)
        throw ValidationError("lag_dot: weights " + shape_of(weights.value()) + " incompatible with image " +
                              shape_of(image.value()));
    const Matrix& x = image.value();
    const Matrix& wt = weights.value();
    Matrix out(1, d);
    for (Index j = 0; j < d; ++j) {
        double acc = 0.0;
        for (Index k = 0; k < lags; ++k) acc += wt(j, k) * x(w - 1 - k, j);
        out(0, j) = acc;
    }
    const int ix = image.id(), iw = weights.id();
    return make(t, Op::lag_dot, std::move(out), {ix, iw}, [ix, iw, w, d, lags](Tape& tp, int self) {
        const Matrix& g = grd(tp, self);
        const Matrix& x = val(tp, ix);
        const Matrix& wt = val(tp, iw);
        if (tp.node(iw).requires_grad) {
            Matrix gw(d, lags);
            for (Index j = 0; j < d; ++j)
                for (Index k = 0; k < lags; ++k) gw(j, k) = g(0, j) * x(w - 1 - k, j);
            tp.accumulate(iw, gw);
        }
        if (tp.node(ix).requires_grad) {
            Matrix gx = Matrix::Zero(w, d);
            for (Index j = 0; j < d; ++j)
                for (Index k = 0; k < lags; ++k) gx(w - 1 - k, j) = g(0, j) * wt(j, k);
            tp.accumulate(ix, gx);
        }
    });
}

Var layer_norm_rows(Var a, double eps)
{
    Tape& t = *a.tape();
    const int ia = a.id();
    const Matrix& x = a.value();
    const Index n = x.cols();
    Matrix y(x.rows(), n);
    Vector inv_std(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double mu = x.row(i).mean();
        const double var = (x.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        y.row(i) = (x.row(i).array() - mu) * inv_std(i);
    }
    return make(t, Op::layer_norm, std::move(y), {ia}, [ia, inv_std, n](Tape& tp, int self) {
        const Matrix& g = grd(tp, self);
        const Matrix& y = val(tp, self);
        Matrix gx(g.rows(), n);
        for (Index i = 0; i < g.rows(); ++i) {
            const double gm = g.row(i).mean();
            const double gy = g.row(i).cwiseProduct(y.row(i)).mean();
            gx.row(i) = inv_std(i) * (g.row(i).array() - gm - y.row(i).array() * gy);
        }
        tp.accumulate(ia, gx);
    });
}

// ---------------------------------------------------------------------------
// Gradient check

double relative_error(double analytic, double numeric)
{
    return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckReport grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                           double h)
{
    std::vector<Matrix> analytic;
    std::vector<std::uint8_t> base_kinks;
    {
        Tape tape;
        Var loss = f(tape);
        tape.backward(loss);
        for (Parameter* p : params) analytic.push_back(tape.gradient(*p));
        base_kinks = tape.kink_pattern();
    }

    auto evaluate = [&](std::vector<std::uint8_t>& kinks) {
        Tape tape;
        const double v = f(tape).scalar();
        kinks = tape.kink_pattern();
        return v;
    };

    GradCheckReport report;
    std::vector<std::uint8_t> kp, km;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& value = params[pi]->value;
        for (Index i = 0; i < value.size(); ++i) {
            const double orig = value.data()[i];
            value.data()[i] = orig + h;
            const double fp = evaluate(kp);
            value.data()[i] = orig - h;
            const double fm = evaluate(km);
            value.data()[i] = orig;
            if (kp != base_kinks || km != base_kinks) {
                ++report.excluded;
                continue;
            }
            const double numeric = (fp - fm) / (2.0 * h);
            report.max_rel_error = std::max(report.max_rel_error, relative_error(analytic[pi].data()[i], numeric));
            ++report.checked;
        }
    }
    return report;
}

} // namespace ssal::ad
