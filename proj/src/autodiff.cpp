#include "risnoma/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "risnoma/error.hpp"

namespace risnoma::grad {

namespace {

void require_same_tape(const Var& a, const Var& b, const char* what) {
    if (&a.tape() != &b.tape()) {
        throw UsageError(std::string(what) + ": operands live on different tapes");
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ConfigurationError(std::string(what) + ": shape mismatch " + a.shape_string() +
                                 " vs " + b.shape_string());
    }
}

// out += a * b  (a: r×k, b: k×c)
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < r; ++i) {
        double* orow = po + i * c;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = pa[i * k + p];
            const double* brow = pb + p * c;
            for (std::size_t j = 0; j < c; ++j) {
                orow[j] += s * brow[j];
            }
        }
    }
}

Tensor transposed(const Tensor& a) {
    Tensor t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            t(j, i) = a(i, j);
        }
    }
    return t;
}

template <typename F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.rows(), a.cols());
    auto src = a.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = f(src[i]);
    }
    return out;
}

template <typename F>
Var unary(const Var& a, Op op, F f) {
    return a.tape().push(op, {a.id()}, map(a.value(), f));
}

void add_into(Tensor& dst, const Tensor& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] += s[i];
    }
}

} // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

const Tensor& Gradients::at(const Var& leaf) const {
    auto it = grads_.find(leaf.id());
    if (it == grads_.end()) {
        throw UsageError("no gradient recorded for node " + std::to_string(leaf.id()));
    }
    return it->second;
}

Tensor& Gradients::at(const Var& leaf) {
    auto it = grads_.find(leaf.id());
    if (it == grads_.end()) {
        throw UsageError("no gradient recorded for node " + std::to_string(leaf.id()));
    }
    return it->second;
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    Node node;
    node.op = Op::Leaf;
    node.requires_grad = tracking_ && requires_grad;
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::push(Op op, std::vector<NodeId> inputs, Tensor value, std::size_t arg) {
    Node node;
    node.op = op;
    node.arg = arg;
    node.requires_grad = false;
    if (tracking_) {
        for (NodeId in : inputs) {
            if (nodes_[in].requires_grad) {
                node.requires_grad = true;
                break;
            }
        }
    }
    node.inputs = std::move(inputs);
    node.value = std::move(value);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

std::vector<const Tensor*> Tape::relu_inputs() const {
    std::vector<const Tensor*> out;
    for (const Node& node : nodes_) {
        if (node.op == Op::Relu) {
            out.push_back(&nodes_[node.inputs[0]].value);
        }
    }
    return out;
}

Gradients Tape::backward(const Var& output) const {
    if (!tracking_) {
        throw UsageError("backward() called on a tape without gradient tracking");
    }
    if (&output.tape() != this) {
        throw UsageError("backward() output belongs to another tape");
    }
    const Node& out = nodes_.at(output.id());
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw UsageError("backward() requires a scalar output, got " + out.value.shape_string());
    }

    std::vector<Tensor> grads(output.id() + 1);
    grads[output.id()] = Tensor::scalar(1.0);

    for (std::size_t k = output.id() + 1; k-- > 0;) {
        const Node& node = nodes_[k];
        if (!node.requires_grad || grads[k].empty() || node.op == Op::Leaf) {
            continue;
        }
        accumulate_vjp(node, grads[k], grads);
    }

    Gradients result;
    for (std::size_t k = 0; k <= output.id(); ++k) {
        const Node& node = nodes_[k];
        if (node.op == Op::Leaf && node.requires_grad) {
            if (grads[k].empty()) {
                grads[k] = Tensor(node.value.rows(), node.value.cols());
            }
            result.grads_.emplace(k, std::move(grads[k]));
        }
    }
    return result;
}

void Tape::accumulate_vjp(const Node& node, const Tensor& g, std::vector<Tensor>& grads) const {
    auto slot = [&](std::size_t which) -> Tensor* {
        const NodeId in = node.inputs[which];
        if (!nodes_[in].requires_grad) {
            return nullptr;
        }
        Tensor& t = grads[in];
        if (t.empty()) {
            const Tensor& v = nodes_[in].value;
            t = Tensor(v.rows(), v.cols());
        }
        return &t;
    };
    auto input = [&](std::size_t which) -> const Tensor& { return nodes_[node.inputs[which]].value; };

    // dst += g (.) f(x) elementwise
    auto chain = [&](Tensor* dst, auto f) {
        if (dst == nullptr) return;
        auto d = dst->data();
        auto gd = g.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] += gd[i] * f(i);
        }
    };

    switch (node.op) {
    case Op::Leaf:
        break;
    case Op::Add:
        if (Tensor* a = slot(0)) add_into(*a, g);
        if (Tensor* b = slot(1)) add_into(*b, g);
        break;
    case Op::Sub:
        if (Tensor* a = slot(0)) add_into(*a, g);
        chain(slot(1), [](std::size_t) { return -1.0; });
        break;
    case Op::Mul: {
        const Tensor& a = input(0);
        const Tensor& b = input(1);
        chain(slot(0), [&](std::size_t i) { return b[i]; });
        chain(slot(1), [&](std::size_t i) { return a[i]; });
        break;
    }
    case Op::MatMul: {
        const Tensor& a = input(0);
        const Tensor& b = input(1);
        if (Tensor* da = slot(0)) gemm_nn(g, transposed(b), *da);
        if (Tensor* db = slot(1)) gemm_nn(transposed(a), g, *db);
        break;
    }
    case Op::Transpose:
        if (Tensor* a = slot(0)) add_into(*a, transposed(g));
        break;
    case Op::ConcatRows: {
        std::size_t offset = 0;
        for (std::size_t p = 0; p < node.inputs.size(); ++p) {
            const Tensor& part = input(p);
            if (Tensor* d = slot(p)) {
                auto dd = d->data();
                auto gd = g.data().subspan(offset, part.size());
                for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += gd[i];
            }
            offset += part.size();
        }
        break;
    }
    case Op::Relu: {
        const Tensor& x = input(0);
        chain(slot(0), [&](std::size_t i) { return x[i] > 0.0 ? 1.0 : 0.0; });
        break;
    }
    case Op::Sin: {
        const Tensor& x = input(0);
        chain(slot(0), [&](std::size_t i) { return std::cos(x[i]); });
        break;
    }
    case Op::Cos: {
        const Tensor& x = input(0);
        chain(slot(0), [&](std::size_t i) { return -std::sin(x[i]); });
        break;
    }
    case Op::Exp:
        chain(slot(0), [&](std::size_t i) { return node.value[i]; });
        break;
    case Op::Log: {
        const Tensor& x = input(0);
        chain(slot(0), [&](std::size_t i) { return 1.0 / x[i]; });
        break;
    }
    case Op::Square: {
        const Tensor& x = input(0);
        chain(slot(0), [&](std::size_t i) { return 2.0 * x[i]; });
        break;
    }
    case Op::Reciprocal:
        chain(slot(0), [&](std::size_t i) { return -node.value[i] * node.value[i]; });
        break;
    case Op::AddBroadcast: {
        if (Tensor* x = slot(0)) add_into(*x, g);
        if (Tensor* b = slot(1)) {
            for (std::size_t r = 0; r < g.rows(); ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < g.cols(); ++c) acc += g(r, c);
                (*b)[r] += acc;
            }
        }
        break;
    }
    case Op::MeanCols:
        if (Tensor* x = slot(0)) {
            const double inv = 1.0 / static_cast<double>(x->cols());
            for (std::size_t r = 0; r < x->rows(); ++r) {
                const double v = g[r] * inv;
                for (std::size_t c = 0; c < x->cols(); ++c) (*x)(r, c) += v;
            }
        }
        break;
    case Op::SumAll:
        if (Tensor* x = slot(0)) {
            const double v = g[0];
            for (double& d : x->data()) d += v;
        }
        break;
    case Op::SliceRows:
        if (Tensor* x = slot(0)) {
            auto dst = x->data().subspan(node.arg * x->cols(), g.size());
            auto gd = g.data();
            for (std::size_t i = 0; i < gd.size(); ++i) dst[i] += gd[i];
        }
        break;
    }
}

Var add(const Var& a, const Var& b) {
    require_same_tape(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    add_into(out, b.value());
    return a.tape().push(Op::Add, {a.id(), b.id()}, std::move(out));
}

Var sub(const Var& a, const Var& b) {
    require_same_tape(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    Tensor out = a.value();
    auto o = out.data();
    auto bd = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
    return a.tape().push(Op::Sub, {a.id(), b.id()}, std::move(out));
}

Var mul(const Var& a, const Var& b) {
    require_same_tape(a, b, "mul");
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    auto o = out.data();
    auto bd = b.value().data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bd[i];
    return a.tape().push(Op::Mul, {a.id(), b.id()}, std::move(out));
}

Var matmul(const Var& a, const Var& b) {
    require_same_tape(a, b, "matmul");
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.cols() != bv.rows()) {
        throw ConfigurationError("matmul: shape mismatch " + av.shape_string() + " * " +
                                 bv.shape_string());
    }
    Tensor out(av.rows(), bv.cols());
    gemm_nn(av, bv, out);
    return a.tape().push(Op::MatMul, {a.id(), b.id()}, std::move(out));
}

Var transpose(const Var& a) {
    return a.tape().push(Op::Transpose, {a.id()}, transposed(a.value()));
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ConfigurationError("concat_rows: no inputs");
    }
    const std::size_t cols = parts[0].value().cols();
    std::size_t rows = 0;
    std::vector<NodeId> ids;
    ids.reserve(parts.size());
    for (const Var& p : parts) {
        require_same_tape(parts[0], p, "concat_rows");
        if (p.value().cols() != cols) {
            throw ConfigurationError("concat_rows: column mismatch " +
                                     parts[0].value().shape_string() + " vs " +
                                     p.value().shape_string());
        }
        rows += p.value().rows();
        ids.push_back(p.id());
    }
    std::vector<double> data;
    data.reserve(rows * cols);
    for (const Var& p : parts) {
        auto d = p.value().data();
        data.insert(data.end(), d.begin(), d.end());
    }
    return parts[0].tape().push(Op::ConcatRows, std::move(ids), Tensor(rows, cols, std::move(data)));
}

Var relu(const Var& a) {
    return unary(a, Op::Relu, [](double x) { return x > 0.0 ? x : 0.0; });
}

Var sin(const Var& a) {
    return unary(a, Op::Sin, [](double x) { return std::sin(x); });
}

Var cos(const Var& a) {
    return unary(a, Op::Cos, [](double x) { return std::cos(x); });
}

Var exp(const Var& a) {
    return unary(a, Op::Exp, [](double x) { return std::exp(x); });
}

Var log(const Var& a) {
    return unary(a, Op::Log, [](double x) { return std::log(x); });
}

Var square(const Var& a) {
    return unary(a, Op::Square, [](double x) { return x * x; });
}

Var reciprocal(const Var& a) {
    return unary(a, Op::Reciprocal, [](double x) { return 1.0 / x; });
}

Var add_broadcast(const Var& x, const Var& column) {
    require_same_tape(x, column, "add_broadcast");
    const Tensor& xv = x.value();
    const Tensor& bv = column.value();
    if (bv.cols() != 1 || bv.rows() != xv.rows()) {
        throw ConfigurationError("add_broadcast: shape mismatch " + xv.shape_string() + " + " +
                                 bv.shape_string());
    }
    Tensor out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        const double b = bv[r];
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b;
    }
    return x.tape().push(Op::AddBroadcast, {x.id(), column.id()}, std::move(out));
}

Var mean_cols(const Var& a) {
    const Tensor& v = a.value();
    if (v.cols() == 0) {
        throw ConfigurationError("mean_cols: tensor has no columns");
    }
    Tensor out(v.rows(), 1);
    const double inv = 1.0 / static_cast<double>(v.cols());
    for (std::size_t r = 0; r < v.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < v.cols(); ++c) acc += v(r, c);
        out[r] = acc * inv;
    }
    return a.tape().push(Op::MeanCols, {a.id()}, std::move(out));
}

Var sum_all(const Var& a) {
    double acc = 0.0;
    for (double v : a.value().data()) acc += v;
    return a.tape().push(Op::SumAll, {a.id()}, Tensor::scalar(acc));
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
    const Tensor& v = a.value();
    if (begin + count > v.rows()) {
        throw ConfigurationError("slice_rows: rows [" + std::to_string(begin) + ", " +
                                 std::to_string(begin + count) + ") out of range for " +
                                 v.shape_string());
    }
    auto src = v.data().subspan(begin * v.cols(), count * v.cols());
    Tensor out(count, v.cols(), std::vector<double>(src.begin(), src.end()));
    return a.tape().push(Op::SliceRows, {a.id()}, std::move(out), begin);
}

Var scalar_like(const Var& like, double value) {
    return like.tape().constant(Tensor::scalar(value));
}

Var divide(const Var& a, const Var& b) { return mul(a, reciprocal(b)); }

double finite_diff_check(const ScalarFunction& fn, std::span<const Tensor> leaves, double step) {
    if (!(step > 0.0)) {
        throw UsageError("finite_diff_check: step must be positive");
    }

    Tape base(true);
    std::vector<Var> vars;
    vars.reserve(leaves.size());
    for (const Tensor& t : leaves) vars.push_back(base.leaf(t, true));
    const Var out = fn(base, vars);
    const Gradients grads = base.backward(out);
    const std::vector<const Tensor*> base_relu = base.relu_inputs();
    const double kink_band = 10.0 * step;

    auto crosses_kink = [&](const Tape& probe) {
        const auto probe_relu = probe.relu_inputs();
        if (probe_relu.size() != base_relu.size()) return true;
        for (std::size_t r = 0; r < base_relu.size(); ++r) {
            const Tensor& b = *base_relu[r];
            const Tensor& p = *probe_relu[r];
            if (!b.same_shape(p)) return true;
            for (std::size_t i = 0; i < b.size(); ++i) {
                if ((b[i] > 0.0) != (p[i] > 0.0)) return true;
                if (std::abs(b[i]) < kink_band && p[i] != b[i]) return true;
            }
        }
        return false;
    };

    auto evaluate = [&](std::vector<Tensor>& probe_leaves, double& value) {
        auto tape = std::make_unique<Tape>(false);
        std::vector<Var> pv;
        pv.reserve(probe_leaves.size());
        for (const Tensor& t : probe_leaves) pv.push_back(tape->leaf(t, false));
        value = fn(*tape, pv).value().item();
        return tape;
    };

    std::vector<Tensor> work(leaves.begin(), leaves.end());
    double worst = 0.0;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        const Tensor& analytic = grads.at(vars[l]);
        for (std::size_t i = 0; i < leaves[l].size(); ++i) {
            const double x0 = leaves[l][i];
            double fp = 0.0, fm = 0.0;
            work[l][i] = x0 + step;
            auto tp = evaluate(work, fp);
            work[l][i] = x0 - step;
            auto tm = evaluate(work, fm);
            work[l][i] = x0;
            if (crosses_kink(*tp) || crosses_kink(*tm)) continue;

            const double fd = (fp - fm) / (2.0 * step);
            const double a = analytic[i];
            const double denom = std::max({std::abs(a), std::abs(fd), 1e-12});
            worst = std::max(worst, std::abs(a - fd) / denom);
        }
    }
    return worst;
}

} // namespace risnoma::grad
