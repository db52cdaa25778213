#include "qnlp/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qnlp/error.hpp"
#include "qnlp/rng.hpp"

namespace qnlp {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeError(msg);
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

const Tensor& Var::value() const { return tape->value(id); }

int Tape::push(std::vector<int> parents, Tensor value, BackwardFn fn,
               Parameter* param) {
    Node node;
    node.value = std::move(value);
    if (opts_.record) {
        node.parents = std::move(parents);
        node.backward = std::move(fn);
        node.param = param;
    }
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::set_backward(int id, BackwardFn fn) {
    if (opts_.record) nodes_[id].backward = std::move(fn);
}

void Tape::set_custom_backward(int id, BackwardFn fn) {
    set_backward(id, std::move(fn));
}

void Tape::check_same_tape(Var v) const {
    if (!v.valid() || v.tape != this) {
        throw ContractError("variable does not belong to this tape");
    }
}

Tensor& Tape::grad_of(int id) {
    Node& n = nodes_[id];
    if (n.grad.numel() != n.value.numel()) {
        n.grad = Tensor(n.value.shape());
    }
    return n.grad;
}

Tensor Tape::grad(Var v) const {
    check_same_tape(v);
    const Node& n = nodes_[v.id];
    if (n.grad.numel() != n.value.numel()) {
        return Tensor(n.value.shape());
    }
    return n.grad;
}

Var Tape::constant(Tensor value) { return wrap(push({}, std::move(value), {})); }

Var Tape::param(Parameter& p) { return wrap(push({}, p.value, {}, &p)); }

void Tape::backward(Var loss) {
    check_same_tape(loss);
    if (!opts_.record) {
        throw ContractError("backward() on a non-recording tape");
    }
    if (consumed_) {
        throw ContractError("backward() called twice on a single-use tape");
    }
    if (!loss.value().is_scalar()) {
        throw ContractError("backward() requires a scalar loss, got shape " +
                            loss.value().shape_str());
    }
    consumed_ = true;
    grad_of(loss.id)[0] = 1.0;
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        if (n.grad.numel() == 0) continue;  // not reached from the loss
        if (n.param != nullptr) {
            Tensor& g = n.param->grad;
            for (std::size_t i = 0; i < g.numel(); ++i) g[i] += n.grad[i];
        }
        if (n.backward) n.backward(*this);
    }
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& A = value(a.id);
    const Tensor& B = value(b.id);
    require(A.rank() == 2 && B.rank() == 2 && A.dim(1) == B.dim(0),
            "matmul shape mismatch: " + A.shape_str() + " x " + B.shape_str());
    std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            double aip = A.at(i, p);
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                C.at(i, j) += aip * B.at(p, j);
            }
        }
    }
    int ai = a.id, bi = b.id;
    int out = push({ai, bi}, std::move(C), {});
    set_backward(out, [out, ai, bi, m, k, n](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& A2 = t.value(ai);
        const Tensor& B2 = t.value(bi);
        Tensor& ga = t.grad_of(ai);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double gij = g.at(i, j);
                if (gij == 0.0) continue;
                for (std::size_t p = 0; p < k; ++p) {
                    ga.at(i, p) += gij * B2.at(p, j);
                    gb.at(p, j) += A2.at(i, p) * gij;
                }
            }
        }
    });
    return wrap(out);
}

Var Tape::matvec(Var a, Var x) {
    check_same_tape(a);
    check_same_tape(x);
    const Tensor& A = value(a.id);
    const Tensor& v = value(x.id);
    require(A.rank() == 2 && v.rank() == 1 && A.dim(1) == v.dim(0),
            "matvec shape mismatch: " + A.shape_str() + " x " + v.shape_str());
    std::size_t m = A.dim(0), k = A.dim(1);
    Tensor y({m});
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += A.at(i, j) * v[j];
        y[i] = s;
    }
    int ai = a.id, xi = x.id;
    int out = push({ai, xi}, std::move(y), {});
    set_backward(out, [out, ai, xi, m, k](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& A2 = t.value(ai);
        const Tensor& v2 = t.value(xi);
        Tensor& ga = t.grad_of(ai);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t i = 0; i < m; ++i) {
            double gi = g[i];
            if (gi == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
                ga.at(i, j) += gi * v2[j];
                gx[j] += A2.at(i, j) * gi;
            }
        }
    });
    return wrap(out);
}

Var Tape::transpose(Var a) {
    check_same_tape(a);
    const Tensor& A = value(a.id);
    require(A.rank() == 2, "transpose expects a matrix, got " + A.shape_str());
    std::size_t m = A.dim(0), n = A.dim(1);
    Tensor T({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) T.at(j, i) = A.at(i, j);
    int ai = a.id;
    int out = push({ai}, std::move(T), {});
    set_backward(out, [out, ai, m, n](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& ga = t.grad_of(ai);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga.at(i, j) += g.at(j, i);
    });
    return wrap(out);
}

// ---------------------------------------------------------------------------
// elementwise and reductions
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& A = value(a.id);
    const Tensor& B = value(b.id);
    require(A.same_shape(B),
            "add shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
    Tensor C(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = A[i] + B[i];
    int ai = a.id, bi = b.id;
    int out = push({ai, bi}, std::move(C), {});
    set_backward(out, [out, ai, bi](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& ga = t.grad_of(ai);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i];
            gb[i] += g[i];
        }
    });
    return wrap(out);
}

Var Tape::sub(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& A = value(a.id);
    const Tensor& B = value(b.id);
    require(A.same_shape(B),
            "sub shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
    Tensor C(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = A[i] - B[i];
    int ai = a.id, bi = b.id;
    int out = push({ai, bi}, std::move(C), {});
    set_backward(out, [out, ai, bi](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& ga = t.grad_of(ai);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i];
            gb[i] -= g[i];
        }
    });
    return wrap(out);
}

Var Tape::mul(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& A = value(a.id);
    const Tensor& B = value(b.id);
    require(A.same_shape(B),
            "mul shape mismatch: " + A.shape_str() + " vs " + B.shape_str());
    Tensor C(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = A[i] * B[i];
    int ai = a.id, bi = b.id;
    int out = push({ai, bi}, std::move(C), {});
    set_backward(out, [out, ai, bi](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& A2 = t.value(ai);
        const Tensor& B2 = t.value(bi);
        Tensor& ga = t.grad_of(ai);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            ga[i] += g[i] * B2[i];
            gb[i] += g[i] * A2[i];
        }
    });
    return wrap(out);
}

Var Tape::scale(Var a, double c) {
    check_same_tape(a);
    const Tensor& A = value(a.id);
    Tensor C(A.shape());
    for (std::size_t i = 0; i < A.numel(); ++i) C[i] = c * A[i];
    int ai = a.id;
    int out = push({ai}, std::move(C), {});
    set_backward(out, [out, ai, c](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& ga = t.grad_of(ai);
        for (std::size_t i = 0; i < g.numel(); ++i) ga[i] += c * g[i];
    });
    return wrap(out);
}

Var Tape::unary(UnaryOp op, Var x) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    Tensor Y(X.shape());
    for (std::size_t i = 0; i < X.numel(); ++i) {
        double v = X[i];
        switch (op) {
            case UnaryOp::Sigmoid: Y[i] = stable_sigmoid(v); break;
            case UnaryOp::Tanh: Y[i] = std::tanh(v); break;
            case UnaryOp::Log:
                if (v <= 0.0) {
                    throw DomainError("log of non-positive entry " +
                                      std::to_string(v) + " at index " +
                                      std::to_string(i));
                }
                Y[i] = std::log(v);
                break;
            case UnaryOp::Exp: Y[i] = std::exp(v); break;
            case UnaryOp::Relu: Y[i] = v > 0.0 ? v : 0.0; break;
        }
    }
    int xi = x.id;
    int out = push({xi}, std::move(Y), {});
    set_backward(out, [out, xi, op](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& X2 = t.value(xi);
        const Tensor& Y2 = t.value(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t i = 0; i < g.numel(); ++i) {
            double d = 0.0;
            switch (op) {
                case UnaryOp::Sigmoid: d = Y2[i] * (1.0 - Y2[i]); break;
                case UnaryOp::Tanh: d = 1.0 - Y2[i] * Y2[i]; break;
                case UnaryOp::Log: d = 1.0 / X2[i]; break;
                case UnaryOp::Exp: d = Y2[i]; break;
                case UnaryOp::Relu: d = X2[i] > 0.0 ? 1.0 : 0.0; break;
            }
            gx[i] += g[i] * d;
        }
    });
    return wrap(out);
}

Var Tape::sum(Var x) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    double s = 0.0;
    for (std::size_t i = 0; i < X.numel(); ++i) s += X[i];
    int xi = x.id;
    int out = push({xi}, Tensor::scalar(s), {});
    set_backward(out, [out, xi](Tape& t) {
        double g = t.grad_of(out)[0];
        Tensor& gx = t.grad_of(xi);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
    });
    return wrap(out);
}

Var Tape::mean_rows(Var x, std::size_t n_rows) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    require(X.rank() == 2, "mean_rows expects a matrix, got " + X.shape_str());
    require(n_rows >= 1 && n_rows <= X.dim(0),
            "mean_rows over " + std::to_string(n_rows) + " rows of " +
                X.shape_str());
    std::size_t d = X.dim(1);
    Tensor y({d});
    for (std::size_t r = 0; r < n_rows; ++r)
        for (std::size_t j = 0; j < d; ++j) y[j] += X.at(r, j);
    for (std::size_t j = 0; j < d; ++j) y[j] /= static_cast<double>(n_rows);
    int xi = x.id;
    int out = push({xi}, std::move(y), {});
    set_backward(out, [out, xi, n_rows, d](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        double inv = 1.0 / static_cast<double>(n_rows);
        for (std::size_t r = 0; r < n_rows; ++r)
            for (std::size_t j = 0; j < d; ++j) gx.at(r, j) += g[j] * inv;
    });
    return wrap(out);
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

Var Tape::concat(Var a, Var b) {
    check_same_tape(a);
    check_same_tape(b);
    const Tensor& A = value(a.id);
    const Tensor& B = value(b.id);
    require(A.rank() == 1 && B.rank() == 1,
            "concat expects vectors, got " + A.shape_str() + " and " +
                B.shape_str());
    std::size_t m = A.dim(0), n = B.dim(0);
    Tensor C({m + n});
    for (std::size_t i = 0; i < m; ++i) C[i] = A[i];
    for (std::size_t i = 0; i < n; ++i) C[m + i] = B[i];
    int ai = a.id, bi = b.id;
    int out = push({ai, bi}, std::move(C), {});
    set_backward(out, [out, ai, bi, m, n](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& ga = t.grad_of(ai);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t i = 0; i < m; ++i) ga[i] += g[i];
        for (std::size_t i = 0; i < n; ++i) gb[i] += g[m + i];
    });
    return wrap(out);
}

Var Tape::slice(Var x, std::size_t start, std::size_t len) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    require(X.rank() == 1, "slice expects a vector, got " + X.shape_str());
    require(start + len <= X.dim(0),
            "slice [" + std::to_string(start) + ", " +
                std::to_string(start + len) + ") out of range for " +
                X.shape_str());
    Tensor y({len});
    for (std::size_t i = 0; i < len; ++i) y[i] = X[start + i];
    int xi = x.id;
    int out = push({xi}, std::move(y), {});
    set_backward(out, [out, xi, start, len](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t i = 0; i < len; ++i) gx[start + i] += g[i];
    });
    return wrap(out);
}

Var Tape::pick(Var x, std::size_t index) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    if (index >= X.numel()) {
        throw IndexError("pick index " + std::to_string(index) +
                         " out of range for " + X.shape_str());
    }
    int xi = x.id;
    int out = push({xi}, Tensor::scalar(X[index]), {});
    set_backward(out, [out, xi, index](Tape& t) {
        double g = t.grad_of(out)[0];
        t.grad_of(xi)[index] += g;
    });
    return wrap(out);
}

Var Tape::row(Var x, std::size_t r) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    require(X.rank() == 2, "row expects a matrix, got " + X.shape_str());
    if (r >= X.dim(0)) {
        throw IndexError("row " + std::to_string(r) + " out of range for " +
                         X.shape_str());
    }
    std::size_t d = X.dim(1);
    Tensor y({d});
    for (std::size_t j = 0; j < d; ++j) y[j] = X.at(r, j);
    int xi = x.id;
    int out = push({xi}, std::move(y), {});
    set_backward(out, [out, xi, r, d](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t j = 0; j < d; ++j) gx.at(r, j) += g[j];
    });
    return wrap(out);
}

Var Tape::stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) {
        throw ContractError("stack_rows requires at least one row");
    }
    for (Var v : rows) check_same_tape(v);
    std::size_t d = value(rows[0].id).numel();
    std::vector<int> ids;
    ids.reserve(rows.size());
    for (Var v : rows) {
        const Tensor& R = value(v.id);
        require(R.rank() == 1 && R.dim(0) == d,
                "stack_rows: row shape " + R.shape_str() + " != [" +
                    std::to_string(d) + "]");
        ids.push_back(v.id);
    }
    std::size_t T = rows.size();
    Tensor Y({T, d});
    for (std::size_t r = 0; r < T; ++r) {
        const Tensor& R = value(ids[r]);
        for (std::size_t j = 0; j < d; ++j) Y.at(r, j) = R[j];
    }
    int out = push(std::vector<int>(ids), std::move(Y), {});
    set_backward(out, [out, ids, d](Tape& t) {
        const Tensor& g = t.grad_of(out);
        for (std::size_t r = 0; r < ids.size(); ++r) {
            Tensor& gr = t.grad_of(ids[r]);
            for (std::size_t j = 0; j < d; ++j) gr[j] += g.at(r, j);
        }
    });
    return wrap(out);
}

Var Tape::slice_cols(Var x, std::size_t start, std::size_t len) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    require(X.rank() == 2, "slice_cols expects a matrix, got " + X.shape_str());
    require(start + len <= X.dim(1),
            "slice_cols [" + std::to_string(start) + ", " +
                std::to_string(start + len) + ") out of range for " +
                X.shape_str());
    std::size_t T = X.dim(0);
    Tensor Y({T, len});
    for (std::size_t r = 0; r < T; ++r)
        for (std::size_t j = 0; j < len; ++j) Y.at(r, j) = X.at(r, start + j);
    int xi = x.id;
    int out = push({xi}, std::move(Y), {});
    set_backward(out, [out, xi, start, len, T](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t r = 0; r < T; ++r)
            for (std::size_t j = 0; j < len; ++j)
                gx.at(r, start + j) += g.at(r, j);
    });
    return wrap(out);
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw ContractError("concat_cols requires at least one part");
    }
    for (Var v : parts) check_same_tape(v);
    std::size_t T = value(parts[0].id).dim(0);
    std::size_t total = 0;
    std::vector<int> ids;
    std::vector<std::size_t> widths;
    for (Var v : parts) {
        const Tensor& P = value(v.id);
        require(P.rank() == 2 && P.dim(0) == T,
                "concat_cols: part shape " + P.shape_str() +
                    " does not match " + std::to_string(T) + " rows");
        ids.push_back(v.id);
        widths.push_back(P.dim(1));
        total += P.dim(1);
    }
    Tensor Y({T, total});
    std::size_t off = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
        const Tensor& P = value(ids[p]);
        for (std::size_t r = 0; r < T; ++r)
            for (std::size_t j = 0; j < widths[p]; ++j)
                Y.at(r, off + j) = P.at(r, j);
        off += widths[p];
    }
    int out = push(std::vector<int>(ids), std::move(Y), {});
    set_backward(out, [out, ids, widths, T](Tape& t) {
        const Tensor& g = t.grad_of(out);
        std::size_t off = 0;
        for (std::size_t p = 0; p < ids.size(); ++p) {
            Tensor& gp = t.grad_of(ids[p]);
            for (std::size_t r = 0; r < T; ++r)
                for (std::size_t j = 0; j < widths[p]; ++j)
                    gp.at(r, j) += g.at(r, off + j);
            off += widths[p];
        }
    });
    return wrap(out);
}

Var Tape::add_rowvec(Var x, Var b) {
    check_same_tape(x);
    check_same_tape(b);
    const Tensor& X = value(x.id);
    const Tensor& B = value(b.id);
    require(X.rank() == 2 && B.rank() == 1 && X.dim(1) == B.dim(0),
            "add_rowvec shape mismatch: " + X.shape_str() + " + " +
                B.shape_str());
    std::size_t T = X.dim(0), d = X.dim(1);
    Tensor Y({T, d});
    for (std::size_t r = 0; r < T; ++r)
        for (std::size_t j = 0; j < d; ++j) Y.at(r, j) = X.at(r, j) + B[j];
    int xi = x.id, bi = b.id;
    int out = push({xi, bi}, std::move(Y), {});
    set_backward(out, [out, xi, bi, T, d](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t r = 0; r < T; ++r)
            for (std::size_t j = 0; j < d; ++j) {
                gx.at(r, j) += g.at(r, j);
                gb[j] += g.at(r, j);
            }
    });
    return wrap(out);
}

// ---------------------------------------------------------------------------
// neural-net ops
// ---------------------------------------------------------------------------

Var Tape::softmax(Var x) {
    check_same_tape(x);
    const Tensor& X = value(x.id);
    require(X.rank() == 1 || X.rank() == 2,
            "softmax expects a vector or matrix, got " + X.shape_str());
    std::size_t rows = X.rank() == 2 ? X.dim(0) : 1;
    std::size_t n = X.rank() == 2 ? X.dim(1) : X.dim(0);
    require(n >= 1, "softmax over an empty axis");
    Tensor Y(X.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xin = X.data() + r * n;
        double* yout = Y.data() + r * n;
        double m = xin[0];
        for (std::size_t j = 1; j < n; ++j) m = std::max(m, xin[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            yout[j] = std::exp(xin[j] - m);
            s += yout[j];
        }
        for (std::size_t j = 0; j < n; ++j) yout[j] /= s;
    }
    int xi = x.id;
    int out = push({xi}, std::move(Y), {});
    set_backward(out, [out, xi, rows, n](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& Y2 = t.value(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = Y2.data() + r * n;
            const double* gr = g.data() + r * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += gr[j] * y[j];
            double* gxr = gx.data() + r * n;
            for (std::size_t j = 0; j < n; ++j) gxr[j] += y[j] * (gr[j] - dot);
        }
    });
    return wrap(out);
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    check_same_tape(x);
    check_same_tape(gain);
    check_same_tape(bias);
    const Tensor& X = value(x.id);
    const Tensor& G = value(gain.id);
    const Tensor& B = value(bias.id);
    require(X.rank() == 1 || X.rank() == 2,
            "layer_norm expects a vector or matrix, got " + X.shape_str());
    std::size_t rows = X.rank() == 2 ? X.dim(0) : 1;
    std::size_t d = X.rank() == 2 ? X.dim(1) : X.dim(0);
    require(G.rank() == 1 && G.dim(0) == d && B.rank() == 1 && B.dim(0) == d,
            "layer_norm gain/bias shape mismatch: " + G.shape_str() + ", " +
                B.shape_str() + " for input " + X.shape_str());
    if (eps <= 0.0) throw ContractError("layer_norm eps must be positive");
    Tensor Y(X.shape());
    std::vector<double> x_hat(X.numel());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xin = X.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += xin[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double c = xin[j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        double inv = 1.0 / std::sqrt(var + eps);
        inv_std[r] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            double xh = (xin[j] - mu) * inv;
            x_hat[r * d + j] = xh;
            Y.data()[r * d + j] = G[j] * xh + B[j];
        }
    }
    int xi = x.id, gi = gain.id, bi = bias.id;
    int out = push({xi, gi, bi}, std::move(Y), {});
    set_backward(out, [out, xi, gi, bi, rows, d, x_hat, inv_std](Tape& t) {
        const Tensor& g = t.grad_of(out);
        const Tensor& G2 = t.value(gi);
        Tensor& gx = t.grad_of(xi);
        Tensor& gg = t.grad_of(gi);
        Tensor& gb = t.grad_of(bi);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = g.data() + r * d;
            const double* xh = x_hat.data() + r * d;
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double gy = gr[j] * G2[j];
                m1 += gy;
                m2 += gy * xh[j];
            }
            m1 /= static_cast<double>(d);
            m2 /= static_cast<double>(d);
            double inv = inv_std[r];
            double* gxr = gx.data() + r * d;
            for (std::size_t j = 0; j < d; ++j) {
                double gy = gr[j] * G2[j];
                gxr[j] += inv * (gy - m1 - xh[j] * m2);
                gg[j] += gr[j] * xh[j];
                gb[j] += gr[j];
            }
        }
    });
    return wrap(out);
}

Var Tape::embedding(Var table, const std::vector<int>& ids) {
    check_same_tape(table);
    const Tensor& T = value(table.id);
    require(T.rank() == 2,
            "embedding table must be a matrix, got " + T.shape_str());
    std::size_t V = T.dim(0), d = T.dim(1);
    for (int id : ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= V) {
            throw IndexError("embedding id " + std::to_string(id) +
                             " out of range [0, " + std::to_string(V) + ")");
        }
    }
    Tensor Y({ids.size(), d});
    for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::size_t j = 0; j < d; ++j)
            Y.at(r, j) = T.at(static_cast<std::size_t>(ids[r]), j);
    int ti = table.id;
    std::vector<int> idcopy = ids;
    int out = push({ti}, std::move(Y), {});
    set_backward(out, [out, ti, idcopy, d](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gt = t.grad_of(ti);
        for (std::size_t r = 0; r < idcopy.size(); ++r)
            for (std::size_t j = 0; j < d; ++j)
                gt.at(static_cast<std::size_t>(idcopy[r]), j) += g.at(r, j);
    });
    return wrap(out);
}

Var Tape::cross_entropy(Var logits, const std::vector<int>& targets) {
    check_same_tape(logits);
    const Tensor& L = value(logits.id);
    require(L.rank() == 1 || L.rank() == 2,
            "cross_entropy expects a logits vector or matrix, got " +
                L.shape_str());
    std::size_t B = L.rank() == 2 ? L.dim(0) : 1;
    std::size_t C = L.rank() == 2 ? L.dim(1) : L.dim(0);
    if (targets.size() != B) {
        throw ShapeError("cross_entropy got " +
                         std::to_string(targets.size()) + " targets for " +
                         std::to_string(B) + " rows");
    }
    for (int tgt : targets) {
        if (tgt < 0 || static_cast<std::size_t>(tgt) >= C) {
            throw IndexError("target class " + std::to_string(tgt) +
                             " out of range [0, " + std::to_string(C) + ")");
        }
    }
    // Fused stable formulation: loss_row = logsumexp(l) - l[target].
    std::vector<double> lse(B);
    double total = 0.0;
    for (std::size_t r = 0; r < B; ++r) {
        const double* l = L.data() + r * C;
        double m = l[0];
        for (std::size_t j = 1; j < C; ++j) m = std::max(m, l[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < C; ++j) s += std::exp(l[j] - m);
        lse[r] = m + std::log(s);
        total += lse[r] - l[targets[r]];
    }
    total /= static_cast<double>(B);
    int li = logits.id;
    std::vector<int> tcopy = targets;
    int out = push({li}, Tensor::scalar(total), {});
    set_backward(out, [out, li, tcopy, B, C, lse](Tape& t) {
        double g0 = t.grad_of(out)[0] / static_cast<double>(B);
        const Tensor& L2 = t.value(li);
        Tensor& gl = t.grad_of(li);
        for (std::size_t r = 0; r < B; ++r) {
            const double* l = L2.data() + r * C;
            double* gr = gl.data() + r * C;
            for (std::size_t j = 0; j < C; ++j) {
                double p = std::exp(l[j] - lse[r]);
                double onehot = static_cast<std::size_t>(tcopy[r]) == j;
                gr[j] += g0 * (p - onehot);
            }
        }
    });
    return wrap(out);
}

Var Tape::mse(Var pred, Var target) {
    check_same_tape(pred);
    check_same_tape(target);
    const Tensor& P = value(pred.id);
    const Tensor& T = value(target.id);
    require(P.same_shape(T),
            "mse shape mismatch: " + P.shape_str() + " vs " + T.shape_str());
    std::size_t N = P.numel();
    require(N >= 1, "mse of empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double dlt = P[i] - T[i];
        s += dlt * dlt;
    }
    s /= static_cast<double>(N);
    int pi = pred.id, ti = target.id;
    int out = push({pi, ti}, Tensor::scalar(s), {});
    set_backward(out, [out, pi, ti, N](Tape& t) {
        double g0 = t.grad_of(out)[0];
        const Tensor& P2 = t.value(pi);
        const Tensor& T2 = t.value(ti);
        Tensor& gp = t.grad_of(pi);
        Tensor& gt = t.grad_of(ti);
        double c = 2.0 * g0 / static_cast<double>(N);
        for (std::size_t i = 0; i < N; ++i) {
            double dlt = P2[i] - T2[i];
            gp[i] += c * dlt;
            gt[i] -= c * dlt;
        }
    });
    return wrap(out);
}

Var Tape::dropout(Var x, double rate, std::uint64_t stream) {
    check_same_tape(x);
    if (rate < 0.0 || rate >= 1.0) {
        throw ContractError("dropout rate must be in [0, 1), got " +
                            std::to_string(rate));
    }
    if (!opts_.training || rate == 0.0) return x;
    const Tensor& X = value(x.id);
    Rng rng(stream_seed(opts_.seed, opts_.step, stream));
    double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(X.numel());
    Tensor Y(X.shape());
    for (std::size_t i = 0; i < X.numel(); ++i) {
        mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
        Y[i] = X[i] * mask[i];
    }
    int xi = x.id;
    int out = push({xi}, std::move(Y), {});
    set_backward(out, [out, xi, mask](Tape& t) {
        const Tensor& g = t.grad_of(out);
        Tensor& gx = t.grad_of(xi);
        for (std::size_t i = 0; i < g.numel(); ++i) gx[i] += g[i] * mask[i];
    });
    return wrap(out);
}

Var Tape::custom(const std::vector<Var>& inputs, Tensor value, BackwardFn fn) {
    std::vector<int> parents;
    parents.reserve(inputs.size());
    for (Var v : inputs) {
        check_same_tape(v);
        parents.push_back(v.id);
    }
    return wrap(push(std::move(parents), std::move(value), std::move(fn)));
}

// ---------------------------------------------------------------------------
// sugar
// ---------------------------------------------------------------------------

Var operator+(Var a, Var b) { return a.tape->add(a, b); }
Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape->mul(a, b); }

Var sigmoid(Var x) { return x.tape->unary(UnaryOp::Sigmoid, x); }
Var tanh(Var x) { return x.tape->unary(UnaryOp::Tanh, x); }
Var log(Var x) { return x.tape->unary(UnaryOp::Log, x); }
Var exp(Var x) { return x.tape->unary(UnaryOp::Exp, x); }
Var relu(Var x) { return x.tape->unary(UnaryOp::Relu, x); }

Var affine(Var w, Var x, Var b) {
    Tape* t = w.tape;
    return t->add(t->matvec(w, x), b);
}

}  // namespace qnlp
