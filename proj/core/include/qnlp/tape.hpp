#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "qnlp/parameter.hpp"
#include "qnlp/tensor.hpp"

namespace qnlp {

class Tape;

/// Handle to a value recorded on a tape. Cheap to copy; valid only while the
/// owning tape is alive.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
};

enum class UnaryOp { Sigmoid, Tanh, Log, Exp, Relu };

struct TapeOptions {
    /// When false the tape stores forward values only; backward() is
    /// rejected. Used for pure evaluation.
    bool record = true;
    /// Enables dropout. Off for evaluation and gradient checks.
    bool training = false;
    /// (seed, step) key the dropout substreams; see rng.hpp.
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
};

/// Reverse-mode differentiation tape. Operations are recorded in call order,
/// which is topological by construction; backward() walks the list once in
/// reverse and accumulates gradients into Parameter::grad. Tapes are
/// single-use: a second backward() throws.
class Tape {
  public:
    using BackwardFn = std::function<void(Tape&)>;

    explicit Tape(TapeOptions opts = {}) : opts_(opts) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return opts_.record; }
    bool training() const { return opts_.training; }
    std::uint64_t seed() const { return opts_.seed; }
    std::uint64_t step() const { return opts_.step; }
    std::size_t size() const { return nodes_.size(); }

    // -- leaves ------------------------------------------------------------

    /// Non-trainable input; gradients reaching it are discarded.
    Var constant(Tensor value);
    /// Trainable leaf tied to an externally owned Parameter.
    Var param(Parameter& p);

    // -- linear algebra ----------------------------------------------------

    Var matmul(Var a, Var b);   // [m,k] x [k,n] -> [m,n]
    Var matvec(Var a, Var x);   // [m,k] x [k]   -> [m]
    Var transpose(Var a);       // [m,n] -> [n,m]

    // -- elementwise and reductions ----------------------------------------

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var unary(UnaryOp op, Var x);
    Var sum(Var x);
    Var mean_rows(Var x, std::size_t n_rows);  // mean over first n_rows rows

    // -- shape plumbing ------------------------------------------------------

    Var concat(Var a, Var b);                       // 1-d ++ 1-d
    Var slice(Var x, std::size_t start, std::size_t len);  // 1-d
    Var pick(Var x, std::size_t index);             // element -> scalar
    Var row(Var x, std::size_t r);                  // [T,d] -> [d]
    Var stack_rows(const std::vector<Var>& rows);   // T x [d] -> [T,d]
    Var slice_cols(Var x, std::size_t start, std::size_t len);
    Var concat_cols(const std::vector<Var>& parts);
    Var add_rowvec(Var x, Var b);                   // [T,d] + [d] per row

    // -- neural-net ops ------------------------------------------------------

    Var softmax(Var x);  // last axis, max-subtracted
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
    Var embedding(Var table, const std::vector<int>& ids);
    Var cross_entropy(Var logits, const std::vector<int>& targets);
    Var mse(Var pred, Var target);
    Var dropout(Var x, double rate, std::uint64_t stream);

    // -- extension point (used by the circuit simulator) ---------------------

    /// Appends a node with an explicit backward rule. The rule reads
    /// grad_of(out)/value(id) and accumulates into grad_of(parent).
    Var custom(const std::vector<Var>& inputs, Tensor value, BackwardFn fn);
    /// Installs the backward rule of a node created by custom(); needed when
    /// the rule must capture the node's own id. No-op when not recording.
    void set_custom_backward(int id, BackwardFn fn);

    // -- gradients -----------------------------------------------------------

    /// Reverse sweep from a scalar loss. Each reached Parameter leaf gets its
    /// gradient added into Parameter::grad; unreached leaves are untouched.
    void backward(Var loss);

    const Tensor& value(int id) const { return nodes_[id].value; }
    /// Gradient buffer of a node, allocated on first access. Only meaningful
    /// during backward().
    Tensor& grad_of(int id);
    /// Gradient of a node after backward(); zeros if never reached.
    Tensor grad(Var v) const;

  private:
    struct Node {
        std::vector<int> parents;
        Tensor value;
        Tensor grad;  // empty until touched by backward
        BackwardFn backward;
        Parameter* param = nullptr;
    };

    int push(std::vector<int> parents, Tensor value, BackwardFn fn,
             Parameter* param = nullptr);
    void set_backward(int id, BackwardFn fn);
    Var wrap(int id) { return Var{this, id}; }
    void check_same_tape(Var v) const;

    TapeOptions opts_;
    // deque keeps value references handed out by value()/Var::value() stable
    // across later recordings
    std::deque<Node> nodes_;
    bool consumed_ = false;
};

// Free-function sugar over Tape methods; all arguments must share a tape.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise

Var sigmoid(Var x);
Var tanh(Var x);
Var log(Var x);
Var exp(Var x);
Var relu(Var x);

/// matvec(W, x) + b.
Var affine(Var w, Var x, Var b);

}  // namespace qnlp
