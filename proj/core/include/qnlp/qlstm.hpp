#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qnlp/optim.hpp"
#include "qnlp/vqc.hpp"

namespace qnlp {

enum class ModelMode { Classical, Quantum };

ModelMode parse_mode(const std::string& text);
const char* mode_name(ModelMode mode);

struct LstmConfig {
    std::size_t vocab_size = 0;
    std::size_t embedding_dim = 8;
    std::size_t hidden_dim = 6;
    int n_qubits = 4;
    int n_qlayers = 1;
    std::size_t n_tags = 3;
    ModelMode mode = ModelMode::Quantum;

    std::size_t concat_dim() const { return embedding_dim + hidden_dim; }
    void validate() const;
};

/// Sequence tagger built on an LSTM cell whose four gate maps are either
/// classical affine layers or VQCs dressed by a shared squeeze/bloat pair
/// (the VQC angles stay per-gate). Both modes expose identical shapes.
class PosTagger {
  public:
    PosTagger(const LstmConfig& config, std::uint64_t seed);

    const LstmConfig& config() const { return config_; }
    ParamList params();

    /// Per-tape registration of all parameters; every handle below shares it.
    struct Bound {
        Var embedding;
        Var head_w, head_b;
        // quantum mode
        Var squeeze_w, squeeze_b, bloat_w, bloat_b;
        Var theta_f, theta_i, theta_c, theta_o;
        // classical mode
        Var w_ih, w_hh, b_ih, b_hh;
    };
    Bound bind(Tape& tape);

    struct CellState {
        Var h;
        Var c;
    };
    CellState initial_state(Tape& tape) const;

    /// One recurrent update from embedded input x_t.
    CellState step(Tape& tape, const Bound& bound, const CellState& state,
                   Var x_t) const;

    /// Embeds the tokens and folds step() from the zero state; returns the
    /// full hidden trajectory [T, hidden_dim].
    Var run_sequence(Tape& tape, const std::vector<int>& token_ids);

    /// Affine tag head per time step: [T, hidden_dim] -> [T, n_tags].
    Var tag_logits(Tape& tape, const Bound& bound, Var h_all) const;

    /// Mean token-level cross-entropy of one tagged sentence.
    Var sequence_loss(Tape& tape, const std::vector<int>& token_ids,
                      const std::vector<int>& tag_ids);

    /// Greedy decode; ties resolve to the lowest tag index.
    std::vector<int> predict(const std::vector<int>& token_ids);

  private:
    Var gate_preactivation(Tape& tape, const Bound& bound, Var v,
                           Var theta) const;

    LstmConfig config_;
    VqcConfig vqc_config_;

    Parameter embedding_;
    Parameter head_w_, head_b_;
    // quantum mode
    Parameter squeeze_w_, squeeze_b_, bloat_w_, bloat_b_;
    Parameter theta_f_, theta_i_, theta_c_, theta_o_;
    // classical mode
    Parameter w_ih_, w_hh_, b_ih_, b_hh_;
};

/// Greedy argmax with the documented lowest-index tie-break.
std::size_t argmax_lowest(const double* values, std::size_t n);

}  // namespace qnlp
