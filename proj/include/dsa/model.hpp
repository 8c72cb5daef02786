#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dsa/blocks.hpp"
#include "dsa/fusion.hpp"

namespace dsa {

// Which action-stream embedding the alignment losses consume.
enum class ActionEmbedSource { GeOutput, RawTokens };

struct ModelConfig {
    std::size_t feature_dim = 2048;     // input frame feature width
    std::size_t hidden_dim = 64;        // frame stream width inside TSA blocks
    std::size_t token_dim = 64;         // learnable token width
    std::size_t token_hidden_dim = 64;  // GE output width
    std::size_t num_tokens = 24;
    std::size_t num_blocks = 3;         // stacked TSA blocks
    std::size_t num_classes = 0;
    std::size_t n_qubits = 4;
    std::size_t n_qlayers = 3;
    std::size_t input_expand_dim = 128; // expansion of the input encoder
    std::size_t ge_depth = 10;
    ModulationVariant variant = ModulationVariant::Quantum;
    bool ring_entanglement = false;
    ActionEmbedSource action_embed_source = ActionEmbedSource::GeOutput;
    std::uint64_t seed = 1;

    void validate() const;
    std::string to_kv() const;
    static ModelConfig from_kv(const std::string& text);
    bool operator==(const ModelConfig&) const = default;

    qsim::QuantumConfig quantum() const {
        return {n_qubits, n_qlayers, ring_entanglement};
    }
};

struct ModelOutput {
    Tensor frame_logits;  // L×C
    Tensor token_logits;  // M×C
    AttentionMaps maps;   // from the final TSA block
    Tensor frame_embed;   // h_f: final fused frame features, L×d_h
    Tensor action_embed;  // h_a: per config source, M×token width
};

struct TsaBlock {
    TEParams te;
    TCParams tc;
};

class Model {
  public:
    explicit Model(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }

    // Named learnable tensors in checkpoint order. Handles share storage
    // with the model, so optimizer updates through them are visible here.
    const std::vector<std::pair<std::string, Tensor>>& parameters() const {
        return params_;
    }
    std::size_t parameter_count() const;

    // Action stream: tokens + positional encoding through the GE. Input
    // independent, so evaluation may compute it once and reuse it.
    Tensor action_features() const;

    ModelOutput forward(const Tensor& features) const;
    ModelOutput forward_with_actions(const Tensor& features,
                                     const Tensor& action_feats) const;

    Tensor classify_frames(const Tensor& frame_embed) const;
    Tensor classify_tokens(const Tensor& action_feats) const;

    const Tensor& tokens() const { return tokens_; }
    const TEParams& input_encoder() const { return input_te_; }
    const GEParams& global_encoder() const { return ge_; }
    const std::vector<TsaBlock>& tsa_blocks() const { return blocks_; }

    /// Parameter lookup by registered name; throws on unknown names.
    Tensor parameter(const std::string& name) const;

  private:
    ModelConfig cfg_;
    Tensor tokens_;
    TEParams input_te_;
    GEParams ge_;
    std::vector<TsaBlock> blocks_;
    Tensor frame_head_w_, frame_head_b_;
    Tensor token_head_w_, token_head_b_;
    std::vector<std::pair<std::string, Tensor>> params_;
};

// Row-argmax class predictions; ties resolve to the lower class id.
std::vector<int> predict_labels(const Tensor& logits);

// Versioned binary checkpoint: magic "DSA1", config block, then every
// parameter in declared order as little-endian 64-bit reals prefixed by
// rank and dims. Round-trips are bit-exact.
void save_checkpoint(const Model& model, std::ostream& out);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::string& path);
std::string checkpoint_bytes(const Model& model);

} // namespace dsa
