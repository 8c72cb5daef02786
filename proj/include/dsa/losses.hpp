#pragma once

#include <vector>

#include "dsa/model.hpp"
#include "dsa/tensor.hpp"

namespace dsa {

// Which terms contribute to the total (ablation switches A–E).
struct LossFlags {
    bool ce_frames = true;   // A
    bool ce_tokens = true;   // B
    bool relational = true;  // C
    bool contrastive = true; // D
    bool cycle = true;       // E
};

struct LossConfig {
    // Contrastive defaults: cosine logits at unit temperature with the
    // soft-positive weights renormalised to a distribution per token. The
    // raw column-mass weighting and sharper temperatures stay available
    // but let the contrastive term drown the classification signal.
    double temperature = 1.0;
    bool clc_renormalize = true;
    LossFlags flags;
};

struct LossBreakdown {
    double ce_f = 0.0;
    double ce_a = 0.0;
    double rel = 0.0;
    double clc = 0.0;
    double cyc_f = 0.0;
    double cyc_a = 0.0;
    double total = 0.0;
};

struct LossTerms {
    Tensor total; // differentiable scalar
    LossBreakdown parts;
};

// Squared Frobenius distance between the two streams' Frobenius-normalised
// Gram matrices, with the frame Gram block-pooled onto the token count.
// Norm denominators carry a 1e-8 guard. Value lies in [0, 4].
Tensor relational_consistency(const Tensor& frame_embed,
                              const Tensor& action_embed);

// Soft-positive InfoNCE between tokens and frames: weights are the
// transposed frame→token attention (optionally renormalised per token),
// similarities are cosine with a 1e-8 norm guard.
Tensor cross_level_contrastive(const Tensor& action_embed,
                               const Tensor& frame_embed,
                               const Tensor& frame_to_token_attn,
                               double temperature, bool renormalize = false);

// Majority label of each contiguous near-equal frame block (the same
// partition the relational pooling uses); ties go to the label that
// appears first in the block.
std::vector<int> token_pseudo_labels(const std::vector<int>& frame_labels,
                                     std::size_t num_tokens);

// Reconstructed-logit cross-entropies: frames from tokens through A and
// tokens from frames through rho.
std::pair<Tensor, Tensor> cycle_consistency(const Tensor& token_logits,
                                            const Tensor& frame_logits,
                                            const Tensor& frame_to_token_attn,
                                            const Tensor& token_to_frame_attn,
                                            const std::vector<int>& frame_labels,
                                            const std::vector<int>& token_labels);

// Mean softmax cross-entropy over rows.
Tensor cross_entropy_rows(const Tensor& logits, const std::vector<int>& labels);

// Plain unweighted sum of the enabled terms.
LossTerms total_loss(const ModelOutput& out,
                     const std::vector<int>& frame_labels,
                     const LossConfig& cfg);

} // namespace dsa
