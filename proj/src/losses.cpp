#include "dsa/losses.hpp"

#include <algorithm>
#include <map>
#include <string>

namespace dsa {

namespace {

constexpr double kNormEps = 1e-8;

// x / (‖x‖_F + eps)
Tensor frobenius_normalize(const Tensor& x) {
    Tensor inv = reciprocal(add_const(frobenius_norm(x), kNormEps));
    return mul_scalar(x, inv);
}

// rows scaled to (near-)unit norm with the eps guard
Tensor normalize_rows(const Tensor& x) {
    Tensor inv = reciprocal(add_const(row_norms(x), kNormEps));
    return scale_rows(x, inv);
}

} // namespace

Tensor relational_consistency(const Tensor& frame_embed,
                              const Tensor& action_embed) {
    const std::size_t num_frames = frame_embed.rows();
    const std::size_t num_tokens = action_embed.rows();
    if (num_tokens < 1 || num_tokens > num_frames) {
        throw ContractError("relational_consistency: need 1 <= tokens (" +
                            std::to_string(num_tokens) + ") <= frames (" +
                            std::to_string(num_frames) + ")");
    }
    Tensor gram_f = matmul(frame_embed, transpose(frame_embed));
    Tensor gram_a = matmul(action_embed, transpose(action_embed));
    Tensor pooled = block_mean_pool(gram_f, num_tokens);
    Tensor diff = sub(frobenius_normalize(pooled), frobenius_normalize(gram_a));
    return sum_all(mul(diff, diff));
}

Tensor cross_level_contrastive(const Tensor& action_embed,
                               const Tensor& frame_embed,
                               const Tensor& frame_to_token_attn,
                               double temperature, bool renormalize) {
    if (temperature <= 0.0) {
        throw ContractError("cross_level_contrastive: temperature must be "
                            "positive");
    }
    const std::size_t num_tokens = action_embed.rows();
    const std::size_t num_frames = frame_embed.rows();
    if (frame_to_token_attn.rows() != num_frames ||
        frame_to_token_attn.cols() != num_tokens) {
        throw ShapeError("cross_level_contrastive: attention " +
                         shape_str(frame_to_token_attn.shape()) +
                         " does not pair " + std::to_string(num_frames) +
                         " frames with " + std::to_string(num_tokens) +
                         " tokens");
    }
    if (action_embed.cols() != frame_embed.cols()) {
        throw ShapeError("cross_level_contrastive: embedding widths differ: " +
                         shape_str(action_embed.shape()) + " vs " +
                         shape_str(frame_embed.shape()));
    }
    // token-major cosine similarities, temperature-scaled
    Tensor sims = matmul(normalize_rows(action_embed),
                         transpose(normalize_rows(frame_embed)));
    Tensor log_probs = log_softmax_rows(scale(sims, 1.0 / temperature));
    Tensor weights = transpose(frame_to_token_attn); // M×L, token-major
    if (renormalize) {
        weights = scale_rows(weights,
                             reciprocal(add_const(
                                 matmul(weights,
                                        Tensor::full({num_frames, 1}, 1.0)),
                                 kNormEps)));
    }
    return scale(sum_all(mul(weights, log_probs)), -1.0);
}

std::vector<int> token_pseudo_labels(const std::vector<int>& frame_labels,
                                     std::size_t num_tokens) {
    const std::size_t num_frames = frame_labels.size();
    if (num_tokens < 1 || num_tokens > num_frames) {
        throw ContractError("token_pseudo_labels: need 1 <= tokens (" +
                            std::to_string(num_tokens) + ") <= frames (" +
                            std::to_string(num_frames) + ")");
    }
    std::vector<int> out(num_tokens);
    for (std::size_t b = 0; b < num_tokens; ++b) {
        const auto [lo, hi] = block_bounds(num_frames, num_tokens, b);
        std::map<int, std::pair<std::size_t, std::size_t>> counts; // count, first seen
        for (std::size_t t = lo; t < hi; ++t) {
            auto it = counts.find(frame_labels[t]);
            if (it == counts.end()) {
                counts[frame_labels[t]] = {1, t};
            } else {
                it->second.first += 1;
            }
        }
        int best = frame_labels[lo];
        std::size_t best_count = 0, best_first = hi;
        for (const auto& [label, cf] : counts) {
            if (cf.first > best_count ||
                (cf.first == best_count && cf.second < best_first)) {
                best = label;
                best_count = cf.first;
                best_first = cf.second;
            }
        }
        out[b] = best;
    }
    return out;
}

std::pair<Tensor, Tensor> cycle_consistency(
    const Tensor& token_logits, const Tensor& frame_logits,
    const Tensor& frame_to_token_attn, const Tensor& token_to_frame_attn,
    const std::vector<int>& frame_labels,
    const std::vector<int>& token_labels) {
    Tensor rebuilt_frames = matmul(frame_to_token_attn, token_logits); // L×C
    Tensor rebuilt_tokens = matmul(token_to_frame_attn, frame_logits); // M×C
    return {cross_entropy_rows(rebuilt_frames, frame_labels),
            cross_entropy_rows(rebuilt_tokens, token_labels)};
}

Tensor cross_entropy_rows(const Tensor& logits,
                          const std::vector<int>& labels) {
    return nll_rows(log_softmax_rows(logits), labels);
}

LossTerms total_loss(const ModelOutput& out,
                     const std::vector<int>& frame_labels,
                     const LossConfig& cfg) {
    const std::size_t num_tokens = out.token_logits.rows();
    const std::vector<int> token_labels =
        token_pseudo_labels(frame_labels, num_tokens);

    LossTerms terms;
    Tensor total = Tensor::zeros({1});
    auto accumulate = [&](const Tensor& part, double& slot) {
        slot = part.item();
        total = add(total, part);
    };

    if (cfg.flags.ce_frames) {
        accumulate(cross_entropy_rows(out.frame_logits, frame_labels),
                   terms.parts.ce_f);
    }
    if (cfg.flags.ce_tokens) {
        accumulate(cross_entropy_rows(out.token_logits, token_labels),
                   terms.parts.ce_a);
    }
    if (cfg.flags.relational) {
        accumulate(relational_consistency(out.frame_embed, out.action_embed),
                   terms.parts.rel);
    }
    if (cfg.flags.contrastive) {
        accumulate(cross_level_contrastive(out.action_embed, out.frame_embed,
                                           out.maps.frame_to_token,
                                           cfg.temperature,
                                           cfg.clc_renormalize),
                   terms.parts.clc);
    }
    if (cfg.flags.cycle) {
        auto [cyc_f, cyc_a] = cycle_consistency(
            out.token_logits, out.frame_logits, out.maps.frame_to_token,
            out.maps.token_to_frame, frame_labels, token_labels);
        accumulate(cyc_f, terms.parts.cyc_f);
        accumulate(cyc_a, terms.parts.cyc_a);
    }
    terms.total = total;
    terms.parts.total = total.item();
    return terms;
}

} // namespace dsa
