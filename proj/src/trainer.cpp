#include "dsa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <ostream>
#include <random>

#include "dsa/metrics.hpp"

namespace dsa {

AdamOptimizer::AdamOptimizer(std::vector<Tensor> params, double lr,
                             double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      epsilon_(epsilon) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i].assign(params_[i].size(), 0.0);
        v_[i].assign(params_[i].size(), 0.0);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bias1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto grad = params_[i].grad();
        if (grad.empty()) continue;
        auto vals = params_[i].values_mut();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double g = grad[j];
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            const double mh = m[j] / bias1;
            const double vh = v[j] / bias2;
            vals[j] -= lr_ * mh / (std::sqrt(vh) + epsilon_);
        }
    }
}

namespace {

void clip_gradients(std::vector<Tensor>& params, double max_norm) {
    double total = 0.0;
    for (const Tensor& p : params) {
        for (double g : p.grad()) total += g * g;
    }
    total = std::sqrt(total);
    if (total <= max_norm || total == 0.0) return;
    const double factor = max_norm / total;
    for (Tensor& p : params) {
        for (double& g : p.grad_mut()) g *= factor;
    }
}

} // namespace

std::string epoch_csv_header() {
    return "epoch,ce_f,ce_a,rel,clc,cyc_f,cyc_a,total,frame_acc,edit\n";
}

std::string epoch_csv_row(const EpochStats& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f,%.4f\n",
                  s.epoch, s.loss.ce_f, s.loss.ce_a, s.loss.rel, s.loss.clc,
                  s.loss.cyc_f, s.loss.cyc_a, s.loss.total, s.frame_acc,
                  s.edit);
    return buf;
}

std::vector<EpochStats> train_model(Model& model,
                                    std::span<const VideoSample> videos,
                                    const TrainOptions& opts,
                                    std::ostream* log_csv,
                                    std::ostream* progress) {
    if (videos.empty()) throw ContractError("train_model: no training videos");
    for (const VideoSample& v : videos) {
        if (v.labels.size() != v.features.rows()) {
            throw ContractError("video " + v.id + ": feature/label length "
                                "mismatch");
        }
        if (v.labels.size() < model.config().num_tokens) {
            throw ContractError(
                "video " + v.id + " is shorter (" +
                std::to_string(v.labels.size()) + ") than the token count (" +
                std::to_string(model.config().num_tokens) + ")");
        }
    }

    std::vector<Tensor> params;
    params.reserve(model.parameters().size());
    for (const auto& [name, t] : model.parameters()) params.push_back(t);
    AdamOptimizer adam(params, opts.learning_rate, opts.beta1, opts.beta2,
                       opts.epsilon);

    if (log_csv) *log_csv << epoch_csv_header();

    std::mt19937_64 shuffle_rng(opts.shuffle_seed);
    std::vector<std::size_t> order(videos.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<EpochStats> history;
    history.reserve(opts.epochs);
    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochStats stats;
        stats.epoch = epoch;
        double acc_sum = 0.0, edit_sum = 0.0;
        for (std::size_t idx : order) {
            const VideoSample& video = videos[idx];
            ModelOutput out = model.forward(video.features);
            LossTerms terms = total_loss(out, video.labels, opts.loss);
            backward(terms.total);
            if (opts.clip_norm > 0.0) clip_gradients(params, opts.clip_norm);
            adam.step();

            stats.loss.ce_f += terms.parts.ce_f;
            stats.loss.ce_a += terms.parts.ce_a;
            stats.loss.rel += terms.parts.rel;
            stats.loss.clc += terms.parts.clc;
            stats.loss.cyc_f += terms.parts.cyc_f;
            stats.loss.cyc_a += terms.parts.cyc_a;
            stats.loss.total += terms.parts.total;

            const std::vector<int> pred = predict_labels(out.frame_logits);
            acc_sum += frame_accuracy(pred, video.labels);
            edit_sum += edit_score(pred, video.labels);
        }
        const double n = static_cast<double>(videos.size());
        stats.loss.ce_f /= n;
        stats.loss.ce_a /= n;
        stats.loss.rel /= n;
        stats.loss.clc /= n;
        stats.loss.cyc_f /= n;
        stats.loss.cyc_a /= n;
        stats.loss.total /= n;
        stats.frame_acc = acc_sum / n;
        stats.edit = edit_sum / n;
        history.push_back(stats);

        if (log_csv) *log_csv << epoch_csv_row(stats);
        if (progress && opts.log_every > 0 &&
            (epoch % opts.log_every == 0 || epoch == opts.epochs)) {
            char line[160];
            std::snprintf(line, sizeof(line),
                          "epoch %4zu  loss %.4f  acc %.2f  edit %.2f\n",
                          epoch, stats.loss.total, stats.frame_acc,
                          stats.edit);
            *progress << line << std::flush;
        }
        if (opts.checkpoint_every > 0 && !opts.checkpoint_dir.empty() &&
            epoch % opts.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "epoch_%04zu.ckpt", epoch);
            std::filesystem::create_directories(opts.checkpoint_dir);
            save_checkpoint(model,
                            (std::filesystem::path(opts.checkpoint_dir) / name)
                                .string());
        }
    }
    return history;
}

} // namespace dsa
