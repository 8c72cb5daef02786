#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dsa/data.hpp"
#include "dsa/losses.hpp"
#include "dsa/model.hpp"

namespace dsa {

struct TrainOptions {
    std::size_t epochs = 200;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0; // 0 disables clipping
    std::uint64_t shuffle_seed = 1;
    std::size_t checkpoint_every = 50; // epochs; 0 disables
    std::string checkpoint_dir;        // required when checkpoint_every > 0
    std::size_t log_every = 0;         // progress lines to `progress`; 0 = off
    LossConfig loss;
};

struct EpochStats {
    std::size_t epoch = 0;
    LossBreakdown loss;   // means over the epoch's videos
    double frame_acc = 0.0;
    double edit = 0.0;
};

class AdamOptimizer {
  public:
    AdamOptimizer(std::vector<Tensor> params, double lr, double beta1,
                  double beta2, double epsilon);

    // Applies one update from the gradients currently stored on the
    // parameters. Parameters without a populated gradient are skipped.
    void step();

  private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, epsilon_;
    std::uint64_t t_ = 0;
};

// One video per optimisation step, one seeded-shuffle pass per epoch.
// Per-epoch losses and training metrics stream to `log_csv` when given.
std::vector<EpochStats> train_model(Model& model,
                                    std::span<const VideoSample> videos,
                                    const TrainOptions& opts,
                                    std::ostream* log_csv = nullptr,
                                    std::ostream* progress = nullptr);

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochStats& s);

} // namespace dsa
