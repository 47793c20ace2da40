#pragma once

#include <map>
#include <string>
#include <vector>

#include "xfmr/config.hpp"
#include "xfmr/dataset.hpp"
#include "xfmr/metrics.hpp"
#include "xfmr/nn.hpp"

namespace xfmr {

struct TrainConfig {
    double tau = 0.5;
    double lr = 5e-4;
    double weight_decay = 1e-4;
    int epochs = 300;
    std::size_t batch_size = 4096;
    double decay_factor = 0.2;
    int decay_start_epoch = 150;
    int decay_every = 50;
    std::uint64_t seed = 0;
    double beta1 = 0.9, beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t hidden = 512;
    int threads = 1;

    void validate() const;
    static TrainConfig from_config(const Config& cfg, const std::string& section = "train");
    /// Canonical description of every training-relevant field (threads
    /// excluded); used for result caching.
    std::string fingerprint() const;
};

/// Step-decay schedule: the base rate is multiplied by decay_factor at
/// decay_start_epoch and every decay_every epochs after it.
double lr_schedule(int epoch, const TrainConfig& cfg);

struct EpochStat {
    int epoch = 0;
    double lr = 0;
    double train_loss = 0;
    double val_r2 = 0;
};

struct TrainResult {
    SynthesisModel<float> model;
    std::vector<EpochStat> history;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> provenance;
};

/// Trains a synthesis model on the dataset's train split (standardized with
/// the dataset's own normalization statistics). When `init` is given, all of
/// its parameters and running stats are the starting point and every
/// parameter stays trainable; the optimizer state is fresh either way.
TrainResult train(const GridDataset& ds, const TrainConfig& cfg,
                  const SynthesisModel<float>* init = nullptr,
                  std::map<std::string, std::string> provenance = {});

/// Eval-mode R^2 of the physical-parameter predictions on one split
/// ("train", "val" or "test"), computed on de-standardized values.
R2Report evaluate(const SynthesisModel<float>& model, const GridDataset& ds,
                  const std::string& split);

void save_checkpoint(const SynthesisModel<float>& model,
                     const std::map<std::string, std::string>& meta, const std::string& path);
std::pair<SynthesisModel<float>, std::map<std::string, std::string>> load_checkpoint(
    const std::string& path);

void write_history_csv(const std::vector<EpochStat>& history, const std::string& path);

}  // namespace xfmr
