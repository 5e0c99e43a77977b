// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sct/config.hpp"
#include "sct/model.hpp"

namespace sct {

// Linear warmup from 0 to base_lr over warmup_steps, then cosine decay to 0
// at total_steps.
double lr_schedule(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr);

// Heavy-ball momentum: v = momentum * v + g; p = p - lr * v.
void sgd_momentum_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity, double lr,
                         double momentum);

// Applies the update to every parameter using its accumulated gradient.
// `velocity` is resized on first use.
void sgd_momentum_step(ParameterStore& store, std::vector<std::vector<double>>& velocity, double lr, double momentum);

// Global L2 norm of every accumulated gradient. When it exceeds max_norm
// (> 0) all gradients are scaled down to that norm. Returns the norm before
// scaling.
double clip_grad_norm(ParameterStore& store, double max_norm);

// Frame indices of one temporal view: T frames `stride` apart from `start`,
// clamped to the last frame.
std::vector<std::size_t> view_frames(std::size_t video_frames, std::size_t clip_frames, std::size_t stride,
                                     std::size_t start);
// Evenly spaced view starts; a single view is centered.
std::vector<std::size_t> view_starts(std::size_t video_frames, std::size_t clip_frames, std::size_t stride,
                                     std::size_t n_views);

// Mean of the per-view softmax vectors.
std::vector<double> evaluate_multiview(const SctModel& model, const VideoClip& video, std::size_t n_views,
                                       std::size_t stride = 1);

// Fraction of clips whose multi-view argmax matches the label.
double evaluate_accuracy(const SctModel& model, const std::vector<VideoClip>& clips, std::size_t n_views,
                         std::size_t stride = 1);

// The last round(val_fraction * n) clips become the validation split.
std::pair<std::vector<VideoClip>, std::vector<VideoClip>> split_dataset(std::vector<VideoClip> clips,
                                                                        double val_fraction);

struct EpochMetrics {
  std::size_t epoch = 0, step = 0;
  double lr = 0.0, train_loss = 0.0, train_acc = 0.0, val_acc = 0.0;
};

inline constexpr const char* kMetricsHeader = "epoch,step,lr,train_loss,train_acc,val_acc";
std::string format_metrics_row(const EpochMetrics& m);

struct TrainOptions {
  // When set, receives metrics.csv, config.txt and the best-validation
  // checkpoint model.sctw.
  std::string out_dir;
  std::ostream* log = nullptr;
  // Stop after this many optimizer steps (0 = run every epoch).
  std::size_t max_steps = 0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  double best_val_acc = -1.0;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
};

// Mini-batch SGD with per-clip forward/backward and gradients averaged over
// the batch in a fixed order. Throws TrainingError on a non-finite loss.
TrainResult train(SctModel& model, const std::vector<VideoClip>& train_set, const std::vector<VideoClip>& val_set,
                  const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace sct
