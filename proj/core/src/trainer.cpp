// SPDX-License-Identifier: Apache-2.0
#include "sct/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include "sct/checkpoint.hpp"
#include "sct/error.hpp"

namespace sct {

namespace fs = std::filesystem;

double lr_schedule(std::size_t step, std::size_t total_steps, std::size_t warmup_steps, double base_lr) {
  if (step < warmup_steps) return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return base_lr;
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

void sgd_momentum_update(std::span<double> param, std::span<const double> grad, std::span<double> velocity, double lr,
                         double momentum) {
  if (param.size() != grad.size() || param.size() != velocity.size()) {
    throw DimensionError("sgd update: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    param[i] -= lr * velocity[i];
  }
}

void sgd_momentum_step(ParameterStore& store, std::vector<std::vector<double>>& velocity, double lr, double momentum) {
  auto& params = store.all();
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const auto& p : params) velocity.emplace_back(p.tensor.numel(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = params[i].tensor;
    if (!t.has_grad()) continue;
    sgd_momentum_update(t.mutable_data(), t.grad(), velocity[i], lr, momentum);
  }
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  double sq = 0.0;
  for (const auto& p : store.all()) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& p : store.all()) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= f;
    }
  }
  return norm;
}

std::vector<std::size_t> view_frames(std::size_t video_frames, std::size_t clip_frames, std::size_t stride,
                                     std::size_t start) {
  if (video_frames == 0) throw ContractError("video has no frames");
  std::vector<std::size_t> idx(clip_frames);
  for (std::size_t i = 0; i < clip_frames; ++i) idx[i] = std::min(start + i * stride, video_frames - 1);
  return idx;
}

std::vector<std::size_t> view_starts(std::size_t video_frames, std::size_t clip_frames, std::size_t stride,
                                     std::size_t n_views) {
  if (n_views < 1) throw ConfigError("n_views must be at least 1");
  const auto span = (clip_frames - 1) * stride + 1;
  const auto slack = video_frames > span ? video_frames - span : 0;
  std::vector<std::size_t> starts(n_views);
  if (n_views == 1) {
    starts[0] = slack / 2;
    return starts;
  }
  for (std::size_t v = 0; v < n_views; ++v) {
    starts[v] = static_cast<std::size_t>(
        std::lround(static_cast<double>(v) * static_cast<double>(slack) / static_cast<double>(n_views - 1)));
  }
  return starts;
}

std::vector<double> evaluate_multiview(const SctModel& model, const VideoClip& video, std::size_t n_views,
                                       std::size_t stride) {
  const auto T = model.config().frames;
  const auto starts = view_starts(video.frames, T, stride, n_views);
  NoGradGuard no_grad;
  std::vector<double> mean(model.config().num_classes, 0.0);
  for (auto start : starts) {
    auto view = video.select_frames(view_frames(video.frames, T, stride, start));
    const auto logits = model.forward(view);
    const auto probs = predict_probs(logits.data());
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += probs[c];
  }
  for (auto& v : mean) v /= static_cast<double>(starts.size());
  return mean;
}

double evaluate_accuracy(const SctModel& model, const std::vector<VideoClip>& clips, std::size_t n_views,
                         std::size_t stride) {
  if (clips.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& clip : clips) correct += argmax(evaluate_multiview(model, clip, n_views, stride)) == clip.label;
  return static_cast<double>(correct) / static_cast<double>(clips.size());
}

std::pair<std::vector<VideoClip>, std::vector<VideoClip>> split_dataset(std::vector<VideoClip> clips,
                                                                        double val_fraction) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must lie in [0, 1)");
  const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(clips.size())));
  std::vector<VideoClip> val(std::make_move_iterator(clips.end() - static_cast<std::ptrdiff_t>(n_val)),
                             std::make_move_iterator(clips.end()));
  clips.resize(clips.size() - n_val);
  return {std::move(clips), std::move(val)};
}

std::string format_metrics_row(const EpochMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%.9g,%.9g", m.epoch, m.step, m.lr, m.train_loss, m.train_acc,
                m.val_acc);
  return buf;
}

TrainResult train(SctModel& model, const std::vector<VideoClip>& train_set, const std::vector<VideoClip>& val_set,
                  const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (train_set.empty()) throw ContractError("training set is empty");
  const auto& mcfg = model.config();
  model.set_dropout(cfg.dropout);

  std::ofstream metrics;
  if (!options.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.out_dir, ec);
    if (ec) throw IoError("cannot create directory " + options.out_dir + ": " + ec.message());
    const auto cfg_path = (fs::path(options.out_dir) / "config.txt").string();
    std::ofstream cfg_out(cfg_path);
    if (!cfg_out) throw IoError("cannot create " + cfg_path);
    cfg_out << to_key_values(mcfg) << to_key_values(cfg);
    const auto metrics_path = (fs::path(options.out_dir) / "metrics.csv").string();
    metrics.open(metrics_path, std::ios::trunc);
    if (!metrics) throw IoError("cannot create " + metrics_path);
    metrics << kMetricsHeader << "\n";
  }

  const auto n = train_set.size();
  const auto steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const auto total_steps = steps_per_epoch * cfg.epochs;
  const auto warmup_steps = steps_per_epoch * cfg.warmup_epochs;
  const auto T = mcfg.frames;
  auto& store = model.params();
  std::vector<std::vector<double>> velocity;
  TrainResult result;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto shuffle_rng = Rng::derive(cfg.seed, epoch);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    double lr = 0.0;
    bool stop = false;
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      lr = lr_schedule(step, total_steps, warmup_steps, cfg.lr);
      const auto begin = b * cfg.batch_size;
      const auto end = std::min(n, begin + cfg.batch_size);
      const double inv = 1.0 / static_cast<double>(end - begin);
      store.zero_grad();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& video = train_set[order[i]];
        auto rng = Rng::derive(cfg.seed ^ 0x9e3779b97f4a7c15ull, step * cfg.batch_size + (i - begin));
        const auto span = (T - 1) * cfg.frame_stride + 1;
        const auto start = video.frames > span ? rng.below(video.frames - span + 1) : 0;
        auto clip = video.select_frames(view_frames(video.frames, T, cfg.frame_stride, start));
        ForwardOptions fo;
        fo.train = true;
        fo.rng = &rng;
        auto logits = model.forward(clip, fo);
        auto loss = label_smoothed_cross_entropy(logits, video.label, cfg.label_smoothing);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          std::string ids;
          for (std::size_t j = begin; j < end; ++j) ids += (ids.empty() ? "" : " ") + train_set[order[j]].id;
          const auto msg = "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                           " (step " + std::to_string(step) + "), clip " + video.id + "; batch clips: " + ids;
          if (!options.out_dir.empty()) {
            std::ofstream dump(fs::path(options.out_dir) / "nan_batch.txt");
            dump << msg << "\n";
          }
          throw TrainingError(msg);
        }
        loss_sum += value;
        correct += argmax(logits.data()) == video.label;
        ++seen;
        scale(loss, inv).backward();
      }
      if (cfg.grad_clip > 0.0) clip_grad_norm(store, cfg.grad_clip);
      sgd_momentum_step(store, velocity, lr, cfg.momentum);
      ++step;
      if (options.max_steps && step >= options.max_steps) {
        stop = true;
        break;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.step = step;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(seen);
    m.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
    m.val_acc = evaluate_accuracy(model, val_set, cfg.n_views, cfg.frame_stride);
    result.history.push_back(m);
    if (metrics.is_open()) metrics << format_metrics_row(m) << "\n" << std::flush;
    const bool improved = val_set.empty() || m.val_acc > result.best_val_acc;
    if (improved) {
      result.best_val_acc = m.val_acc;
      result.best_epoch = epoch;
      if (!options.out_dir.empty()) save_checkpoint(store, (fs::path(options.out_dir) / "model.sctw").string());
    }
    if (options.log) {
      const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      char buf[200];
      std::snprintf(buf, sizeof(buf), "epoch %zu  lr %.4g  loss %.4f  train %.3f  val %.3f  (%.1fs)\n", epoch, m.lr,
                    m.train_loss, m.train_acc, m.val_acc, secs);
      *options.log << buf << std::flush;
    }
    if (stop) break;
  }
  result.steps = step;
  return result;
}

}  // namespace sct
