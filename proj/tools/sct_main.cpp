// SPDX-License-Identifier: Apache-2.0
// Command-line front end: dataset generation, training, evaluation,
// attention visualization, accounting, and the attention benchmark.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sct/accounting.hpp"
#include "sct/bench_attn.hpp"
#include "sct/checkpoint.hpp"
#include "sct/error.hpp"
#include "sct/explain.hpp"
#include "sct/model.hpp"
#include "sct/trainer.hpp"
#include "sct/video_io.hpp"

namespace fs = std::filesystem;

namespace {

// Flags shared by every command that needs a model configuration.
struct ConfigFlags {
  std::string config_file;
  std::string preset;
  std::string train_preset;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd, bool with_train) {
    cmd->add_option("--config", config_file, "key=value config file");
    cmd->add_option("--preset", preset, "model preset: sct-s, sct-m, sct-l, sct-tiny");
    if (with_train) cmd->add_option("--train-preset", train_preset, "training preset: k400, k600, ucf101, hmdb51, mmt, desk");
    cmd->add_option("--set", sets, "override one config key (key=value), repeatable");
  }

  // Preset, then config file, then --set overrides.
  std::pair<sct::SctConfig, sct::TrainConfig> resolve(const std::string& default_model,
                                                      const std::string& default_train) const {
    sct::KeyValues file;
    if (!config_file.empty()) file = sct::read_key_values(config_file);
    std::string model_name = default_model, train_name = default_train;
    for (const auto& [k, v] : file) {
      if (k == "preset") model_name = v;
      if (k == "train_preset") train_name = v;
    }
    if (!preset.empty()) model_name = preset;
    if (!train_preset.empty()) train_name = train_preset;
    auto model = sct::model_preset(model_name);
    auto train = sct::train_preset(train_name);
    sct::KeyValues overrides;
    for (const auto& s : sets) {
      const auto kv = sct::parse_key_values(s, "--set");
      overrides.insert(overrides.end(), kv.begin(), kv.end());
    }
    sct::apply_all(file, model, train);
    sct::apply_all(overrides, model, train);
    model.validate();
    return {model, train};
  }
};

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      out.push_back(std::stoul(part));
    } catch (const std::exception&) {
      throw sct::ConfigError("bad length '" + part + "' in --lens");
    }
  }
  return out;
}

// Model config and checkpoint of a finished training run.
sct::SctModel load_run(const std::string& run_dir) {
  sct::SctConfig model;
  sct::TrainConfig train;
  sct::apply_all(sct::read_key_values((fs::path(run_dir) / "config.txt").string()), model, train);
  auto m = sct::SctModel::build(model, 0);
  sct::load_checkpoint(m.params(), (fs::path(run_dir) / "model.sctw").string());
  return m;
}

int run_gen_data(const std::string& task, const std::string& out, std::size_t n, std::uint64_t seed,
                 const sct::SynthTaskConfig& base) {
  auto cfg = base;
  cfg.task = sct::parse_task(task);
  cfg.seed = seed;
  const auto manifest = sct::generate_dataset(cfg, n, out);
  std::cout << "wrote " << n << " clips and " << manifest << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shifted chunk transformer for video classification"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic motion dataset");
  std::string gen_task = "motion-direction-2", gen_out;
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  sct::SynthTaskConfig synth;
  gen->add_option("--task", gen_task, "motion-direction-2 | motion-direction-4 | static-vs-moving")->capture_default_str();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", gen_n, "number of clips")->required();
  gen->add_option("--seed", gen_seed, "dataset seed")->capture_default_str();
  gen->add_option("--frames", synth.frames, "frames per clip")->capture_default_str();
  gen->add_option("--height", synth.height, "frame height")->capture_default_str();
  gen->add_option("--width", synth.width, "frame width")->capture_default_str();
  gen->add_option("--square", synth.square, "square side in pixels")->capture_default_str();
  gen->add_option("--speed", synth.speed, "pixels per frame")->capture_default_str();
  gen->add_option("--noise", synth.noise, "noise stddev as a fraction of 255")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "train a model on a manifest");
  ConfigFlags train_cfg;
  train_cfg.attach(train, true);
  std::string train_data, train_out;
  std::size_t max_steps = 0;
  train->add_option("--data", train_data, "dataset directory or manifest")->required();
  train->add_option("--out", train_out, "run directory")->required();
  train->add_option("--max-steps", max_steps, "stop after this many optimizer steps");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a trained run");
  std::string eval_run, eval_data, eval_out;
  std::size_t eval_views = 1, eval_stride = 1;
  eval->add_option("--run", eval_run, "run directory holding config.txt and model.sctw")->required();
  eval->add_option("--data", eval_data, "dataset directory or manifest")->required();
  eval->add_option("--views", eval_views, "temporal views per video")->capture_default_str();
  eval->add_option("--stride", eval_stride, "frame stride within a view")->capture_default_str();
  eval->add_option("--out", eval_out, "optional per-clip probability CSV");

  // visualize
  auto* vis = app.add_subcommand("visualize", "write attention-rollout heatmaps for one clip");
  std::string vis_run, vis_clip, vis_out;
  bool vis_raw = false;
  vis->add_option("--run", vis_run, "run directory")->required();
  vis->add_option("--clip", vis_clip, "clip file (.sctc)")->required();
  vis->add_option("--out", vis_out, "output directory")->required();
  vis->add_flag("--raw", vis_raw, "skip the residual identity mixing");

  // params / flops
  auto* params = app.add_subcommand("params", "count parameters per module");
  ConfigFlags params_cfg;
  params_cfg.attach(params, false);
  auto* flops = app.add_subcommand("flops", "estimate forward FLOPs per module");
  ConfigFlags flops_cfg;
  flops_cfg.attach(flops, false);

  // bench-attn
  auto* bench = app.add_subcommand("bench-attn", "time dense vs LSH attention over sequence lengths");
  std::string bench_lens = "1024,2048,4096,8192", bench_out;
  sct::BenchConfig bench_cfg;
  bench->add_option("--lens", bench_lens, "comma-separated ascending lengths")->capture_default_str();
  bench->add_option("--repeats", bench_cfg.repeats, "timed repeats per point")->capture_default_str();
  bench->add_option("--head-dim", bench_cfg.head_dim, "per-head width")->capture_default_str();
  bench->add_option("--chunk", bench_cfg.lsh.chunk_size, "LSH sorted-chunk size")->capture_default_str();
  bench->add_option("--rounds", bench_cfg.lsh.n_rounds, "LSH hashing rounds")->capture_default_str();
  bench->add_option("--seed", bench_cfg.seed, "input seed")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return run_gen_data(gen_task, gen_out, gen_n, gen_seed, synth);

    if (*train) {
      auto [mcfg, tcfg] = train_cfg.resolve("sct-tiny", "desk");
      tcfg.validate();
      auto clips = sct::load_dataset(train_data);
      for (const auto& c : clips) {
        if (c.label >= mcfg.num_classes) {
          throw sct::ConfigError("label " + std::to_string(c.label) + " of " + c.id + " exceeds num_classes " +
                                 std::to_string(mcfg.num_classes));
        }
      }
      auto [train_set, val_set] = sct::split_dataset(std::move(clips), tcfg.val_fraction);
      std::cout << "train " << train_set.size() << " clips, val " << val_set.size() << " clips\n";
      auto model = sct::SctModel::build(mcfg, tcfg.seed);
      sct::TrainOptions opt;
      opt.out_dir = train_out;
      opt.log = &std::cout;
      opt.max_steps = max_steps;
      const auto result = sct::train(model, train_set, val_set, tcfg, opt);
      std::cout << "best val acc " << result.best_val_acc << " at epoch " << result.best_epoch << "\n";
      return 0;
    }

    if (*eval) {
      auto model = load_run(eval_run);
      const auto clips = sct::load_dataset(eval_data);
      std::ofstream csv;
      if (!eval_out.empty()) {
        csv.open(eval_out);
        if (!csv) throw sct::IoError("cannot create " + eval_out);
        csv << "clip_id,label,prediction";
        for (std::size_t c = 0; c < model.config().num_classes; ++c) csv << ",p" << c;
        csv << "\n";
      }
      std::size_t correct = 0;
      for (const auto& clip : clips) {
        const auto probs = sct::evaluate_multiview(model, clip, eval_views, eval_stride);
        const auto pred = sct::argmax(probs);
        correct += pred == clip.label;
        if (csv.is_open()) {
          csv << clip.id << "," << clip.label << "," << pred;
          for (double p : probs) csv << "," << p;
          csv << "\n";
        }
      }
      std::cout << "accuracy " << (clips.empty() ? 0.0 : static_cast<double>(correct) / clips.size()) << " over "
                << clips.size() << " clips\n";
      return 0;
    }

    if (*vis) {
      auto model = load_run(vis_run);
      auto clip = sct::read_clip(vis_clip);
      sct::AttentionTrace trace;
      {
        sct::NoGradGuard no_grad;
        sct::ForwardOptions fo;
        fo.trace = &trace;
        model.forward(clip, fo);
      }
      sct::RolloutOptions ro;
      ro.raw = vis_raw;
      const auto map = sct::rollout(trace, ro);
      std::error_code ec;
      fs::create_directories(vis_out, ec);
      if (ec) throw sct::IoError("cannot create directory " + vis_out + ": " + ec.message());
      for (std::size_t f = 0; f < clip.frames; ++f) {
        const auto heat = sct::upsample_nearest(map, f, clip.height, clip.width);
        const auto path = (fs::path(vis_out) / (clip.id + "_f" + std::to_string(f) + ".ppm")).string();
        sct::write_heatmap(heat, clip, f, path);
      }
      sct::write_frame_weights_csv(clip.id, sct::frame_weights(trace),
                                   (fs::path(vis_out) / (clip.id + "_frames.csv")).string());
      std::cout << "wrote " << clip.frames << " heatmaps to " << vis_out << "\n";
      return 0;
    }

    if (*params) {
      const auto cfg = params_cfg.resolve("sct-s", "k400").first;
      std::cout << cfg.name << " parameters\n" << sct::format_report(sct::count_params(cfg), "M", 1e6);
      return 0;
    }

    if (*flops) {
      const auto cfg = flops_cfg.resolve("sct-s", "k400").first;
      std::cout << cfg.name << " forward FLOPs per clip\n" << sct::format_report(sct::estimate_flops(cfg), "G", 1e9);
      return 0;
    }

    if (*bench) {
      bench_cfg.lengths = parse_lengths(bench_lens);
      const auto rows = sct::bench_attn(bench_cfg, &std::cerr);
      std::ofstream out(bench_out);
      if (!out) throw sct::IoError("cannot create " + bench_out);
      out << sct::bench_csv(rows);
      std::cout << sct::bench_csv(rows);
      return 0;
    }
  } catch (const sct::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
