// SPDX-License-Identifier: Apache-2.0
#include "sct/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "sct/error.hpp"

namespace sct {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("key " + key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError("key " + key + ": expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key " + key + ": expected true or false, got '" + v + "'");
}

// Accepts "4,6,8,8" for the four attention types in order.
void parse_heads(const std::string& key, const std::string& v, SctConfig& cfg) {
  std::vector<std::size_t> vals;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) vals.push_back(parse_size(key, trim(part)));
  if (vals.size() != 4) throw ConfigError("key heads: expected four comma-separated counts, got '" + v + "'");
  cfg.heads_vilt = vals[0];
  cfg.heads_lsh = vals[1];
  cfg.heads_shift = vals[2];
  cfg.heads_clip = vals[3];
}

using ModelSetter = std::function<void(SctConfig&, const std::string&, const std::string&)>;
using TrainSetter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

#define SCT_SIZE(field) [](auto& c, const std::string& k, const std::string& v) { c.field = parse_size(k, v); }
#define SCT_REAL(field) [](auto& c, const std::string& k, const std::string& v) { c.field = parse_real(k, v); }
#define SCT_BOOL(field) [](auto& c, const std::string& k, const std::string& v) { c.field = parse_bool(k, v); }

const std::map<std::string, ModelSetter>& model_keys() {
  static const std::map<std::string, ModelSetter> keys = {
      {"name", [](SctConfig& c, const std::string&, const std::string& v) { c.name = v; }},
      {"frames", SCT_SIZE(frames)},
      {"height", SCT_SIZE(height)},
      {"width", SCT_SIZE(width)},
      {"patch_h", SCT_SIZE(patch_h)},
      {"patch_w", SCT_SIZE(patch_w)},
      {"chunk_rows", SCT_SIZE(chunk_rows)},
      {"chunk_cols", SCT_SIZE(chunk_cols)},
      {"stages", SCT_SIZE(stages)},
      {"embed_dim", SCT_SIZE(embed_dim)},
      {"mlp_dim", SCT_SIZE(mlp_dim)},
      {"vilt_blocks", SCT_SIZE(vilt_blocks)},
      {"heads", [](SctConfig& c, const std::string& k, const std::string& v) { parse_heads(k, v, c); }},
      {"heads_vilt", SCT_SIZE(heads_vilt)},
      {"heads_lsh", SCT_SIZE(heads_lsh)},
      {"heads_shift", SCT_SIZE(heads_shift)},
      {"heads_clip", SCT_SIZE(heads_clip)},
      {"clip_dim", SCT_SIZE(clip_dim)},
      {"clip_mlp", SCT_SIZE(clip_mlp)},
      {"clip_blocks", SCT_SIZE(clip_blocks)},
      {"num_classes", SCT_SIZE(num_classes)},
      {"lsh_buckets", SCT_SIZE(lsh.n_buckets)},
      {"lsh_rounds", SCT_SIZE(lsh.n_rounds)},
      {"lsh_chunk", SCT_SIZE(lsh.chunk_size)},
      {"lsh_previous_chunk", SCT_BOOL(lsh.attend_previous_chunk)},
      {"lsh_include_self", SCT_BOOL(lsh.include_self)},
      {"lsh_seed", SCT_SIZE(lsh.seed)},
      {"global_attention",
       [](SctConfig& c, const std::string& k, const std::string& v) {
         if (v == "lsh") c.global_attention = GlobalAttention::kLsh;
         else if (v == "dense") c.global_attention = GlobalAttention::kDense;
         else throw ConfigError("key " + k + ": expected lsh or dense, got '" + v + "'");
       }},
      {"attention",
       [](SctConfig& c, const std::string& k, const std::string& v) {
         if (v == "shifted") c.temporal_attention = TemporalAttention::kShifted;
         else if (v == "space") c.temporal_attention = TemporalAttention::kSpace;
         else throw ConfigError("key " + k + ": expected shifted or space, got '" + v + "'");
       }},
      {"shift_frames", SCT_SIZE(shift_frames)},
      {"shift_layers", SCT_SIZE(shift_layers)},
      {"attn_residual", SCT_BOOL(attn_residual)},
      {"model_dropout", SCT_REAL(dropout)},
      {"init",
       [](SctConfig& c, const std::string& k, const std::string& v) {
         if (v == "trunc_normal") c.init = InitScheme::kTruncatedNormal;
         else if (v == "glorot") c.init = InitScheme::kGlorot;
         else throw ConfigError("key " + k + ": expected trunc_normal or glorot, got '" + v + "'");
       }},
  };
  return keys;
}

const std::map<std::string, TrainSetter>& train_keys() {
  static const std::map<std::string, TrainSetter> keys = {
      {"epochs", SCT_SIZE(epochs)},
      {"batch_size", SCT_SIZE(batch_size)},
      {"momentum", SCT_REAL(momentum)},
      {"lr", SCT_REAL(lr)},
      {"warmup_epochs", SCT_SIZE(warmup_epochs)},
      {"label_smoothing", SCT_REAL(label_smoothing)},
      {"dropout", SCT_REAL(dropout)},
      {"grad_clip", SCT_REAL(grad_clip)},
      {"frame_rate", SCT_SIZE(frame_rate)},
      {"frame_stride", SCT_SIZE(frame_stride)},
      {"n_views", SCT_SIZE(n_views)},
      {"val_fraction", SCT_REAL(val_fraction)},
      {"seed", SCT_SIZE(seed)},
  };
  return keys;
}

#undef SCT_SIZE
#undef SCT_REAL
#undef SCT_BOOL

const char* name_of(GlobalAttention g) { return g == GlobalAttention::kLsh ? "lsh" : "dense"; }
const char* name_of(TemporalAttention t) { return t == TemporalAttention::kShifted ? "shifted" : "space"; }

}  // namespace

void SctConfig::validate() const {
  auto fail = [&](const std::string& msg) { throw ConfigError(name + ": " + msg); };
  if (frames == 0) fail("frames must be positive");
  if (stages == 0) fail("stages must be positive");
  if (patch_h == 0 || patch_w == 0) fail("patch size must be positive");
  if (height == 0 || width == 0 || height % patch_h != 0 || width % patch_w != 0) {
    fail("crop " + std::to_string(height) + "x" + std::to_string(width) + " is not a multiple of the patch size");
  }
  if (chunk_rows == 0 || chunk_cols == 0) fail("chunk size must be positive");
  if (embed_dim == 0 || mlp_dim == 0 || clip_dim == 0 || clip_mlp == 0) fail("widths must be positive");
  if (clip_blocks == 0) fail("clip_blocks must be at least 1");
  if (num_classes == 0) fail("num_classes must be positive");
  if (frames > 1 && shift_frames >= frames) {
    fail("shift_frames " + std::to_string(shift_frames) + " must be smaller than frames " + std::to_string(frames));
  }
  if (dropout < 0.0 || dropout >= 1.0) fail("model_dropout must lie in [0, 1)");
  lsh.validate();
  for (std::size_t s = 0; s < stages; ++s) {
    auto check = [&](std::size_t dim, std::size_t heads, const char* what) {
      if (heads == 0 || dim % heads != 0) {
        fail("stage " + std::to_string(s) + ": " + std::to_string(heads) + " " + what + " heads do not divide width " +
             std::to_string(dim));
      }
    };
    check(stage_dim(s), heads_vilt, "ViLT");
    check(stage_dim(s), heads_lsh, "LSH");
    check(temporal_dim(s), heads_shift, "shifted-MSA");
  }
  if (heads_clip == 0 || clip_dim % heads_clip != 0) {
    fail(std::to_string(heads_clip) + " clip heads do not divide width " + std::to_string(clip_dim));
  }
}

SctConfig model_preset(const std::string& name) {
  SctConfig c;
  c.name = name;
  if (name == "sct-s" || name == "sct-m" || name == "sct-l") {
    c.frames = 24;
    c.height = c.width = 224;
    c.patch_h = c.patch_w = 4;
    c.chunk_rows = c.chunk_cols = 7;
    c.clip_dim = 192;
    c.clip_mlp = 768;
    c.clip_blocks = 4;
    c.num_classes = 400;
    c.dropout = 0.2;
    if (name == "sct-s") {
      c.embed_dim = 96, c.mlp_dim = 384, c.vilt_blocks = 4;
      c.heads_vilt = 4, c.heads_lsh = 6, c.heads_shift = 8, c.heads_clip = 8;
    } else if (name == "sct-m") {
      c.embed_dim = 128, c.mlp_dim = 512, c.vilt_blocks = 6;
      c.heads_vilt = 4, c.heads_lsh = 8, c.heads_shift = 8, c.heads_clip = 8;
    } else {
      c.embed_dim = 192, c.mlp_dim = 768, c.vilt_blocks = 4;
      c.heads_vilt = 4, c.heads_lsh = 6, c.heads_shift = 8, c.heads_clip = 8;
    }
    return c;
  }
  if (name == "sct-tiny") {
    c.frames = 8;
    c.height = c.width = 32;
    c.patch_h = c.patch_w = 4;
    c.chunk_rows = c.chunk_cols = 4;
    c.embed_dim = 32, c.mlp_dim = 64, c.vilt_blocks = 1;
    c.heads_vilt = c.heads_lsh = c.heads_shift = c.heads_clip = 2;
    c.clip_dim = 32, c.clip_mlp = 64, c.clip_blocks = 2;
    c.num_classes = 2;
    c.dropout = 0.0;
    // Two stages, the attention residual and Glorot init keep SGD training
    // stable at this width; the full four-stage stack stalls on the desk task.
    c.stages = 2;
    c.attn_residual = true;
    c.init = InitScheme::kGlorot;
    c.lsh.chunk_size = 16, c.lsh.n_rounds = 2;
    return c;
  }
  throw ConfigError("unknown model preset '" + name + "'");
}

std::vector<std::string> model_preset_names() { return {"sct-s", "sct-m", "sct-l", "sct-tiny"}; }

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (warmup_epochs >= epochs) throw ConfigError("warmup_epochs must be smaller than epochs");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  // lr = 0 is accepted for frozen dry runs.
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a non-negative number");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw ConfigError("label_smoothing must lie in [0, 1)");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (!(grad_clip >= 0.0) || !std::isfinite(grad_clip)) throw ConfigError("grad_clip must be a non-negative number");
  if (n_views == 0) throw ConfigError("n_views must be at least 1");
  if (frame_stride == 0) throw ConfigError("frame_stride must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must lie in [0, 1)");
}

TrainConfig train_preset(const std::string& name) {
  TrainConfig t;
  if (name == "k400" || name == "k600") {
    t.frame_rate = 5, t.frame_stride = 10;
    t.warmup_epochs = 2, t.lr = 0.3, t.label_smoothing = 0.1, t.dropout = 0.2;
  } else if (name == "ucf101") {
    t.frame_rate = 10, t.frame_stride = 8;
    t.warmup_epochs = 3, t.lr = 0.25, t.label_smoothing = 0.0, t.dropout = 0.0;
  } else if (name == "hmdb51") {
    t.frame_rate = 10, t.frame_stride = 8;
    t.warmup_epochs = 4, t.lr = 0.25, t.label_smoothing = 0.0, t.dropout = 0.0;
  } else if (name == "mmt") {
    t.frame_rate = 8, t.frame_stride = 10;
    t.warmup_epochs = 2, t.lr = 0.3, t.label_smoothing = 0.3, t.dropout = 0.2;
  } else if (name == "desk") {
    t.epochs = 6, t.batch_size = 8, t.lr = 0.02, t.warmup_epochs = 1;
    t.label_smoothing = 0.0, t.dropout = 0.0, t.grad_clip = 1.0;
    t.frame_rate = 1, t.frame_stride = 1, t.n_views = 1;
  } else {
    throw ConfigError("unknown training preset '" + name + "'");
  }
  return t;
}

std::vector<std::string> train_preset_names() { return {"k400", "k600", "ucf101", "hmdb51", "mmt", "desk"}; }

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path);
}

bool apply_key(SctConfig& cfg, const std::string& key, const std::string& value) {
  const auto& keys = model_keys();
  auto it = keys.find(key);
  if (it == keys.end()) return false;
  it->second(cfg, key, value);
  return true;
}

bool apply_key(TrainConfig& cfg, const std::string& key, const std::string& value) {
  const auto& keys = train_keys();
  auto it = keys.find(key);
  if (it == keys.end()) return false;
  it->second(cfg, key, value);
  return true;
}

void apply_all(const KeyValues& kv, SctConfig& model, TrainConfig& train) {
  for (const auto& [k, v] : kv) {
    if (k == "preset" || k == "train_preset") continue;
    if (apply_key(model, k, v) || apply_key(train, k, v)) continue;
    throw ConfigError("unknown config key '" + k + "'");
  }
}

std::string to_key_values(const SctConfig& c) {
  std::ostringstream o;
  o.precision(17);
  o << "name=" << c.name << "\n"
    << "frames=" << c.frames << "\n"
    << "height=" << c.height << "\n"
    << "width=" << c.width << "\n"
    << "patch_h=" << c.patch_h << "\n"
    << "patch_w=" << c.patch_w << "\n"
    << "chunk_rows=" << c.chunk_rows << "\n"
    << "chunk_cols=" << c.chunk_cols << "\n"
    << "stages=" << c.stages << "\n"
    << "embed_dim=" << c.embed_dim << "\n"
    << "mlp_dim=" << c.mlp_dim << "\n"
    << "vilt_blocks=" << c.vilt_blocks << "\n"
    << "heads=" << c.heads_vilt << "," << c.heads_lsh << "," << c.heads_shift << "," << c.heads_clip << "\n"
    << "clip_dim=" << c.clip_dim << "\n"
    << "clip_mlp=" << c.clip_mlp << "\n"
    << "clip_blocks=" << c.clip_blocks << "\n"
    << "num_classes=" << c.num_classes << "\n"
    << "lsh_buckets=" << c.lsh.n_buckets << "\n"
    << "lsh_rounds=" << c.lsh.n_rounds << "\n"
    << "lsh_chunk=" << c.lsh.chunk_size << "\n"
    << "lsh_previous_chunk=" << (c.lsh.attend_previous_chunk ? "true" : "false") << "\n"
    << "lsh_include_self=" << (c.lsh.include_self ? "true" : "false") << "\n"
    << "lsh_seed=" << c.lsh.seed << "\n"
    << "global_attention=" << name_of(c.global_attention) << "\n"
    << "attention=" << name_of(c.temporal_attention) << "\n"
    << "shift_frames=" << c.shift_frames << "\n"
    << "shift_layers=" << c.shift_layers << "\n"
    << "attn_residual=" << (c.attn_residual ? "true" : "false") << "\n"
    << "init=" << (c.init == InitScheme::kGlorot ? "glorot" : "trunc_normal") << "\n"
    << "model_dropout=" << c.dropout << "\n";
  return o.str();
}

std::string to_key_values(const TrainConfig& t) {
  std::ostringstream o;
  o.precision(17);
  o << "epochs=" << t.epochs << "\n"
    << "batch_size=" << t.batch_size << "\n"
    << "momentum=" << t.momentum << "\n"
    << "lr=" << t.lr << "\n"
    << "warmup_epochs=" << t.warmup_epochs << "\n"
    << "label_smoothing=" << t.label_smoothing << "\n"
    << "dropout=" << t.dropout << "\n"
    << "grad_clip=" << t.grad_clip << "\n"
    << "frame_rate=" << t.frame_rate << "\n"
    << "frame_stride=" << t.frame_stride << "\n"
    << "n_views=" << t.n_views << "\n"
    << "val_fraction=" << t.val_fraction << "\n"
    << "seed=" << t.seed << "\n";
  return o.str();
}

}  // namespace sct
