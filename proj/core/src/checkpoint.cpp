// SPDX-License-Identifier: Apache-2.0
#include "sct/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <unordered_map>

#include "sct/error.hpp"
#include "sct/video_io.hpp"

namespace sct {

namespace {

constexpr char kMagic[5] = {'S', 'C', 'T', 'W', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::size_t v) {
  if (v > 0xffffffffu) throw FormatError("value does not fit a u32 checkpoint field", out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated inside ") + what, bytes_.size());
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  float f32() {
    return std::bit_cast<float>(u32("parameter data"));
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParameterStore& store) {
  static_assert(sizeof(float) == 4);
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, store.all().size());
  for (const auto& p : store.all()) {
    put_u32(out, p.name.size());
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u32(out, p.tensor.rank());
    for (auto d : p.tensor.shape()) put_u32(out, d);
    for (double v : p.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

void decode_checkpoint(const std::vector<std::uint8_t>& bytes, ParameterStore& store) {
  Reader in(bytes);
  const auto magic = in.text(sizeof(kMagic), "the magic");
  for (std::size_t i = 0; i < sizeof(kMagic); ++i) {
    if (magic[i] != kMagic[i]) throw FormatError("bad checkpoint magic", i);
  }
  const auto count_at = in.offset();
  const auto count = in.u32("the parameter count");
  if (count != store.all().size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " parameters, model has " +
                          std::to_string(store.all().size()),
                      count_at);
  }
  // Decode fully before touching the model so a bad file leaves it unchanged.
  std::unordered_map<std::string, std::vector<double>> values;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto record_at = in.offset();
    const auto name = in.text(in.u32("a name length"), "a name");
    const auto* param = store.find(name);
    if (!param) throw FormatError("checkpoint parameter '" + name + "' is not part of the model", record_at);
    if (values.count(name)) throw FormatError("duplicate checkpoint parameter '" + name + "'", record_at);
    const auto rank = in.u32("a rank");
    Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(in.u32("the dimensions"));
    if (shape != param->tensor.shape()) {
      throw FormatError("checkpoint shape " + to_string(shape) + " for '" + name + "' differs from model shape " +
                            to_string(param->tensor.shape()),
                        record_at);
    }
    const auto n = numel(shape);
    in.need(n * 4, "parameter data");
    std::vector<double> v(n);
    for (auto& x : v) x = in.f32();
    values.emplace(name, std::move(v));
  }
  if (in.offset() != bytes.size()) throw FormatError("trailing bytes after the last parameter", in.offset());
  for (auto& p : store.all()) {
    const auto& v = values.at(p.name);
    auto dst = p.tensor.mutable_data();
    std::copy(v.begin(), v.end(), dst.begin());
  }
}

void save_checkpoint(const ParameterStore& store, const std::string& path) {
  write_file_bytes(path, encode_checkpoint(store));
}

void load_checkpoint(ParameterStore& store, const std::string& path) { decode_checkpoint(read_file_bytes(path), store); }

}  // namespace sct
