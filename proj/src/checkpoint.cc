// Copyright 2026 The picrypt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "picrypt/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "picrypt/errors.h"

namespace picrypt::tensor {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* field) {
    need(sizeof(T), field);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* field) {
    need(n, field);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) {
      throw DecodeError(std::string("checkpoint: truncated ") + field);
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const NamedTensor> entries) {
  std::vector<std::uint8_t> out{'P', 'E', 'T', 'N'};
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > 0xFFFF) throw ShapeError("checkpoint: name too long: " + e.name);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    const auto& shape = e.tensor.shape();
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_le<std::uint64_t>(out, d);
    for (double v : e.tensor.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), "PETN", 4) != 0) throw DecodeError("checkpoint: bad magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw DecodeError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>("entry count");
  std::vector<NamedTensor> entries;
  std::set<std::string> names;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = in.get<std::uint16_t>("name length");
    const auto raw = in.take(len, "name");
    std::string name(raw.begin(), raw.end());
    if (!names.insert(name).second) throw DecodeError("checkpoint: duplicate entry " + name);
    const auto rank = in.get<std::uint32_t>("rank");
    if (rank > 8) throw DecodeError("checkpoint: rank " + std::to_string(rank) + " of " + name);
    Shape shape;
    std::size_t numel = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = in.get<std::uint64_t>("dims");
      if (d > (std::uint64_t{1} << 32)) throw DecodeError("checkpoint: dim too large in " + name);
      shape.push_back(static_cast<std::size_t>(d));
      numel *= shape.back();
    }
    if (numel > bytes.size() / 8) throw DecodeError("checkpoint: truncated payload of " + name);
    std::vector<double> values(numel);
    for (auto& v : values) v = std::bit_cast<double>(in.get<std::uint64_t>("payload"));
    entries.push_back({std::move(name), Tensor::from(std::move(shape), std::move(values))});
  }
  if (!in.done()) throw DecodeError("checkpoint: trailing bytes");
  return entries;
}

void save_checkpoint(std::span<const NamedTensor> entries, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(entries);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace picrypt::tensor
