/**
 * Copyright (c) the itasim authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "itasim/common.hpp"
#include "itasim/quant.hpp"

namespace itasim {

enum class Dtype : uint8_t { i8, u8, i24, i32 };

inline const char* dtype_name(Dtype d) {
  switch (d) {
    case Dtype::i8: return "i8";
    case Dtype::u8: return "u8";
    case Dtype::i24: return "i24";
    case Dtype::i32: return "i32";
  }
  return "?";
}

inline Dtype dtype_from_name(const std::string& s) {
  if (s == "i8") return Dtype::i8;
  if (s == "u8") return Dtype::u8;
  if (s == "i24") return Dtype::i24;
  if (s == "i32") return Dtype::i32;
  fail(ErrorKind::schema, "unknown dtype: " + s);
}

inline int64_t dtype_bytes(Dtype d) {
  switch (d) {
    case Dtype::i8:
    case Dtype::u8: return 1;
    case Dtype::i24: return 3;  // packed little-endian
    case Dtype::i32: return 4;
  }
  return 0;
}

/// Flat binary tensor container: a JSON manifest naming each tensor
/// (dtype, shape, scale, byte offset) plus one little-endian blob.
/// On disk this is a `<prefix>.json` / `<prefix>.bin` pair.
class TensorContainer {
 public:
  struct Record {
    std::string name;
    Dtype dtype = Dtype::i8;
    std::vector<int64_t> shape;
    double scale = 1.0;
    uint64_t offset = 0;
  };

  void add_q(const std::string& name, const QTensor& t) {
    Record r;
    r.name = name;
    r.dtype = t.sign == Sign::i8 ? Dtype::i8 : Dtype::u8;
    r.shape = t.shape;
    r.scale = t.scale;
    r.offset = append(reinterpret_cast<const uint8_t*>(t.data.data()),
                      t.data.size());
    records_.push_back(r);
    index_[name] = records_.size() - 1;
  }

  void add_i24(const std::string& name, const std::vector<int32_t>& v,
               std::vector<int64_t> shape, double scale = 1.0) {
    std::vector<uint8_t> packed(v.size() * 3);
    for (size_t i = 0; i < v.size(); ++i) {
      check_bias(v[i]);
      const uint32_t u = uint32_t(v[i]) & 0xffffffu;
      packed[3 * i] = uint8_t(u & 0xff);
      packed[3 * i + 1] = uint8_t((u >> 8) & 0xff);
      packed[3 * i + 2] = uint8_t((u >> 16) & 0xff);
    }
    Record r{name, Dtype::i24, std::move(shape), scale,
             append(packed.data(), packed.size())};
    records_.push_back(r);
    index_[name] = records_.size() - 1;
  }

  void add_i32(const std::string& name, const std::vector<int32_t>& v,
               std::vector<int64_t> shape, double scale = 1.0) {
    std::vector<uint8_t> packed(v.size() * 4);
    for (size_t i = 0; i < v.size(); ++i) {
      const uint32_t u = uint32_t(v[i]);
      packed[4 * i] = uint8_t(u & 0xff);
      packed[4 * i + 1] = uint8_t((u >> 8) & 0xff);
      packed[4 * i + 2] = uint8_t((u >> 16) & 0xff);
      packed[4 * i + 3] = uint8_t((u >> 24) & 0xff);
    }
    Record r{name, Dtype::i32, std::move(shape), scale,
             append(packed.data(), packed.size())};
    records_.push_back(r);
    index_[name] = records_.size() - 1;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  const Record& record(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      fail(ErrorKind::io, "tensor not in container: " + name);
    return records_[it->second];
  }

  const std::vector<Record>& records() const { return records_; }
  const std::vector<uint8_t>& blob() const { return blob_; }

  QTensor get_q(const std::string& name) const {
    const Record& r = record(name);
    if (r.dtype != Dtype::i8 && r.dtype != Dtype::u8)
      fail(ErrorKind::io, "tensor " + name + " is not 8-bit");
    QTensor t;
    t.shape = r.shape;
    t.scale = r.scale;
    t.sign = r.dtype == Dtype::i8 ? Sign::i8 : Sign::u8;
    const int64_t n = t.numel();
    bounds_check(r, n);
    t.data.resize(size_t(n));
    std::memcpy(t.data.data(), blob_.data() + r.offset, size_t(n));
    return t;
  }

  std::vector<int32_t> get_i32(const std::string& name) const {
    const Record& r = record(name);
    std::vector<int32_t> out;
    const int64_t n =
        std::accumulate(r.shape.begin(), r.shape.end(), int64_t{1},
                        [](int64_t a, int64_t b) { return a * b; });
    bounds_check(r, n * dtype_bytes(r.dtype));
    out.resize(size_t(n));
    const uint8_t* p = blob_.data() + r.offset;
    if (r.dtype == Dtype::i24) {
      for (int64_t i = 0; i < n; ++i) {
        uint32_t u = uint32_t(p[3 * i]) | (uint32_t(p[3 * i + 1]) << 8) |
                     (uint32_t(p[3 * i + 2]) << 16);
        if (u & 0x800000u) u |= 0xff000000u;  // sign extend
        out[size_t(i)] = int32_t(u);
      }
    } else if (r.dtype == Dtype::i32) {
      for (int64_t i = 0; i < n; ++i) {
        uint32_t u = uint32_t(p[4 * i]) | (uint32_t(p[4 * i + 1]) << 8) |
                     (uint32_t(p[4 * i + 2]) << 16) |
                     (uint32_t(p[4 * i + 3]) << 24);
        out[size_t(i)] = int32_t(u);
      }
    } else {
      fail(ErrorKind::io, "tensor " + name + " is not a wide integer type");
    }
    return out;
  }

  void save(const std::string& prefix) const {
    nlohmann::ordered_json manifest;
    manifest["version"] = 1;
    manifest["data_file"] = basename(prefix) + ".bin";
    auto& arr = manifest["tensors"] = nlohmann::ordered_json::array();
    for (const Record& r : records_) {
      nlohmann::ordered_json j;
      j["name"] = r.name;
      j["dtype"] = dtype_name(r.dtype);
      j["shape"] = r.shape;
      j["scale"] = r.scale;
      j["offset"] = r.offset;
      arr.push_back(j);
    }
    write_file(prefix + ".json", manifest.dump(2) + "\n");
    std::ofstream f(prefix + ".bin", std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + prefix + ".bin");
    f.write(reinterpret_cast<const char*>(blob_.data()),
            std::streamsize(blob_.size()));
  }

  /// Load from `<prefix>.json`/`.bin`; `path` may carry either extension
  /// or none.
  static TensorContainer load(const std::string& path) {
    std::string prefix = path;
    for (const char* ext : {".json", ".bin"}) {
      const size_t n = std::string(ext).size();
      if (prefix.size() > n && prefix.substr(prefix.size() - n) == ext)
        prefix = prefix.substr(0, prefix.size() - n);
    }
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(read_file(prefix + ".json"));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::schema, "bad container manifest: " + std::string(e.what()));
    }
    TensorContainer c;
    std::ifstream f(prefix + ".bin", std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read " + prefix + ".bin");
    c.blob_.assign(std::istreambuf_iterator<char>(f), {});
    try {
      for (const auto& j : manifest.at("tensors")) {
        Record r;
        r.name = j.at("name").get<std::string>();
        r.dtype = dtype_from_name(j.at("dtype").get<std::string>());
        r.shape = j.at("shape").get<std::vector<int64_t>>();
        r.scale = j.at("scale").get<double>();
        r.offset = j.at("offset").get<uint64_t>();
        c.records_.push_back(r);
        c.index_[r.name] = c.records_.size() - 1;
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::schema, "bad container manifest: " + std::string(e.what()));
    }
    // Catch truncated blobs eagerly.
    for (const Record& r : c.records_) {
      const int64_t n =
          std::accumulate(r.shape.begin(), r.shape.end(), int64_t{1},
                          [](int64_t a, int64_t b) { return a * b; });
      c.bounds_check(r, n * dtype_bytes(r.dtype));
    }
    return c;
  }

  static std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot read " + path);
    return std::string(std::istreambuf_iterator<char>(f), {});
  }

  static void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot write " + path);
    f << text;
  }

 private:
  uint64_t append(const uint8_t* p, size_t n) {
    const uint64_t off = align_up(int64_t(blob_.size()), 8);
    blob_.resize(size_t(off), 0);
    blob_.insert(blob_.end(), p, p + n);
    return off;
  }

  void bounds_check(const Record& r, int64_t bytes) const {
    if (r.offset + uint64_t(bytes) > blob_.size())
      fail(ErrorKind::io, "container blob truncated for tensor " + r.name);
  }

  static std::string basename(const std::string& p) {
    const size_t pos = p.find_last_of('/');
    return pos == std::string::npos ? p : p.substr(pos + 1);
  }

  std::vector<Record> records_;
  std::map<std::string, size_t> index_;
  std::vector<uint8_t> blob_;
};

}  // namespace itasim
