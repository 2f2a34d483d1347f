/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tvmerge/tensor_container.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "tvmerge/error.hpp"

namespace tvmerge {
namespace {

constexpr char kMagic[4] = {'T', 'V', 'C', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kReadChunk = std::size_t{1} << 20;

std::size_t ElementSize(DType dtype) {
  switch (dtype) {
    case DType::kFloat32:
      return 4;
    case DType::kUInt16:
      return 2;
  }
  Fail(ErrorKind::kFormat, "unknown dtype");
}

std::size_t CheckedNumel(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (std::uint64_t dim : dims) {
    if (dim == 0) Fail(ErrorKind::kValidation, "tensor dimension must be positive");
    if (n > std::numeric_limits<std::uint64_t>::max() / dim) {
      Fail(ErrorKind::kFormat, "tensor element count overflows");
    }
    n *= dim;
  }
  if (n > std::numeric_limits<std::size_t>::max() / 4) {
    Fail(ErrorKind::kFormat, "tensor element count overflows");
  }
  return static_cast<std::size_t>(n);
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) Fail(ErrorKind::kIo, "write failed");
  }

  template <typename UInt>
  void le(UInt value) {
    std::uint8_t buf[sizeof(UInt)];
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      buf[i] = static_cast<std::uint8_t>(value >> (8 * i));
    }
    bytes(buf, sizeof(UInt));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      Fail(ErrorKind::kFormat, "unexpected end of stream");
    }
  }

  template <typename UInt>
  UInt le() {
    std::uint8_t buf[sizeof(UInt)];
    bytes(buf, sizeof(UInt));
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      value |= static_cast<UInt>(buf[i]) << (8 * i);
    }
    return value;
  }

  // Reads in bounded chunks so a corrupt header cannot force a huge
  // allocation before the truncation is noticed.
  std::vector<std::uint8_t> payload(std::size_t n) {
    std::vector<std::uint8_t> out;
    out.reserve(std::min(n, kReadChunk));
    while (out.size() < n) {
      const std::size_t step = std::min(kReadChunk, n - out.size());
      const std::size_t old = out.size();
      out.resize(old + step);
      bytes(out.data() + old, step);
    }
    return out;
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

struct RawTensor {
  TensorSpec spec;
  std::vector<std::uint8_t> payload;
};

void WriteHeader(Writer& w, std::size_t count) {
  if (count == 0) Fail(ErrorKind::kValidation, "empty container");
  if (count > std::numeric_limits<std::uint32_t>::max()) {
    Fail(ErrorKind::kValidation, "too many tensors");
  }
  w.bytes(kMagic, 4);
  w.le<std::uint8_t>(kVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(count));
}

void WriteRecordHeader(Writer& w, const TensorSpec& spec) {
  if (spec.name.size() > std::numeric_limits<std::uint16_t>::max()) {
    Fail(ErrorKind::kValidation, "tensor name too long: " + spec.name);
  }
  if (spec.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
    Fail(ErrorKind::kValidation, "too many dimensions: " + spec.name);
  }
  w.le<std::uint16_t>(static_cast<std::uint16_t>(spec.name.size()));
  w.bytes(spec.name.data(), spec.name.size());
  w.le<std::uint8_t>(static_cast<std::uint8_t>(spec.dtype));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(spec.dims.size()));
  for (std::uint64_t dim : spec.dims) w.le<std::uint64_t>(dim);
}

void CheckUniqueNames(const std::vector<TensorSpec>& specs) {
  std::unordered_set<std::string_view> seen;
  for (const auto& spec : specs) {
    if (!seen.insert(spec.name).second) {
      Fail(ErrorKind::kValidation, "duplicate name: " + spec.name);
    }
  }
}

std::vector<RawTensor> ReadRecords(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) Fail(ErrorKind::kFormat, "bad magic");
  const auto version = r.le<std::uint8_t>();
  if (version != kVersion) {
    Fail(ErrorKind::kFormat, "unsupported version " + std::to_string(version));
  }
  const auto count = r.le<std::uint32_t>();
  if (count == 0) Fail(ErrorKind::kFormat, "empty container");

  std::vector<RawTensor> records;
  std::unordered_set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    RawTensor rec;
    const auto name_len = r.le<std::uint16_t>();
    rec.spec.name.resize(name_len);
    r.bytes(rec.spec.name.data(), name_len);
    if (rec.spec.name.empty()) Fail(ErrorKind::kFormat, "empty tensor name");
    if (!names.insert(rec.spec.name).second) {
      Fail(ErrorKind::kFormat, "duplicate name: " + rec.spec.name);
    }
    const auto dtype = r.le<std::uint8_t>();
    if (dtype > static_cast<std::uint8_t>(DType::kUInt16)) {
      Fail(ErrorKind::kFormat, "unknown dtype code " + std::to_string(dtype));
    }
    rec.spec.dtype = static_cast<DType>(dtype);
    const auto ndim = r.le<std::uint8_t>();
    rec.spec.dims.resize(ndim);
    for (auto& dim : rec.spec.dims) {
      dim = r.le<std::uint64_t>();
      if (dim == 0) Fail(ErrorKind::kFormat, "zero dimension in " + rec.spec.name);
    }
    const std::size_t numel = CheckedNumel(rec.spec.dims);
    rec.payload = r.payload(numel * ElementSize(rec.spec.dtype));
    records.push_back(std::move(rec));
  }
  if (!r.at_end()) Fail(ErrorKind::kFormat, "length mismatch: trailing bytes");
  return records;
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open for writing: " + path.string());
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open: " + path.string());
  return in;
}

std::vector<std::uint16_t> DecodeU16(const RawTensor& rec) {
  std::vector<std::uint16_t> out(rec.payload.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint16_t>(rec.payload[2 * i] |
                                        (rec.payload[2 * i + 1] << 8));
  }
  return out;
}

}  // namespace

std::size_t TensorSpec::numel() const { return CheckedNumel(dims); }

void ParameterSet::add(TensorSpec spec, std::span<const float> values) {
  if (spec.name.empty()) Fail(ErrorKind::kValidation, "empty tensor name");
  if (spec.dtype != DType::kFloat32) {
    Fail(ErrorKind::kValidation, "parameter tensors must be f32");
  }
  for (const auto& existing : specs_) {
    if (existing.name == spec.name) {
      Fail(ErrorKind::kValidation, "duplicate name: " + spec.name);
    }
  }
  const std::size_t n = spec.numel();
  if (values.size() != n) {
    Fail(ErrorKind::kValidation, "value count does not match dims for " + spec.name);
  }
  offsets_.push_back(data_.size());
  data_.insert(data_.end(), values.begin(), values.end());
  specs_.push_back(std::move(spec));
}

void ParameterSet::add(std::string name, std::vector<std::uint64_t> dims,
                       std::span<const float> values) {
  add(TensorSpec{std::move(name), std::move(dims), DType::kFloat32}, values);
}

std::size_t ParameterSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  Fail(ErrorKind::kValidation, "no tensor named " + std::string(name));
}

std::span<const float> ParameterSet::tensor(std::string_view name) const {
  const std::size_t i = index_of(name);
  return std::span<const float>(data_).subspan(offsets_[i], specs_[i].numel());
}

std::span<float> ParameterSet::tensor(std::string_view name) {
  const std::size_t i = index_of(name);
  return std::span<float>(data_).subspan(offsets_[i], specs_[i].numel());
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out = *this;
  std::fill(out.data_.begin(), out.data_.end(), 0.0f);
  return out;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  return a.specs_ == b.specs_ && a.data_ == b.data_;
}

bool BitwiseEqual(const ParameterSet& a, const ParameterSet& b) {
  if (!a.shape_compatible(b)) return false;
  const auto fa = a.flat();
  const auto fb = b.flat();
  return std::memcmp(fa.data(), fb.data(), fa.size() * sizeof(float)) == 0;
}

void EncodeContainer(const ParameterSet& pset, std::ostream& out) {
  CheckUniqueNames(pset.specs());
  const auto flat = pset.flat();
  for (float v : flat) {
    if (std::isnan(v)) Fail(ErrorKind::kValidation, "NaN values are not encodable");
  }
  Writer w(out);
  WriteHeader(w, pset.tensor_count());
  std::size_t offset = 0;
  std::vector<std::uint8_t> buf;
  for (const auto& spec : pset.specs()) {
    WriteRecordHeader(w, spec);
    const std::size_t n = spec.numel();
    buf.resize(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(flat[offset + i]);
      buf[4 * i + 0] = static_cast<std::uint8_t>(bits);
      buf[4 * i + 1] = static_cast<std::uint8_t>(bits >> 8);
      buf[4 * i + 2] = static_cast<std::uint8_t>(bits >> 16);
      buf[4 * i + 3] = static_cast<std::uint8_t>(bits >> 24);
    }
    w.bytes(buf.data(), buf.size());
    offset += n;
  }
}

std::vector<std::uint8_t> EncodeContainer(const ParameterSet& pset) {
  std::ostringstream out(std::ios::binary);
  EncodeContainer(pset, out);
  const std::string s = std::move(out).str();
  return {s.begin(), s.end()};
}

void WriteContainer(const ParameterSet& pset, const std::filesystem::path& path) {
  // Encode first so a validation failure leaves no partial file behind.
  const auto bytes = EncodeContainer(pset);
  auto out = OpenForWrite(path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

ParameterSet DecodeContainer(std::istream& in) {
  ParameterSet pset;
  for (auto& rec : ReadRecords(in)) {
    if (rec.spec.dtype != DType::kFloat32) {
      Fail(ErrorKind::kFormat, "parameter tensor " + rec.spec.name + " is not f32");
    }
    std::vector<float> values(rec.payload.size() / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(rec.payload[4 * i]) |
                                 (static_cast<std::uint32_t>(rec.payload[4 * i + 1]) << 8) |
                                 (static_cast<std::uint32_t>(rec.payload[4 * i + 2]) << 16) |
                                 (static_cast<std::uint32_t>(rec.payload[4 * i + 3]) << 24);
      values[i] = std::bit_cast<float>(bits);
      if (std::isnan(values[i])) {
        Fail(ErrorKind::kFormat, "NaN payload in tensor " + rec.spec.name);
      }
    }
    pset.add(std::move(rec.spec), values);
  }
  return pset;
}

ParameterSet DecodeContainer(std::span<const std::uint8_t> bytes) {
  std::istringstream in(std::string(bytes.begin(), bytes.end()), std::ios::binary);
  return DecodeContainer(in);
}

ParameterSet ReadContainer(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return DecodeContainer(in);
}

void RequireShapeCompatible(const ParameterSet& a, const ParameterSet& b) {
  if (!a.shape_compatible(b)) Fail(ErrorKind::kValidation, "shape mismatch");
}

TaskVector ComputeTaskVector(const ParameterSet& theta_t, const ParameterSet& theta_0) {
  RequireShapeCompatible(theta_t, theta_0);
  TaskVector tau(theta_t);
  auto out = tau.flat();
  const auto base = theta_0.flat();
  for (std::size_t p = 0; p < out.size(); ++p) out[p] -= base[p];
  return tau;
}

ParameterSet ApplyTaskVector(const ParameterSet& theta_0, const TaskVector& tau,
                             double lambda_merge) {
  if (!(lambda_merge >= 0.0 && lambda_merge <= 1.0)) {
    Fail(ErrorKind::kValidation, "lambda_merge must lie in [0, 1]");
  }
  RequireShapeCompatible(theta_0, tau);
  ParameterSet merged(theta_0);
  if (lambda_merge == 0.0) return merged;
  const auto lambda = static_cast<float>(lambda_merge);
  auto out = merged.flat();
  const auto delta = tau.flat();
  for (std::size_t p = 0; p < out.size(); ++p) out[p] += lambda * delta[p];
  return merged;
}

void EncodeOwnerMap(const OwnerMapFile& map, std::ostream& out) {
  if (map.owner.empty()) Fail(ErrorKind::kValidation, "empty container");
  if (map.owner.size() != map.provenance.size()) {
    Fail(ErrorKind::kValidation, "owner and provenance lengths differ");
  }
  Writer w(out);
  WriteHeader(w, 2);
  const std::pair<const char*, const std::vector<std::uint16_t>*> tensors[] = {
      {"owner", &map.owner}, {"provenance", &map.provenance}};
  for (const auto& [name, values] : tensors) {
    WriteRecordHeader(w, TensorSpec{name, {values->size()}, DType::kUInt16});
    for (std::uint16_t v : *values) w.le<std::uint16_t>(v);
  }
}

void WriteOwnerMap(const OwnerMapFile& map, const std::filesystem::path& path) {
  std::ostringstream buf(std::ios::binary);
  EncodeOwnerMap(map, buf);
  auto out = OpenForWrite(path);
  out << buf.str();
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

OwnerMapFile DecodeOwnerMap(std::istream& in) {
  OwnerMapFile map;
  bool have_owner = false;
  bool have_provenance = false;
  for (const auto& rec : ReadRecords(in)) {
    if (rec.spec.dtype != DType::kUInt16 || rec.spec.dims.size() != 1) {
      Fail(ErrorKind::kFormat, "owner map tensors must be 1-D u16");
    }
    if (rec.spec.name == "owner") {
      map.owner = DecodeU16(rec);
      have_owner = true;
    } else if (rec.spec.name == "provenance") {
      map.provenance = DecodeU16(rec);
      have_provenance = true;
    }
  }
  if (!have_owner) Fail(ErrorKind::kFormat, "owner map lacks an 'owner' tensor");
  if (!have_provenance) map.provenance.assign(map.owner.size(), 0);
  if (map.provenance.size() != map.owner.size()) {
    Fail(ErrorKind::kFormat, "owner and provenance lengths differ");
  }
  return map;
}

OwnerMapFile ReadOwnerMap(const std::filesystem::path& path) {
  auto in = OpenForRead(path);
  return DecodeOwnerMap(in);
}

}  // namespace tvmerge
