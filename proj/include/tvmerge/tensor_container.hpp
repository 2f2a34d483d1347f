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

// Parameter containers and the TVC1 wire format.
//
// A ParameterSet is an ordered list of named f32 tensors stored in one
// contiguous buffer. The global flat index enumerates tensors in spec order
// and each tensor in row-major order, so `flat()[p]` is the value every
// merge routine refers to as element p.
//
// TVC1 layout (little-endian, no padding):
//   "TVC1" | u8 version=1 | u32 tensor count
//   per tensor: u16 name length | name bytes | u8 dtype | u8 ndim |
//               u64 dims[ndim] | payload (numel * element size)

#ifndef TVMERGE_TENSOR_CONTAINER_HPP_
#define TVMERGE_TENSOR_CONTAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvmerge {

enum class DType : std::uint8_t {
  kFloat32 = 0,
  // Only used by owner-map side files; parameter sets are always f32.
  kUInt16 = 1,
};

struct TensorSpec {
  std::string name;
  std::vector<std::uint64_t> dims;
  DType dtype = DType::kFloat32;

  std::size_t numel() const;

  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

class ParameterSet {
 public:
  ParameterSet() = default;

  // Appends a tensor. Throws on duplicate name, non-positive dims, or a value
  // count that does not match the dims.
  void add(TensorSpec spec, std::span<const float> values);
  void add(std::string name, std::vector<std::uint64_t> dims,
           std::span<const float> values);

  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t tensor_count() const { return specs_.size(); }

  // Total element count d.
  std::size_t size() const { return data_.size(); }
  bool empty() const { return specs_.empty(); }

  std::span<const float> flat() const { return data_; }
  std::span<float> flat() { return data_; }

  std::span<const float> tensor(std::string_view name) const;
  std::span<float> tensor(std::string_view name);

  // Identical spec lists: same names, order and dims.
  bool shape_compatible(const ParameterSet& other) const {
    return specs_ == other.specs_;
  }

  // Same specs with every value zero.
  ParameterSet zeros_like() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::size_t index_of(std::string_view name) const;

  std::vector<TensorSpec> specs_;
  std::vector<std::size_t> offsets_;
  std::vector<float> data_;
};

// A delta θ_t − θ_0. Same layout as the ParameterSet it came from.
class TaskVector : public ParameterSet {
 public:
  TaskVector() = default;
  explicit TaskVector(ParameterSet params) : ParameterSet(std::move(params)) {}
};

// Bitwise equality of specs and payloads (distinguishes -0.0 from 0.0).
bool BitwiseEqual(const ParameterSet& a, const ParameterSet& b);

void EncodeContainer(const ParameterSet& pset, std::ostream& out);
std::vector<std::uint8_t> EncodeContainer(const ParameterSet& pset);
void WriteContainer(const ParameterSet& pset,
                    const std::filesystem::path& path);

ParameterSet DecodeContainer(std::istream& in);
ParameterSet DecodeContainer(std::span<const std::uint8_t> bytes);
ParameterSet ReadContainer(const std::filesystem::path& path);

// θ_t − θ_0 element-wise in f32.
TaskVector ComputeTaskVector(const ParameterSet& theta_t,
                             const ParameterSet& theta_0);

// θ_0 + λ·τ element-wise in f32, λ ∈ [0, 1].
ParameterSet ApplyTaskVector(const ParameterSet& theta_0, const TaskVector& tau,
                             double lambda_merge);

// Throws a validation error unless `a` and `b` are shape-compatible.
void RequireShapeCompatible(const ParameterSet& a, const ParameterSet& b);

// Owner-map side file: a TVC1 stream holding u16 tensors "owner" (1-based
// task ids) and "provenance" (assignment round, 0 for residual), each of
// dims [d].
struct OwnerMapFile {
  std::vector<std::uint16_t> owner;
  std::vector<std::uint16_t> provenance;
};

void EncodeOwnerMap(const OwnerMapFile& map, std::ostream& out);
void WriteOwnerMap(const OwnerMapFile& map, const std::filesystem::path& path);
OwnerMapFile DecodeOwnerMap(std::istream& in);
OwnerMapFile ReadOwnerMap(const std::filesystem::path& path);

}  // namespace tvmerge

#endif  // TVMERGE_TENSOR_CONTAINER_HPP_
