#pragma once

// Named parameter tensors and the VMTW container:
//
//   "VMTW" | u32 version (=1) | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u8 ndim | ndim x u64 dims |
//               prod(dims) x f32 data
//
// All integers and floats little-endian, tensors in manifest order, no padding.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vomix/attention.hpp"
#include "vomix/vit_config.hpp"

namespace vomix {

struct Tensor {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<float> data;

  std::uint64_t numel() const;
  /// First dim, or 1 for a vector.
  Index rows() const;
  /// Product of the trailing dims.
  Index cols() const;
};

struct ManifestEntry {
  std::string name;
  std::vector<std::uint64_t> dims;
};

/// Every tensor a model of this shape needs, in container order.
/// Linear weights are (in, out); per-block tensors are named
/// blocks.<i>.{norm1,attn.qkv,attn.proj,norm2,mlp.fc1,mlp.fc2}.{weight,bias}.
std::vector<ManifestEntry> manifest(const ViTConfig& cfg);

class WeightStore {
 public:
  using MatMap = Eigen::Map<const MatrixF>;
  using VecMap = Eigen::Map<const VectorF>;

  void add(Tensor t);
  const std::vector<Tensor>& tensors() const { return tensors_; }
  const Tensor* find(const std::string& name) const;
  /// Throws an incomplete-weight-set error naming the tensor if absent.
  const Tensor& at(const std::string& name) const;

  MatMap matrix(const std::string& name) const;
  VecMap vector(const std::string& name) const;

  AttentionWeights<float> attention(Index block, Index heads) const;

  /// Bitwise equality of names, shapes and data.
  friend bool operator==(const WeightStore& a, const WeightStore& b);

 private:
  std::vector<Tensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Deterministic init: one SplitMix64 stream seeded with `seed` fills every
/// manifest tensor in order, row-major, with values in [-0.02, 0.02).
WeightStore init_weights(const ViTConfig& cfg, std::uint64_t seed);

/// Verifies that every manifest tensor is present with the expected shape.
void check_weights(const WeightStore& store, const ViTConfig& cfg);

void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

std::vector<std::uint8_t> encode_weights(const WeightStore& store);
WeightStore decode_weights(const std::vector<std::uint8_t>& bytes);

}  // namespace vomix
