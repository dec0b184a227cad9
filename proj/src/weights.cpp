#include "vomix/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vomix/rng.hpp"

namespace vomix {
namespace {

constexpr char kMagic[4] = {'V', 'M', 'T', 'W'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

  const std::uint8_t* bytes(std::size_t n) {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kTruncated, "truncated file: needed " + std::to_string(n) +
                                             " bytes at offset " + std::to_string(pos_));
    }
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  template <typename T>
  T uint() {
    const std::uint8_t* p = bytes(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
    return v;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

std::string dims_str(const std::vector<std::uint64_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

}  // namespace

std::uint64_t Tensor::numel() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Index Tensor::rows() const { return dims.size() < 2 ? 1 : static_cast<Index>(dims.front()); }

Index Tensor::cols() const {
  if (dims.empty()) return 1;
  if (dims.size() == 1) return static_cast<Index>(dims.front());
  return static_cast<Index>(numel() / dims.front());
}

std::vector<ManifestEntry> manifest(const ViTConfig& cfg) {
  cfg.check();
  using u64 = std::uint64_t;
  const u64 d = static_cast<u64>(cfg.dim);
  const u64 hidden = static_cast<u64>(cfg.mlp_hidden());
  std::vector<ManifestEntry> m;
  m.push_back({"patch_embed.weight", {static_cast<u64>(cfg.patch_dim()), d}});
  m.push_back({"patch_embed.bias", {d}});
  if (cfg.class_token) m.push_back({"cls_token", {1, d}});
  m.push_back({"pos_embed", {static_cast<u64>(cfg.tokens()), d}});
  for (Index b = 0; b < cfg.depth; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    m.push_back({p + "norm1.weight", {d}});
    m.push_back({p + "norm1.bias", {d}});
    m.push_back({p + "attn.qkv.weight", {d, 3 * d}});
    m.push_back({p + "attn.qkv.bias", {3 * d}});
    m.push_back({p + "attn.proj.weight", {d, d}});
    m.push_back({p + "attn.proj.bias", {d}});
    m.push_back({p + "norm2.weight", {d}});
    m.push_back({p + "norm2.bias", {d}});
    m.push_back({p + "mlp.fc1.weight", {d, hidden}});
    m.push_back({p + "mlp.fc1.bias", {hidden}});
    m.push_back({p + "mlp.fc2.weight", {hidden, d}});
    m.push_back({p + "mlp.fc2.bias", {d}});
  }
  m.push_back({"norm.weight", {d}});
  m.push_back({"norm.bias", {d}});
  m.push_back({"head.weight", {d, static_cast<u64>(cfg.classes)}});
  m.push_back({"head.bias", {static_cast<u64>(cfg.classes)}});
  return m;
}

void WeightStore::add(Tensor t) {
  if (t.data.size() != t.numel()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor '" + t.name + "' data length does not match " +
                                               dims_str(t.dims));
  }
  const auto [it, inserted] = index_.emplace(t.name, tensors_.size());
  if (!inserted) throw ConfigError("duplicate tensor '" + t.name + "'");
  tensors_.push_back(std::move(t));
}

const Tensor* WeightStore::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? nullptr : &tensors_[it->second];
}

const Tensor& WeightStore::at(const std::string& name) const {
  const Tensor* t = find(name);
  if (t == nullptr) throw Error(ErrorCode::kIncompleteWeights, "incomplete weight set: missing '" + name + "'");
  return *t;
}

WeightStore::MatMap WeightStore::matrix(const std::string& name) const {
  const Tensor& t = at(name);
  return MatMap(t.data.data(), t.rows(), t.cols());
}

WeightStore::VecMap WeightStore::vector(const std::string& name) const {
  const Tensor& t = at(name);
  return VecMap(t.data.data(), static_cast<Index>(t.numel()));
}

AttentionWeights<float> WeightStore::attention(Index block, Index heads) const {
  const std::string p = "blocks." + std::to_string(block) + ".";
  return AttentionWeights<float>{vector(p + "norm1.weight"), vector(p + "norm1.bias"),
                                 matrix(p + "attn.qkv.weight"), vector(p + "attn.qkv.bias"),
                                 matrix(p + "attn.proj.weight"), vector(p + "attn.proj.bias"),
                                 heads};
}

bool operator==(const WeightStore& a, const WeightStore& b) {
  if (a.tensors_.size() != b.tensors_.size()) return false;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    const Tensor& x = a.tensors_[i];
    const Tensor& y = b.tensors_[i];
    if (x.name != y.name || x.dims != y.dims || x.data.size() != y.data.size()) return false;
    if (std::memcmp(x.data.data(), y.data.data(), x.data.size() * sizeof(float)) != 0) return false;
  }
  return true;
}

WeightStore init_weights(const ViTConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  WeightStore store;
  for (ManifestEntry& e : manifest(cfg)) {
    Tensor t{std::move(e.name), std::move(e.dims), {}};
    t.data.resize(t.numel());
    for (float& v : t.data) v = init_value(rng);
    store.add(std::move(t));
  }
  return store;
}

void check_weights(const WeightStore& store, const ViTConfig& cfg) {
  for (const ManifestEntry& e : manifest(cfg)) {
    const Tensor& t = store.at(e.name);
    if (t.dims != e.dims) {
      throw Error(ErrorCode::kShapeMismatch, "shape mismatch for '" + e.name + "': file has " +
                                                 dims_str(t.dims) + ", model expects " +
                                                 dims_str(e.dims));
    }
  }
}

std::vector<std::uint8_t> encode_weights(const WeightStore& store) {
  Writer w;
  w.bytes(kMagic, 4);
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(store.tensors().size()));
  for (const Tensor& t : store.tensors()) {
    if (t.name.size() > 0xFFFF) throw ConfigError("tensor name too long: " + t.name);
    if (t.dims.size() > 0xFF) throw ConfigError("too many dims for " + t.name);
    w.uint<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) w.uint<std::uint64_t>(d);
    for (float v : t.data) w.uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  return w.take();
}

WeightStore decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "bad magic: not a VMTW weight file");
  }
  r.bytes(4);
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) {
    throw Error(ErrorCode::kUnsupportedVersion, "unsupported VMTW version " + std::to_string(version));
  }
  const auto count = r.uint<std::uint32_t>();
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    Tensor t;
    const auto name_len = r.uint<std::uint16_t>();
    const std::uint8_t* name = r.bytes(name_len);
    t.name.assign(reinterpret_cast<const char*>(name), name_len);
    const auto ndim = r.uint<std::uint8_t>();
    for (std::uint8_t k = 0; k < ndim; ++k) t.dims.push_back(r.uint<std::uint64_t>());
    const std::uint64_t n = t.numel();
    if (n > r.remaining() / 4) {
      throw Error(ErrorCode::kTruncated, "truncated file: tensor '" + t.name + "' needs " +
                                             std::to_string(n) + " values");
    }
    t.data.resize(n);
    for (float& v : t.data) v = std::bit_cast<float>(r.uint<std::uint32_t>());
    store.add(std::move(t));
  }
  return store;
}

void save_weights(const WeightStore& store, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_weights(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

WeightStore load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open weights file '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace vomix
