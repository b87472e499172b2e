#include "model_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "error.hpp"

namespace strokeid::model {

namespace {

class Writer {
 public:
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(const float* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f32(v[i]);
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void f32s(float* v, std::size_t n) {
    need(n * 4);
    for (std::size_t i = 0; i < n; ++i) v[i] = f32();
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_) fail(ErrorKind::Format, "model file truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

void validate(const Model& m) {
  encoder::validate(m.bank);
  nbnn::validate(m.store);
  if (m.store.descriptor_dim != m.bank.descriptor_dim())
    fail(ErrorKind::Format, "template dimension " + std::to_string(m.store.descriptor_dim) +
                                " does not match the filter bank (" + std::to_string(m.bank.descriptor_dim()) + ")");
}

std::vector<std::uint8_t> serialize(const Model& m) {
  validate(m);
  Writer w;
  w.bytes(kMagic, 4);
  w.u16(m.version);
  const auto& b = m.bank;
  w.f32(b.eps_cn);
  w.f32(b.zca.eps_zca);
  w.u32(static_cast<std::uint32_t>(b.k));
  w.u32(static_cast<std::uint32_t>(b.kernel_side));
  w.u32(static_cast<std::uint32_t>(b.pool_grid));
  w.f32s(b.zca.mean.data(), b.zca.mean.size());
  w.f32s(b.zca.matrix.data(), b.zca.matrix.size());
  w.f32s(b.centroids.data(), b.centroids.size());
  w.u32(static_cast<std::uint32_t>(m.store.classes.size()));
  for (const auto& c : m.store.classes) {
    w.u32(static_cast<std::uint32_t>(c.label.size()));
    w.bytes(c.label.data(), c.label.size());
    w.u32(static_cast<std::uint32_t>(c.size()));
    w.f32s(c.templates.data(), static_cast<std::size_t>(c.templates.size()));
    w.f32s(c.weights.data(), c.weights.size());
  }
  return w.take();
}

Model deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) fail(ErrorKind::Format, "not a model file (bad magic)");
  Model m;
  m.version = r.u16();
  if (m.version != kVersion)
    fail(ErrorKind::Format, "unsupported model file version " + std::to_string(m.version) + " (expected " +
                                std::to_string(kVersion) + ")");
  auto& b = m.bank;
  b.eps_cn = r.f32();
  b.zca.eps_zca = r.f32();
  const std::uint32_t k = r.u32();
  const std::uint32_t side = r.u32();
  const std::uint32_t grid = r.u32();
  if (k == 0 || k > (1u << 16) || side == 0 || side > 64 || grid == 0 || grid > 16)
    fail(ErrorKind::Format, "implausible filter bank header");
  b.k = static_cast<int>(k);
  b.kernel_side = static_cast<int>(side);
  b.pool_grid = static_cast<int>(grid);
  const std::size_t d = static_cast<std::size_t>(side) * side;
  b.zca.mean.resize(d);
  b.zca.matrix.resize(d * d);
  b.centroids.resize(d * k);
  r.f32s(b.zca.mean.data(), d);
  r.f32s(b.zca.matrix.data(), d * d);
  r.f32s(b.centroids.data(), d * k);

  const int dim = b.descriptor_dim();
  m.store.descriptor_dim = dim;
  const std::uint32_t classes = r.u32();
  for (std::uint32_t c = 0; c < classes; ++c) {
    nbnn::ClassEntry e;
    e.label = r.str(r.u32());
    const std::uint32_t n = r.u32();
    if (static_cast<std::uint64_t>(n) * dim * 4 > bytes.size()) fail(ErrorKind::Format, "model file truncated");
    e.templates.resize(n, dim);
    r.f32s(e.templates.data(), static_cast<std::size_t>(n) * dim);
    e.weights.resize(n);
    r.f32s(e.weights.data(), n);
    m.store.classes.push_back(std::move(e));
  }
  if (!r.done()) fail(ErrorKind::Format, "trailing bytes after model data");
  validate(m);
  return m;
}

void save(const Model& m, const std::filesystem::path& path) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "cannot write model file '" + path.string() + "'");
}

Model load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace strokeid::model
