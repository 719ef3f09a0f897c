#include "noisyst/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "noisyst/errors.hpp"

namespace noisyst {

namespace {

constexpr char kMagic[8] = {'N', 'S', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw ConfigError("truncated checkpoint");
  }
  std::uint64_t le(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    }
    return v;
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(ckpt.seed);
  w.str(ckpt.provenance);
  const ModelConfig& c = ckpt.params.config;
  w.u64(c.vocab_size);
  w.u64(c.embed_dim);
  w.u64(c.hidden_dim);
  w.f64(c.dropout_rate);
  w.f64(c.label_smoothing);
  w.u64(c.max_decode_len);
  w.u32(static_cast<std::uint32_t>(ckpt.params.tensors.size()));
  for (const Tensor& t : ckpt.params.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    w.u64(t.data.size());
    for (double v : t.data) w.f64(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw ConfigError("not a checkpoint file");
  }
  if (const auto v = r.u32(); v != kVersion) {
    throw ConfigError("unsupported checkpoint version " + std::to_string(v));
  }
  Checkpoint ckpt;
  ckpt.seed = r.u64();
  ckpt.provenance = r.str();
  ModelConfig& c = ckpt.params.config;
  c.vocab_size = r.u64();
  c.embed_dim = r.u64();
  c.hidden_dim = r.u64();
  c.dropout_rate = r.f64();
  c.label_smoothing = r.f64();
  c.max_decode_len = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    Tensor t;
    t.name = r.str();
    const std::uint32_t ndim = r.u32();
    for (std::uint32_t d = 0; d < ndim; ++d) t.shape.push_back(r.u64());
    const std::uint64_t count = r.u64();
    t.data.resize(count);
    for (auto& v : t.data) v = r.f64();
    ckpt.params.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw ConfigError("trailing bytes in checkpoint");
  c.validate();
  ckpt.params.validate();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace noisyst
