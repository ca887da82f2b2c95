#include "mdta2g/checkpoint.hpp"

#include "mdta2g/mdt.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mdta2g {

static_assert(std::endian::native == std::endian::little, "checkpoint encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'D', 'T', 'A', '2', 'G', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }
void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  void read(void* dst, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated data");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    read(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated string");
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Mat& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw std::runtime_error("checkpoint: no tensor named '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.first == name) return true;
  }
  return false;
}

void Checkpoint::add_store(const ParameterStore& store, const std::string& prefix) {
  for (const auto& e : store.entries()) tensors.emplace_back(prefix + e.name, e.var.value());
}

void Checkpoint::load_store(ParameterStore& store, const std::string& prefix) const {
  for (const auto& e : store.entries()) {
    const Mat& src = tensor(prefix + e.name);
    ad::Var v = e.var;
    if (src.rows() != v.rows() || src.cols() != v.cols()) {
      throw std::runtime_error("checkpoint: tensor '" + prefix + e.name + "' has the wrong shape");
    }
    v.mutable_value() = src;
  }
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, m] : ckpt.tensors) {
    put_str(out, name);
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ckpt;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    ckpt.meta[k] = r.str();
  }
  const std::uint32_t n_tensors = r.u32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    Mat m(rows, cols);
    r.read(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

Checkpoint model_checkpoint(const MdtModel& model) {
  Checkpoint ckpt;
  ckpt.meta = model.config().to_key_values();
  ckpt.add_store(model.parameters(), "model.");
  return ckpt;
}

MdtModel model_from_checkpoint(const Checkpoint& ckpt) {
  MdtModel model(MdtConfig::from_key_values(ckpt.meta), 0);
  ckpt.load_store(model.parameters(), "model.");
  return model;
}

std::uint64_t store_checksum(const ParameterStore& store) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& e : store.entries()) {
    mix(e.name.data(), e.name.size());
    const std::int64_t shape[2] = {e.var.rows(), e.var.cols()};
    mix(shape, sizeof shape);
    mix(e.var.value().data(), static_cast<std::size_t>(e.var.value().size()) * sizeof(double));
  }
  return h;
}

}  // namespace mdta2g
