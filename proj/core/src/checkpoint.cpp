#include "dic/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dic {

namespace {

constexpr char kCkptMagic[4] = {'D', 'I', 'C', 'P'};
constexpr std::uint8_t kCkptVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

void put_str(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(const std::string& buf, const std::string& origin)
      : buf_(buf), origin_(origin) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4), 4);
    return v;
  }

  std::string str() {
    std::uint32_t n = u32();
    return std::string(take(n), n);
  }

  void doubles(std::vector<double>& out, std::size_t count) {
    out.resize(count);
    std::memcpy(out.data(), take(count * sizeof(double)), count * sizeof(double));
  }

  bool done() const { return pos_ == buf_.size(); }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > buf_.size())
      throw CorruptionError(origin_ + ": truncated checkpoint");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const Checkpoint::Array& Checkpoint::array(const std::string& name) const {
  for (const Array& a : arrays)
    if (a.name == name) return a;
  throw FormatError("checkpoint is missing array " + name);
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw FormatError("checkpoint is missing key " + key);
  return it->second;
}

int Checkpoint::meta_int(const std::string& key) const {
  return std::stoi(meta_at(key));
}

double Checkpoint::meta_double(const std::string& key) const {
  return std::stod(meta_at(key));
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kCkptMagic, 4);
  out.push_back(static_cast<char>(kCkptVersion));
  put_str(out, ckpt.kind);
  put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    put_str(out, a.name);
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    std::size_t count = 1;
    for (int d : a.dims) {
      put_u32(out, static_cast<std::uint32_t>(d));
      count *= static_cast<std::size_t>(d);
    }
    if (count != a.data.size())
      throw FormatError("array dims disagree with data size for " + a.name);
    const char* bytes = reinterpret_cast<const char*>(a.data.data());
    out.append(bytes, a.data.size() * sizeof(double));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(buf, path.string());

  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kCkptMagic, 4) != 0)
    throw FormatError(path.string() + ": not a DIC checkpoint");
  if (r.u8() != kCkptVersion)
    throw FormatError(path.string() + ": unsupported checkpoint version");

  Checkpoint ckpt;
  ckpt.kind = r.str();
  std::uint32_t nmeta = r.u32();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.str();
    ckpt.meta[k] = r.str();
  }
  std::uint32_t narr = r.u32();
  for (std::uint32_t i = 0; i < narr; ++i) {
    Checkpoint::Array a;
    a.name = r.str();
    std::uint32_t nd = r.u32();
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < nd; ++d) {
      a.dims.push_back(static_cast<int>(r.u32()));
      count *= static_cast<std::size_t>(a.dims.back());
    }
    r.doubles(a.data, count);
    ckpt.arrays.push_back(std::move(a));
  }
  if (!r.done()) throw CorruptionError(path.string() + ": trailing bytes");
  return ckpt;
}

}  // namespace dic
