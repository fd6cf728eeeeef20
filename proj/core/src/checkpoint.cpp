#include <bit>
#include <cstring>
#include <fstream>

#include "conetrx/network.hpp"

namespace conetrx {

// On-disk checkpoint: little-endian, magic "CNCK", version, tensor section
// (name, rank, dims, float32 data) covering learnable parameters and batch
// norm running statistics, then a flag section recording which batch norms
// hold valid statistics.

static_assert(std::endian::native == std::endian::little, "checkpoint io assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'C', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void put_string(std::ofstream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
  uint32_t n = get<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(const Network<float>& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint64_t>(out, net.params().size());
  for (const auto& p : net.params()) {
    put_string(out, p.name);
    put<uint32_t>(out, static_cast<uint32_t>(p.value.rank()));
    for (int64_t d : p.value.shape()) put<uint64_t>(out, static_cast<uint64_t>(d));
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.numel() * sizeof(float)));
  }
  const auto& names = net.bn_flag_names();
  const auto& ready = const_cast<Network<float>&>(net).bn_ready();
  put<uint32_t>(out, static_cast<uint32_t>(names.size()));
  for (size_t i = 0; i < names.size(); ++i) {
    put_string(out, names[i]);
    put<uint8_t>(out, ready[i]);
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(Network<float>& net, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t version = get<uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("unsupported checkpoint version");
  uint64_t count = get<uint64_t>(in);
  for (uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(in);
    uint32_t rank = get<uint32_t>(in);
    std::vector<int64_t> dims(rank);
    for (auto& d : dims) d = static_cast<int64_t>(get<uint64_t>(in));
    int idx = net.find_param(name);
    if (idx < 0) throw std::runtime_error("checkpoint parameter " + name + " not present in network");
    Tensor<float>& dst = net.params()[static_cast<size_t>(idx)].value;
    require(dst.shape() == dims, "checkpoint shape mismatch for " + name);
    in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.numel() * sizeof(float)));
  }
  uint32_t nflags = get<uint32_t>(in);
  const auto& names = net.bn_flag_names();
  for (uint32_t i = 0; i < nflags; ++i) {
    std::string name = get_string(in);
    uint8_t v = get<uint8_t>(in);
    for (size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) net.bn_ready()[k] = v;
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
}

}  // namespace conetrx
