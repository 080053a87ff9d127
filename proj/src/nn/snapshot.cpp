#include "rtsac/nn/snapshot.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "rtsac/core/error.hpp"

namespace rtsac::nn {

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'T', 'S', 'W'};

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
  void doubles(const double* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(data, n * sizeof(double));
    } else {
      for (std::size_t i = 0; i < n; ++i) le(std::bit_cast<std::uint64_t>(data[i]));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw Error(ErrorKind::Corruption, "snapshot truncated");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out, in_.data() + pos_, n * sizeof(double));
      pos_ += n * sizeof(double);
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = std::bit_cast<double>(le<std::uint64_t>());
    }
  }
  std::size_t position() const noexcept { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t estimate_size(std::span<const NamedGroup> groups) {
  std::size_t n = 32;
  for (const auto& [name, params] : groups) {
    for (const auto& t : *params) n += 64 + name.size() + t.name.size() + t.value.size() * sizeof(double);
  }
  return n;
}

}  // namespace

// FNV-1a over little-endian 64-bit words, then over the tail bytes, followed
// by a final avalanche.
std::uint64_t checksum64(std::span<const std::uint8_t> bytes) noexcept {
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    std::uint64_t w = 0;
    for (std::size_t k = 0; k < 8; ++k) w |= static_cast<std::uint64_t>(bytes[i + k]) << (8 * k);
    h = (h ^ w) * kPrime;
  }
  for (; i < bytes.size(); ++i) h = (h ^ bytes[i]) * kPrime;
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

std::uint64_t WeightSnapshot::stored_checksum() const {
  if (bytes.size() < 8) throw Error(ErrorKind::Corruption, "snapshot truncated");
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[bytes.size() - 8 + k]) << (8 * k);
  return v;
}

bool WeightSnapshot::checksum_ok() const {
  if (bytes.size() < 8) return false;
  return checksum64(std::span(bytes).first(bytes.size() - 8)) == stored_checksum();
}

WeightSnapshot encode_snapshot(std::span<const NamedGroup> groups, std::uint64_t version) {
  Writer w(estimate_size(groups));
  w.bytes(kMagic, 4);
  w.le<std::uint64_t>(version);
  std::uint32_t count = 0;
  for (const auto& g : groups) count += static_cast<std::uint32_t>(g.second->size());
  w.le<std::uint32_t>(count);
  for (const auto& [prefix, params] : groups) {
    for (const auto& t : *params) {
      const std::string name = std::string(prefix) + t.name;
      w.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
      w.bytes(name.data(), name.size());
      w.le<std::uint32_t>(static_cast<std::uint32_t>(t.shape.size()));
      for (auto d : t.shape) w.le<std::uint64_t>(static_cast<std::uint64_t>(d));
      w.doubles(t.value.data(), static_cast<std::size_t>(t.value.size()));
    }
  }
  WeightSnapshot snap{version, w.take()};
  const std::uint64_t sum = checksum64(snap.bytes);
  for (std::size_t k = 0; k < 8; ++k) snap.bytes.push_back(static_cast<std::uint8_t>(sum >> (8 * k)));
  return snap;
}

WeightSnapshot encode_snapshot(const ParamSet& params, std::uint64_t version) {
  const NamedGroup group{"", &params};
  return encode_snapshot(std::span<const NamedGroup>(&group, 1), version);
}

ParamSet restore(const WeightSnapshot& snapshot) {
  if (!snapshot.checksum_ok()) {
    throw Error(ErrorKind::Corruption, "snapshot v" + std::to_string(snapshot.version) + " failed its checksum");
  }
  Reader r(std::span(snapshot.bytes).first(snapshot.bytes.size() - 8));
  if (r.str(4) != std::string(reinterpret_cast<const char*>(kMagic), 4)) {
    throw Error(ErrorKind::Corruption, "snapshot magic mismatch");
  }
  const auto version = r.le<std::uint64_t>();
  if (version != snapshot.version) throw Error(ErrorKind::Corruption, "snapshot version field mismatch");
  const auto count = r.le<std::uint32_t>();
  ParamSet params;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str(r.le<std::uint32_t>());
    const auto rank = r.le<std::uint32_t>();
    if (rank == 0 || rank > 8) throw Error(ErrorKind::Corruption, "snapshot tensor rank out of range");
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::int64_t>(r.le<std::uint64_t>()));
    for (auto d : shape) {
      if (d <= 0 || d > (std::int64_t{1} << 32)) throw Error(ErrorKind::Corruption, "snapshot tensor dims out of range");
    }
    Matrix value = zeros_for(shape);
    r.doubles(value.data(), static_cast<std::size_t>(value.size()));
    params.add(name, std::move(shape), std::move(value));
  }
  return params;
}

}  // namespace rtsac::nn
