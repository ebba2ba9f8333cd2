#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace fragmig {

// Node resources: CPU (GHz), memory (GB). Link resources: bandwidth (MBps).
inline constexpr std::size_t kNodeDims = 2;
inline constexpr std::size_t kLinkDims = 1;
inline constexpr std::size_t kAllDims = kNodeDims + kLinkDims;

inline constexpr std::size_t kCpu = 0;
inline constexpr std::size_t kMem = 1;
inline constexpr std::size_t kBandwidth = 0;

using NodeVec = std::array<double, kNodeDims>;
using LinkVec = std::array<double, kLinkDims>;

using NodeId = std::size_t;
using LinkId = std::size_t;

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

#define FRAGMIG_ERROR_TYPE(Name, Kind)                     \
  class Name : public Error {                              \
   public:                                                 \
    using Error::Error;                                    \
    const char* kind() const noexcept override { return Kind; } \
  }

FRAGMIG_ERROR_TYPE(ParseError, "parse");
FRAGMIG_ERROR_TYPE(InvariantError, "invariant");
FRAGMIG_ERROR_TYPE(ConfigError, "config");
FRAGMIG_ERROR_TYPE(DataError, "data");
FRAGMIG_ERROR_TYPE(CheckpointError, "checkpoint");
FRAGMIG_ERROR_TYPE(DivergenceError, "divergence");
FRAGMIG_ERROR_TYPE(InfeasibleMigration, "infeasible");
FRAGMIG_ERROR_TYPE(UndefinedCorrelation, "undefined-correlation");

#undef FRAGMIG_ERROR_TYPE

template <std::size_t N>
constexpr std::array<double, N> operator+(std::array<double, N> a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
  return a;
}

template <std::size_t N>
constexpr std::array<double, N> operator-(std::array<double, N> a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
  return a;
}

template <std::size_t N>
constexpr std::array<double, N>& operator+=(std::array<double, N>& a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] += b[i];
  return a;
}

template <std::size_t N>
constexpr std::array<double, N>& operator-=(std::array<double, N>& a, const std::array<double, N>& b) {
  for (std::size_t i = 0; i < N; ++i) a[i] -= b[i];
  return a;
}

// 64-bit FNV-1a. Used for topology fingerprints, dataset dedup and manifest file hashes.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  template <typename T>
  void update_value(const T& v) { update(&v, sizeof(T)); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  if (res.ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint64_t hash_file(const std::string& path) {
  Fnv1a h;
  h.update(read_file(path));
  return h.digest();
}

}  // namespace fragmig
