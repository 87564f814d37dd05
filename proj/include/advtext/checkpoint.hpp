#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace advtext {

// Self-describing binary container for model parameters: an architecture
// tag, the training seed, named integer dimensions, and named double arrays
// each prefixed by an 8-byte little-endian element count. Byte layout is
// documented in docs/checkpoint_format.md.
struct Checkpoint {
  std::string tag;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, int64_t>> dims;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  static constexpr char kMagic[9] = "ADVTCKP1";

  int64_t dim(const std::string& name) const {
    for (const auto& [n, v] : dims)
      if (n == name) return v;
    throw std::runtime_error("checkpoint missing dimension: " + name);
  }

  const std::vector<double>& array(const std::string& name) const {
    for (const auto& [n, v] : arrays)
      if (n == name) return v;
    throw std::runtime_error("checkpoint missing array: " + name);
  }

  void add_dim(const std::string& name, int64_t v) { dims.emplace_back(name, v); }
  void add_array(const std::string& name, std::vector<double> v) {
    arrays.emplace_back(name, std::move(v));
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, static_cast<uint32_t>(tag.size()));
    out.write(tag.data(), static_cast<std::streamsize>(tag.size()));
    write_u64(out, seed);
    write_u32(out, static_cast<uint32_t>(dims.size()));
    for (const auto& [name, v] : dims) {
      write_str(out, name);
      write_u64(out, static_cast<uint64_t>(v));
    }
    write_u32(out, static_cast<uint32_t>(arrays.size()));
    for (const auto& [name, v] : arrays) {
      write_str(out, name);
      write_u64(out, v.size());  // the per-array length prefix
      for (double x : v) write_f64(out, x);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
      throw std::runtime_error("not a checkpoint file: " + path);
    Checkpoint ck;
    ck.tag = read_str(in);
    ck.seed = read_u64(in);
    uint32_t ndims = read_u32(in);
    for (uint32_t i = 0; i < ndims; ++i) {
      std::string name = read_str(in);
      ck.dims.emplace_back(name, static_cast<int64_t>(read_u64(in)));
    }
    uint32_t narr = read_u32(in);
    for (uint32_t i = 0; i < narr; ++i) {
      std::string name = read_str(in);
      uint64_t count = read_u64(in);
      std::vector<double> v(count);
      for (uint64_t j = 0; j < count; ++j) v[j] = read_f64(in);
      ck.arrays.emplace_back(name, std::move(v));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ck;
  }

 private:
  static void write_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 4);
  }
  static void write_u64(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(b), 8);
  }
  static void write_f64(std::ostream& out, double x) {
    uint64_t v;
    static_assert(sizeof(v) == sizeof(x));
    __builtin_memcpy(&v, &x, 8);
    write_u64(out, v);
  }
  static void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  static uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  static double read_f64(std::istream& in) {
    uint64_t v = read_u64(in);
    double x;
    __builtin_memcpy(&x, &v, 8);
    return x;
  }
  static std::string read_str(std::istream& in) {
    uint32_t len = read_u32(in);
    if (len > (1u << 20)) throw std::runtime_error("unreasonable string length in checkpoint");
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
  }
};

}  // namespace advtext
