#pragma once

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "optics_sim.hpp"

namespace maskforge::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary containers are written with native little-endian stores");

// Little-endian byte buffer writer/reader.
class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_magic(const char (&m)[5]) { bytes_.insert(bytes_.end(), m, m + 4); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string bytes, std::string what)
      : bytes_(std::move(bytes)), what_(std::move(what)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void expect_magic(const char (&m)[5]) {
    need(4);
    if (bytes_.compare(pos_, 4, m) != 0) throw ValidationError(what_ + ": bad magic, expected " + m);
    pos_ += 4;
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw ValidationError(what_ + ": trailing bytes");
  }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > bytes_.size()) throw ValidationError(what_ + ": truncated file");
  }
  std::string bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream ss;
  for (unsigned i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

// ---- OMSK v1 mask container -------------------------------------------------
// "OMSK" | u32 version=1 | u32 n | u32 m_levels | u32 mask_index | u64 seed |
// f64 codebook[m_levels] | u16 indices[n*n] (row-major). Little-endian.

inline std::string encode_omsk(const QuantizedMask& m) {
  ByteWriter w;
  w.put_magic("OMSK");
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.n()));
  w.put<std::uint32_t>(m.codebook.levels);
  w.put<std::uint32_t>(m.mask_index);
  w.put<std::uint64_t>(m.seed);
  for (double e : m.codebook.entries) w.put<double>(e);
  for (std::uint16_t v : m.indices) w.put<std::uint16_t>(v);
  return w.bytes();
}

inline QuantizedMask decode_omsk(const std::string& bytes, const std::string& what = "OMSK") {
  ByteReader r(bytes, what);
  r.expect_magic("OMSK");
  if (r.get<std::uint32_t>() != 1) throw ValidationError(what + ": unsupported version");
  const auto n = r.get<std::uint32_t>();
  const auto levels = r.get<std::uint32_t>();
  QuantizedMask m;
  m.mask_index = r.get<std::uint32_t>();
  m.seed = r.get<std::uint64_t>();
  if (levels < 2 || levels > 256) throw ValidationError(what + ": bad level count");
  m.codebook.levels = levels;
  m.codebook.entries.resize(levels);
  for (auto& e : m.codebook.entries) e = r.get<double>();
  m.indices = Grid<std::uint16_t>(n, n);
  for (auto& v : m.indices) {
    v = r.get<std::uint16_t>();
    if (v >= levels) throw ValidationError(what + ": codeword index out of range");
  }
  r.expect_end();
  return m;
}

inline void write_omsk(const fs::path& p, const QuantizedMask& m) { write_file_atomic(p, encode_omsk(m)); }
inline QuantizedMask read_omsk(const fs::path& p) { return decode_omsk(read_file(p), p.string()); }

// ---- OMSI v1 intensity container --------------------------------------------
// "OMSI" | u32 version=1 | u32 rows | u32 cols | u32 mask_id | u64 noise_seed |
// u32 fidelity (0 dft, 1 optical) | u32 supersample | u32 sensor_bits |
// f64 photon_scale | f64 truncated_energy_fraction | f64 values[rows*cols].

inline std::string encode_omsi(const IntensityMeasurement& m, std::uint64_t noise_seed) {
  ByteWriter w;
  w.put_magic("OMSI");
  w.put<std::uint32_t>(1);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.values.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.values.cols()));
  w.put<std::uint32_t>(m.mask_id);
  w.put<std::uint64_t>(noise_seed);
  w.put<std::uint32_t>(m.model.fidelity == Fidelity::DiscreteDFT ? 0u : 1u);
  w.put<std::uint32_t>(m.model.supersample);
  w.put<std::uint32_t>(m.model.sensor_bits);
  w.put<double>(m.model.photon_scale);
  w.put<double>(m.truncated_energy_fraction);
  for (double v : m.values) w.put<double>(v);
  return w.bytes();
}

struct OmsiFile {
  IntensityMeasurement measurement;
  std::uint64_t noise_seed = 0;
};

inline OmsiFile decode_omsi(const std::string& bytes, const std::string& what = "OMSI") {
  ByteReader r(bytes, what);
  r.expect_magic("OMSI");
  if (r.get<std::uint32_t>() != 1) throw ValidationError(what + ": unsupported version");
  OmsiFile f;
  auto& m = f.measurement;
  const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
  m.mask_id = r.get<std::uint32_t>();
  f.noise_seed = r.get<std::uint64_t>();
  m.model.fidelity = r.get<std::uint32_t>() == 0 ? Fidelity::DiscreteDFT : Fidelity::OpticalEmulation;
  m.model.supersample = r.get<std::uint32_t>();
  m.model.sensor_bits = r.get<std::uint32_t>();
  m.model.photon_scale = r.get<double>();
  m.truncated_energy_fraction = r.get<double>();
  m.model.pad_rows = rows;
  m.model.pad_cols = cols;
  m.values = RealField(rows, cols);
  for (auto& v : m.values) v = r.get<double>();
  r.expect_end();
  return f;
}

inline void write_omsi(const fs::path& p, const IntensityMeasurement& m, std::uint64_t noise_seed) {
  write_file_atomic(p, encode_omsi(m, noise_seed));
}
inline OmsiFile read_omsi(const fs::path& p) { return decode_omsi(read_file(p), p.string()); }

// ---- PGM --------------------------------------------------------------------

// 16-bit binary PGM (big-endian samples), linearly scaled so the maximum maps
// to 65535. With `centered`, DC is moved to the middle of the image.
inline std::string encode_pgm16(const RealField& values, bool centered = true) {
  const RealField v = centered ? fftshift(values) : values;
  double mx = 0.0;
  for (double x : v) mx = std::max(mx, x);
  std::ostringstream ss;
  ss << "P5\n" << v.cols() << " " << v.rows() << "\n65535\n";
  std::string out = ss.str();
  out.reserve(out.size() + 2 * v.size());
  for (double x : v) {
    const auto s = static_cast<std::uint16_t>(mx > 0.0 ? std::lround(std::clamp(x / mx, 0.0, 1.0) * 65535.0) : 0);
    out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  return out;
}

// 8-bit PGM of phases mapped from [0, 2 pi) to [0, 255].
inline std::string encode_phase_pgm8(const ComplexField& x) {
  std::ostringstream ss;
  ss << "P5\n" << x.cols() << " " << x.rows() << "\n255\n";
  std::string out = ss.str();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (const auto& v : x) {
    double p = std::fmod(std::arg(v), two_pi);
    if (p < 0.0) p += two_pi;
    out.push_back(static_cast<char>(std::min(255L, std::lround(std::floor(p / two_pi * 256.0)))));
  }
  return out;
}

// Reads 8- or 16-bit binary PGM into [0, 1].
inline RealField decode_pgm(const std::string& bytes, const std::string& what = "PGM") {
  std::istringstream ss(bytes);
  std::string magic;
  ss >> magic;
  if (magic != "P5") throw ValidationError(what + ": only binary P5 PGM is supported");
  auto next_int = [&]() {
    ss >> std::ws;
    while (ss.peek() == '#') {
      std::string line;
      std::getline(ss, line);
      ss >> std::ws;
    }
    long v = -1;
    ss >> v;
    if (v <= 0) throw ValidationError(what + ": bad header");
    return static_cast<std::size_t>(v);
  };
  const std::size_t w = next_int(), h = next_int(), maxval = next_int();
  ss.get();
  const std::size_t off = static_cast<std::size_t>(ss.tellg());
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (bytes.size() < off + w * h * bps) throw ValidationError(what + ": truncated pixel data");
  RealField img(h, w);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + off + i * bps);
    const double v = bps == 2 ? (p[0] << 8 | p[1]) : p[0];
    img[i] = v / static_cast<double>(maxval);
  }
  return img;
}

inline RealField read_pgm(const fs::path& p) { return decode_pgm(read_file(p), p.string()); }

// ---- raw float64 ------------------------------------------------------------

inline std::string encode_raw_f64(const RealField& v) {
  ByteWriter w;
  for (double x : v) w.put<double>(x);
  return w.bytes();
}

// Headerless square array; the side is inferred from the byte count.
inline RealField decode_raw_f64_square(const std::string& bytes, const std::string& what) {
  if (bytes.size() % 8 != 0) throw ValidationError(what + ": size is not a multiple of 8");
  const std::size_t count = bytes.size() / 8;
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
  if (n * n != count) throw ValidationError(what + ": not a square array");
  RealField out(n, n);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

inline void write_complex_raw(const fs::path& stem, const ComplexField& x,
                              std::map<std::string, std::string>* hashes = nullptr) {
  RealField re(x.rows(), x.cols()), im(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    re[i] = x[i].real();
    im[i] = x[i].imag();
  }
  const std::string a = encode_raw_f64(re), b = encode_raw_f64(im);
  fs::path pr = stem, pi = stem;
  pr += ".re.f64";
  pi += ".im.f64";
  write_file_atomic(pr, a);
  write_file_atomic(pi, b);
  if (hashes) {
    (*hashes)[pr.filename().string()] = sha256_hex(a);
    (*hashes)[pi.filename().string()] = sha256_hex(b);
  }
}

inline ComplexField read_complex_raw(const fs::path& stem) {
  fs::path pr = stem, pi = stem;
  pr += ".re.f64";
  pi += ".im.f64";
  const RealField re = decode_raw_f64_square(read_file(pr), pr.string());
  const RealField im = decode_raw_f64_square(read_file(pi), pi.string());
  if (!re.same_shape(im)) throw ValidationError("real/imaginary arrays differ in size");
  ComplexField x(re.rows(), re.cols());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = {re[i], im[i]};
  return x;
}

// ---- key=value text ---------------------------------------------------------

// Shortest round-trip representation of a double.
inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  std::string s = ss.str();
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream t;
    t << std::setprecision(prec) << v;
    if (std::stod(t.str()) == v) return t.str();
  }
  return s;
}

}  // namespace maskforge::io
