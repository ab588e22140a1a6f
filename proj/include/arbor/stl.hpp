#pragma once

// STL triangle meshes: binary and ASCII reading/writing plus basic geometry.
//
// Binary layout: 80-byte header, little-endian uint32 facet count, then per
// facet 12 little-endian float32 (normal, v0, v1, v2) and a uint16 attribute.
// Attributes are ignored on read and written as zero. Coordinates are held
// as double and narrowed to float on binary write.

#include "arbor/error.hpp"
#include "arbor/geometry.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace arbor {

struct Triangle {
  Vec3 normal = Vec3::Zero();
  std::array<Vec3, 3> v{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};

  bool operator==(const Triangle&) const = default;
};

struct TriangleMesh {
  std::string name;
  std::vector<Triangle> triangles;

  std::size_t size() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  void append(const TriangleMesh& other) {
    triangles.insert(triangles.end(), other.triangles.begin(), other.triangles.end());
  }

  bool operator==(const TriangleMesh&) const = default;
};

enum class StlFormat { binary, ascii };

inline constexpr std::size_t kStlHeaderSize = 80;
inline constexpr std::size_t kStlFacetSize = 50;

inline constexpr std::size_t stl_binary_size(std::size_t triangles) {
  return kStlHeaderSize + 4 + kStlFacetSize * triangles;
}

inline Vec3 triangle_centroid(const Triangle& t) {
  return (t.v[0] + t.v[1] + t.v[2]) / 3.0;
}

inline double triangle_area(const Triangle& t) {
  return 0.5 * (t.v[1] - t.v[0]).cross(t.v[2] - t.v[0]).norm();
}

inline bool triangle_finite(const Triangle& t) {
  return all_finite(t.normal) && all_finite(t.v[0]) && all_finite(t.v[1]) && all_finite(t.v[2]);
}

struct NormalsResult {
  TriangleMesh mesh;
  std::vector<std::size_t> degenerate;  // indices given a zero normal
};

inline NormalsResult recompute_normals(TriangleMesh mesh) {
  NormalsResult out;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    Triangle& t = mesh.triangles[i];
    const Vec3 e1 = t.v[1] - t.v[0];
    const Vec3 e2 = t.v[2] - t.v[0];
    const Vec3 c = e1.cross(e2);
    const double len = c.norm();
    if (!(len > 1e-14 * e1.norm() * e2.norm()) || !std::isfinite(len)) {
      t.normal = Vec3::Zero();
      out.degenerate.push_back(i);
    } else {
      t.normal = c / len;
    }
  }
  out.mesh = std::move(mesh);
  return out;
}

struct MeshStats {
  std::size_t triangle_count = 0;
  Bounds bounds;
  double total_area = 0.0;
};

inline MeshStats mesh_stats(const TriangleMesh& mesh) {
  MeshStats s;
  s.triangle_count = mesh.triangles.size();
  for (const auto& t : mesh.triangles) {
    for (const auto& p : t.v) s.bounds.extend(p);
    s.total_area += triangle_area(t);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Writing

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::string& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double get_f32(const unsigned char* p) {
  return static_cast<double>(std::bit_cast<float>(get_u32(p)));
}

inline void put_vec(std::string& out, const char* prefix, const Vec3& v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%s %.9g %.9g %.9g\n", prefix, v.x(), v.y(), v.z());
  out += buf;
}

}  // namespace detail

inline std::string write_stl(const TriangleMesh& mesh, StlFormat format) {
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle& t = mesh.triangles[i];
    if (!triangle_finite(t)) {
      throw ValidationError("triangle " + std::to_string(i) + " has non-finite values");
    }
    const double n = t.normal.norm();
    if (std::abs(n - 1.0) > 1e-3) {
      throw ValidationError("triangle " + std::to_string(i) +
                            " has a non-unit normal; recompute normals before writing");
    }
  }

  std::string out;
  if (format == StlFormat::binary) {
    if (mesh.triangles.size() > UINT32_MAX) throw ValidationError("too many triangles for binary STL");
    out.reserve(stl_binary_size(mesh.triangles.size()));
    std::string header = mesh.name.substr(0, kStlHeaderSize);
    header.resize(kStlHeaderSize, '\0');
    out += header;
    detail::put_u32(out, static_cast<std::uint32_t>(mesh.triangles.size()));
    for (const auto& t : mesh.triangles) {
      for (int k = 0; k < 3; ++k) detail::put_f32(out, t.normal[k]);
      for (const auto& p : t.v) {
        for (int k = 0; k < 3; ++k) detail::put_f32(out, p[k]);
      }
      out.push_back('\0');
      out.push_back('\0');
    }
    return out;
  }

  std::string name;
  for (char c : mesh.name) name.push_back(c == '\n' || c == '\r' ? ' ' : c);
  out += "solid " + name + "\n";
  for (const auto& t : mesh.triangles) {
    detail::put_vec(out, "  facet normal", t.normal);
    out += "    outer loop\n";
    for (const auto& p : t.v) detail::put_vec(out, "      vertex", p);
    out += "    endloop\n  endfacet\n";
  }
  out += "endsolid " + name + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Reading

namespace detail {

class AsciiLexer {
 public:
  explicit AsciiLexer(std::string_view text) : text_(text) {}

  std::size_t line() const { return line_; }

  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string_view word() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  std::string rest_of_line() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
    std::string_view s = text_.substr(start, pos_ - start);
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
  }

  void expect(std::string_view keyword) {
    const std::string_view w = word();
    if (w != keyword) {
      throw ParseError(line_, "expected '" + std::string(keyword) + "', got '" +
                                  std::string(w.empty() ? "<end of file>" : w) + "'");
    }
  }

  double number() {
    const std::string_view w = word();
    double v = 0.0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), v);
    if (w.empty() || res.ec != std::errc() || res.ptr != w.data() + w.size()) {
      throw ParseError(line_, "expected a number, got '" +
                                  std::string(w.empty() ? "<end of file>" : w) + "'");
    }
    if (!std::isfinite(v)) throw ParseError(line_, "non-finite coordinate");
    return v;
  }

  Vec3 vec3() {
    const double x = number();
    const double y = number();
    const double z = number();
    return {x, y, z};
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

inline TriangleMesh read_ascii(std::string_view text) {
  AsciiLexer lex(text);
  lex.expect("solid");
  TriangleMesh mesh;
  mesh.name = lex.rest_of_line();
  for (;;) {
    const std::size_t line = lex.line();
    const std::string_view w = lex.word();
    if (w == "endsolid") {
      lex.rest_of_line();
      if (!lex.at_end()) throw ParseError(lex.line(), "unexpected content after 'endsolid'");
      return mesh;
    }
    if (w != "facet") {
      throw ParseError(line, "expected 'facet' or 'endsolid', got '" +
                                 std::string(w.empty() ? "<end of file>" : w) + "'");
    }
    Triangle t;
    lex.expect("normal");
    t.normal = lex.vec3();
    lex.expect("outer");
    lex.expect("loop");
    for (auto& p : t.v) {
      lex.expect("vertex");
      p = lex.vec3();
    }
    lex.expect("endloop");
    lex.expect("endfacet");
    mesh.triangles.push_back(t);
  }
}

inline TriangleMesh read_binary(std::string_view data) {
  if (data.size() < kStlHeaderSize + 4) {
    throw FormatError("truncated binary STL: expected at least " +
                      std::to_string(kStlHeaderSize + 4) + " bytes, got " +
                      std::to_string(data.size()));
  }
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  const std::uint32_t count = get_u32(bytes + kStlHeaderSize);
  const std::size_t needed = stl_binary_size(count);
  if (data.size() < needed) {
    throw FormatError("truncated binary STL: header declares " + std::to_string(count) +
                      " facets, expected " + std::to_string(needed) + " bytes, got " +
                      std::to_string(data.size()));
  }
  TriangleMesh mesh;
  const std::string_view header = data.substr(0, kStlHeaderSize);
  mesh.name = std::string(header.substr(0, header.find('\0')));
  mesh.triangles.resize(count);
  const unsigned char* p = bytes + kStlHeaderSize + 4;
  for (std::uint32_t i = 0; i < count; ++i, p += kStlFacetSize) {
    Triangle& t = mesh.triangles[i];
    t.normal = {get_f32(p), get_f32(p + 4), get_f32(p + 8)};
    for (int k = 0; k < 3; ++k) {
      const unsigned char* q = p + 12 + 12 * k;
      t.v[k] = {get_f32(q), get_f32(q + 4), get_f32(q + 8)};
    }
    if (!triangle_finite(t)) {
      throw FormatError("binary STL facet " + std::to_string(i) + " has non-finite values");
    }
  }
  return mesh;
}

inline bool starts_with_solid(std::string_view data) {
  std::size_t i = 0;
  while (i < data.size() && (data[i] == ' ' || data[i] == '\t' || data[i] == '\r' || data[i] == '\n')) ++i;
  return data.substr(i).starts_with("solid");
}

inline bool binary_size_consistent(std::string_view data) {
  if (data.size() < kStlHeaderSize + 4) return false;
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  return data.size() == stl_binary_size(get_u32(bytes + kStlHeaderSize));
}

inline bool has_binary_bytes(std::string_view data) {
  for (char c : data) {
    const auto u = static_cast<unsigned char>(c);
    if (u == 0 || u >= 0x80) return true;
  }
  return false;
}

}  // namespace detail

struct LoadedStl {
  TriangleMesh mesh;
  StlFormat format = StlFormat::binary;
};

// ASCII is chosen only when the text starts with `solid` and the whole facet
// grammar parses; binary files whose header begins with "solid" fall back.
inline LoadedStl read_stl_detect(std::string_view data) {
  if (data.empty()) throw FormatError("empty STL input");
  if (detail::starts_with_solid(data)) {
    try {
      return {detail::read_ascii(data), StlFormat::ascii};
    } catch (const ParseError&) {
      if (!detail::binary_size_consistent(data) && !detail::has_binary_bytes(data)) throw;
    }
  }
  return {detail::read_binary(data), StlFormat::binary};
}

inline TriangleMesh read_stl(std::string_view data) { return read_stl_detect(data).mesh; }

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline LoadedStl read_stl_file(const std::filesystem::path& path) {
  return read_stl_detect(read_file_bytes(path));
}

inline void write_stl_file(const std::filesystem::path& path, const TriangleMesh& mesh,
                           StlFormat format) {
  write_file_bytes(path, write_stl(mesh, format));
}

}  // namespace arbor
