#include "dpcc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

namespace dpcc {

namespace {

// Spread the low 21 bits of v so bit i lands on bit 3i.
u64 part1by2(u64 v) {
  v &= 0x1fffff;
  v = (v | (v << 32)) & 0x1f00000000ffffull;
  v = (v | (v << 16)) & 0x1f0000ff0000ffull;
  v = (v | (v << 8)) & 0x100f00f00f00f00full;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ull;
  v = (v | (v << 2)) & 0x1249249249249249ull;
  return v;
}

u64 compact1by2(u64 v) {
  v &= 0x1249249249249249ull;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ull;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00full;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffull;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffull;
  v = (v ^ (v >> 32)) & 0x1fffff;
  return v;
}

constexpr i32 kMaxCoord = (1 << 21) - 1;

}  // namespace

u64 morton_code(const Vec3i& p) {
  if (p.x < 0 || p.y < 0 || p.z < 0 || p.x > kMaxCoord || p.y > kMaxCoord || p.z > kMaxCoord)
    fail(ErrorKind::kUsage, "coordinate out of Morton range [0, 2^21)");
  return part1by2(u64(p.x)) | (part1by2(u64(p.y)) << 1) | (part1by2(u64(p.z)) << 2);
}

Vec3i morton_decode(u64 code) {
  return {i32(compact1by2(code)), i32(compact1by2(code >> 1)), i32(compact1by2(code >> 2))};
}

void canonicalize(PointCloud& cloud) {
  const std::size_t n = cloud.size();
  std::vector<u64> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = morton_code(cloud.positions[i]);

  // Keep the first occurrence of each position in current (file) order.
  std::vector<u32> kept;
  kept.reserve(n);
  std::unordered_set<u64> seen;
  seen.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i)
    if (seen.insert(keys[i]).second) kept.push_back(u32(i));

  std::sort(kept.begin(), kept.end(),
            [&](u32 a, u32 b) { return keys[a] < keys[b]; });

  std::vector<Vec3i> pos(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) pos[i] = cloud.positions[kept[i]];
  cloud.positions = std::move(pos);
  for (auto& ch : cloud.channels) {
    std::vector<i32> vals(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) vals[i] = ch[kept[i]];
    ch = std::move(vals);
  }
}

//============================================================================
// PLY
//============================================================================

namespace {

enum class PropType { kChar, kUchar, kShort, kUshort, kInt, kUint, kFloat, kDouble };

struct Property {
  PropType type;
  std::string name;
};


PropType parse_prop_type(const std::string& s) {
  if (s == "char" || s == "int8") return PropType::kChar;
  if (s == "uchar" || s == "uint8") return PropType::kUchar;
  if (s == "short" || s == "int16") return PropType::kShort;
  if (s == "ushort" || s == "uint16") return PropType::kUshort;
  if (s == "int" || s == "int32") return PropType::kInt;
  if (s == "uint" || s == "uint32") return PropType::kUint;
  if (s == "float" || s == "float32") return PropType::kFloat;
  if (s == "double" || s == "float64") return PropType::kDouble;
  fail(ErrorKind::kFormat, "unsupported PLY property type: " + s);
}

double read_binary_value(ByteReader& r, PropType t) {
  switch (t) {
    case PropType::kChar: return double(i8(r.u8v()));
    case PropType::kUchar: return double(r.u8v());
    case PropType::kShort: return double(i16(r.u16v()));
    case PropType::kUshort: return double(r.u16v());
    case PropType::kInt: return double(r.i32v());
    case PropType::kUint: return double(r.u32v());
    case PropType::kFloat: return double(r.f32v());
    case PropType::kDouble: return r.f64v();
  }
  return 0;
}

i32 to_integral_coord(double v, const std::string& name) {
  if (!std::isfinite(v) || v != std::floor(v))
    fail(ErrorKind::kFormat, "non-integral coordinate in property " + name);
  if (v < 0)
    fail(ErrorKind::kFormat, "negative coordinate in property " + name);
  if (v > double(kMaxCoord))
    fail(ErrorKind::kFormat, "coordinate exceeds 2^21-1 in property " + name);
  return i32(v);
}

}  // namespace

PointCloud load_ply(const std::vector<u8>& bytes, std::optional<int> geometry_bits) {
  // Header is always ASCII lines terminated by '\n'.
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    if (pos >= bytes.size()) fail(ErrorKind::kFormat, "PLY header not terminated");
    std::string line(reinterpret_cast<const char*>(&bytes[start]), pos - start);
    ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") fail(ErrorKind::kFormat, "missing 'ply' magic");

  bool binary = false;
  bool have_format = false;
  u64 vertex_count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::vector<Property> props;

  for (;;) {
    std::string line = next_line();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "comment" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt, ver;
      ss >> fmt >> ver;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else fail(ErrorKind::kFormat, "unsupported PLY format: " + fmt);
      have_format = true;
    } else if (tok == "element") {
      std::string name;
      u64 count = 0;
      ss >> name >> count;
      if (name == "vertex") {
        if (seen_vertex) fail(ErrorKind::kFormat, "duplicate vertex element");
        vertex_count = count;
        in_vertex = true;
        seen_vertex = true;
      } else {
        if (!seen_vertex)
          fail(ErrorKind::kFormat, "element '" + name + "' precedes vertex data");
        in_vertex = false;  // trailing elements are not read
      }
    } else if (tok == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ss >> type;
      if (type == "list") fail(ErrorKind::kFormat, "list property on vertex element");
      ss >> name;
      props.push_back({parse_prop_type(type), name});
    } else if (tok == "end_header") {
      break;
    }
    // other tokens ignored
  }
  if (!have_format) fail(ErrorKind::kFormat, "missing format line");
  if (!seen_vertex) fail(ErrorKind::kFormat, "missing vertex element");

  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "x") ix = int(i);
    else if (props[i].name == "y") iy = int(i);
    else if (props[i].name == "z") iz = int(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(ErrorKind::kFormat, "missing x/y/z properties");

  // Attribute selection: red/green/blue as a triple, else the first other
  // uchar property as a single channel.
  int ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].name == "red") ir = int(i);
    else if (props[i].name == "green") ig = int(i);
    else if (props[i].name == "blue") ib = int(i);
  }

  PointCloud cloud;
  std::vector<int> attr_props;
  if (ir >= 0 && ig >= 0 && ib >= 0) {
    for (int i : {ir, ig, ib})
      if (props[std::size_t(i)].type != PropType::kUchar)
        fail(ErrorKind::kFormat, "color properties must be uchar");
    cloud.attributes.mode = AttributeMode::kRgbColor;
    cloud.attributes.names = {"red", "green", "blue"};
    cloud.attributes.bit_depths = {8, 8, 8};
    attr_props = {ir, ig, ib};
  } else {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (int(i) == ix || int(i) == iy || int(i) == iz) continue;
      if (props[i].type == PropType::kUchar && attr_props.empty()) {
        attr_props.push_back(int(i));
        cloud.attributes.mode = AttributeMode::kSingleChannel;
        cloud.attributes.names = {props[i].name};
        cloud.attributes.bit_depths = {8};
      }
    }
    if (attr_props.empty())
      fail(ErrorKind::kFormat, "no usable attribute property (need red/green/blue or a uchar scalar)");
  }
  for (std::size_t i = 0; i < props.size(); ++i) {
    bool used = int(i) == ix || int(i) == iy || int(i) == iz
      || std::find(attr_props.begin(), attr_props.end(), int(i)) != attr_props.end();
    if (!used)
      std::cerr << "warning: ignoring PLY property '" << props[i].name << "'\n";
  }

  cloud.positions.resize(vertex_count);
  cloud.channels.assign(attr_props.size(), std::vector<i32>(vertex_count));

  auto store = [&](u64 row, const std::vector<double>& vals) {
    cloud.positions[row] = {to_integral_coord(vals[std::size_t(ix)], "x"),
                            to_integral_coord(vals[std::size_t(iy)], "y"),
                            to_integral_coord(vals[std::size_t(iz)], "z")};
    for (std::size_t c = 0; c < attr_props.size(); ++c) {
      double v = vals[std::size_t(attr_props[c])];
      if (v != std::floor(v) || v < 0 || v > 255)
        fail(ErrorKind::kFormat, "attribute value out of 8-bit range");
      cloud.channels[c][row] = i32(v);
    }
  };

  std::vector<double> vals(props.size());
  if (binary) {
    ByteReader r(bytes.data() + pos, bytes.size() - pos);
    for (u64 row = 0; row < vertex_count; ++row) {
      for (std::size_t p = 0; p < props.size(); ++p)
        vals[p] = read_binary_value(r, props[p].type);
      store(row, vals);
    }
  } else {
    std::string body(reinterpret_cast<const char*>(bytes.data() + pos), bytes.size() - pos);
    std::istringstream ss(body);
    for (u64 row = 0; row < vertex_count; ++row) {
      for (std::size_t p = 0; p < props.size(); ++p)
        if (!(ss >> vals[p])) fail(ErrorKind::kFormat, "truncated ASCII vertex data");
      store(row, vals);
    }
  }

  canonicalize(cloud);

  i32 max_coord = 0;
  for (const auto& p : cloud.positions)
    max_coord = std::max({max_coord, p.x, p.y, p.z});
  int needed = 1;
  while ((i64(1) << needed) <= max_coord) ++needed;
  if (geometry_bits) {
    if (*geometry_bits < needed)
      fail(ErrorKind::kUsage, "coordinate exceeds declared geometry bit depth");
    cloud.geometry_bits = *geometry_bits;
  } else {
    cloud.geometry_bits = needed;
  }
  return cloud;
}

std::vector<u8> save_ply(const PointCloud& cloud) {
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << cloud.size() << "\n"
         << "property int x\nproperty int y\nproperty int z\n";
  for (const auto& name : cloud.attributes.names)
    header << "property uchar " << name << "\n";
  header << "end_header\n";

  std::vector<u8> out;
  std::string h = header.str();
  out.insert(out.end(), h.begin(), h.end());
  ByteWriter w(out);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    w.i32v(cloud.positions[i].x);
    w.i32v(cloud.positions[i].y);
    w.i32v(cloud.positions[i].z);
    for (const auto& ch : cloud.channels) {
      i32 v = ch[i];
      if (v < 0 || v > 255) fail(ErrorKind::kInternal, "channel value out of 8-bit range");
      w.u8v(u8(v));
    }
  }
  return out;
}

PointCloud load_ply_file(const std::string& path, std::optional<int> geometry_bits) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kUsage, "cannot open " + path);
  std::vector<u8> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_ply(bytes, geometry_bits);
}

void save_ply_file(const PointCloud& cloud, const std::string& path) {
  std::vector<u8> bytes = save_ply(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kUsage, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

}  // namespace dpcc
