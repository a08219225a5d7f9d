#include "mv3d/ply.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mv3d/errors.hpp"

namespace mv3d {

namespace {

void append_float(std::string& out, float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  out.append(buf, res.ptr);
}

}  // namespace

void export_ply(const PointCloud& pc, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << "ply\n"
    << "format ascii 1.0\n"
    << "element vertex " << pc.size() << "\n"
    << "property float x\n"
    << "property float y\n"
    << "property float z\n"
    << "property uchar red\n"
    << "property uchar green\n"
    << "property uchar blue\n"
    << "end_header\n";
  std::string line;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    line.clear();
    append_float(line, pc.points[i].x);
    line.push_back(' ');
    append_float(line, pc.points[i].y);
    line.push_back(' ');
    append_float(line, pc.points[i].z);
    for (int c = 0; c < 3; ++c) {
      line.push_back(' ');
      line += std::to_string(pc.colors[i][c]);
    }
    line.push_back('\n');
    f << line;
  }
  if (!f) throw IoError("short write to " + path);
}

PointCloud import_ply(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != "ply") throw FormatError(path + ": missing ply magic");
  std::size_t count = 0;
  bool ascii = false;
  while (std::getline(f, line)) {
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = (fmt == "ascii");
    } else if (word == "element") {
      std::string what;
      ss >> what >> count;
      if (what != "vertex") throw FormatError(path + ": unsupported element " + what);
    }
  }
  if (!ascii) throw FormatError(path + ": only ascii 1.0 is supported");
  PointCloud pc;
  pc.points.reserve(count);
  pc.colors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    float x, y, z;
    int r, g, b;
    if (!(f >> x >> y >> z >> r >> g >> b)) {
      throw FormatError(path + ": truncated vertex list at " + std::to_string(i));
    }
    pc.points.push_back({x, y, z});
    pc.colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                         static_cast<std::uint8_t>(b)});
  }
  return pc;
}

}  // namespace mv3d
