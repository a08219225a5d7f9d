#include "mv3d/pnm.hpp"

#include <fstream>

#include "mv3d/errors.hpp"

namespace mv3d {

namespace {

void write_header(std::ofstream& f, const char* magic, int w, int h, int maxval) {
  f << magic << "\n" << w << " " << h << "\n" << maxval << "\n";
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& path, const char* magic) {
  if (next_token(in) != magic) {
    throw FormatError(path + ": not a " + std::string(magic) + " file");
  }
  PnmHeader h;
  try {
    h.width = std::stoi(next_token(in));
    h.height = std::stoi(next_token(in));
    h.maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw FormatError(path + ": malformed PNM header");
  }
  if (h.width <= 0 || h.height <= 0) throw FormatError(path + ": bad dimensions");
  return h;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  return f;
}

}  // namespace

void write_ppm(const std::string& path, const ImageU8& img) {
  if (img.channels != 3) throw std::invalid_argument("write_ppm: image must have 3 channels");
  auto f = open_out(path);
  write_header(f, "P6", img.width, img.height, 255);
  f.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  if (!f) throw IoError("short write to " + path);
}

ImageU8 read_ppm(const std::string& path) {
  auto f = open_in(path);
  const PnmHeader h = read_header(f, path, "P6");
  if (h.maxval != 255) throw FormatError(path + ": expected maxval 255");
  ImageU8 img(h.width, h.height, 3);
  f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.px.size())) {
    throw FormatError(path + ": truncated pixel data");
  }
  return img;
}

void write_pgm16(const std::string& path, const DepthImage& img) {
  auto f = open_out(path);
  write_header(f, "P5", img.width, img.height, 65535);
  std::vector<std::uint8_t> buf(img.px.size() * 2);
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    buf[2 * i] = static_cast<std::uint8_t>(img.px[i] >> 8);  // MSB first
    buf[2 * i + 1] = static_cast<std::uint8_t>(img.px[i] & 0xFF);
  }
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("short write to " + path);
}

DepthImage read_pgm16(const std::string& path) {
  auto f = open_in(path);
  const PnmHeader h = read_header(f, path, "P5");
  if (h.maxval != 65535) throw FormatError(path + ": expected maxval 65535");
  DepthImage img(h.width, h.height);
  std::vector<std::uint8_t> buf(img.px.size() * 2);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (f.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw FormatError(path + ": truncated pixel data");
  }
  for (std::size_t i = 0; i < img.px.size(); ++i) {
    img.px[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  return img;
}

void write_pgm8(const std::string& path, const MaskImage& img) {
  auto f = open_out(path);
  write_header(f, "P5", img.width, img.height, 255);
  f.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  if (!f) throw IoError("short write to " + path);
}

MaskImage read_pgm8(const std::string& path) {
  auto f = open_in(path);
  const PnmHeader h = read_header(f, path, "P5");
  if (h.maxval != 255) throw FormatError(path + ": expected maxval 255");
  MaskImage img(h.width, h.height);
  f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.px.size())) {
    throw FormatError(path + ": truncated pixel data");
  }
  return img;
}

}  // namespace mv3d
