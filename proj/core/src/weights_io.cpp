#include "mv3d/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mv3d/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weights file I/O assumes a little-endian host");

namespace mv3d {

namespace {

void put_u32(std::ofstream& f, std::uint32_t v) {
  f.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::ifstream& f, const std::string& path) {
  std::uint32_t v = 0;
  f.read(reinterpret_cast<char*>(&v), 4);
  if (f.gcount() != 4) throw FormatError(path + ": truncated weights file");
  return v;
}

}  // namespace

void save_tensors(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f.write("MV3D", 4);
  put_u32(f, kWeightsVersion);
  put_u32(f, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(f, static_cast<std::uint32_t>(t.name.size()));
    f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(f, static_cast<std::uint32_t>(t.value.rank()));
    for (int d : t.value.shape) put_u32(f, static_cast<std::uint32_t>(d));
    f.write(reinterpret_cast<const char*>(t.value.data.data()),
            static_cast<std::streamsize>(t.value.data.size() * sizeof(float)));
  }
  if (!f) throw IoError("short write to " + path);
}

std::vector<NamedTensor> load_tensors(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  char magic[4] = {};
  f.read(magic, 4);
  if (f.gcount() != 4 || std::memcmp(magic, "MV3D", 4) != 0) {
    throw FormatError(path + ": bad magic, not an MV3D weights file");
  }
  const std::uint32_t version = get_u32(f, path);
  if (version != kWeightsVersion) {
    throw FormatError(path + ": unsupported weights version " + std::to_string(version));
  }
  const std::uint32_t count = get_u32(f, path);
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = get_u32(f, path);
    std::string name(name_len, '\0');
    f.read(name.data(), name_len);
    const std::uint32_t rank = get_u32(f, path);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = static_cast<int>(get_u32(f, path));
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!f) throw FormatError(path + ": truncated tensor '" + name + "'");
    out.push_back({std::move(name), std::move(t)});
  }
  return out;
}

std::vector<NamedTensor> snapshot(const ParamSet& params) {
  std::vector<NamedTensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back({p.name, p.value});
  return out;
}

void restore(ParamSet& params, const std::vector<NamedTensor>& tensors) {
  for (auto& p : params) {
    const NamedTensor* found = nullptr;
    for (const auto& t : tensors) {
      if (t.name == p.name) {
        found = &t;
        break;
      }
    }
    if (!found) throw FormatError("weights file is missing tensor '" + p.name + "'");
    if (found->value.shape != p.value.shape) {
      throw FormatError("tensor '" + p.name + "' has shape " + shape_str(found->value.shape) +
                        ", expected " + shape_str(p.value.shape));
    }
    p.value = found->value;
  }
}

NetConfig net_config_from_tensors(const std::vector<NamedTensor>& tensors) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& t : tensors) {
      if (t.name == name) return t.value;
    }
    throw FormatError("weights file is missing tensor '" + name + "'");
  };
  NetConfig cfg;
  for (int i = 0; i < 5; ++i) {
    const Tensor& w = find("enc.conv" + std::to_string(i) + ".w");
    if (w.rank() != 4) throw FormatError("enc.conv weights must be rank 4");
    cfg.enc_widths[i] = w.shape[0];
  }
  const Tensor& fc = find("enc.fc.w");
  cfg.latent_size = fc.shape[0];
  const int flat = fc.shape[1];
  const int base2 = flat / cfg.enc_widths[4];
  const int base = static_cast<int>(std::lround(std::sqrt(static_cast<double>(base2))));
  if (base < 1 || base * base * cfg.enc_widths[4] != flat) {
    throw FormatError("enc.fc.w shape is inconsistent with the conv stack");
  }
  cfg.image_size = base * 32;
  cfg.angle_width = find("dec.angle0.w").shape[0];
  for (int i = 0; i < 3; ++i) {
    cfg.dec_fc_widths[i] = find("dec.joint" + std::to_string(i) + ".w").shape[0];
  }
  cfg.validate();
  return cfg;
}

}  // namespace mv3d
