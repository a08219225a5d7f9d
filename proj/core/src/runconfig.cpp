#include "mv3d/runconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mv3d/errors.hpp"

namespace mv3d {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

template <std::size_t N>
std::array<int, N> parse_int_list(const std::string& key, const std::string& value) {
  std::array<int, N> out{};
  std::stringstream ss(value);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= N) throw ConfigError("config: key '" + key + "' expects " + std::to_string(N) +
                                  " comma-separated integers");
    out[i++] = static_cast<int>(parse_int(key, trim(item)));
  }
  if (i != N) {
    throw ConfigError("config: key '" + key + "' expects " + std::to_string(N) +
                      " comma-separated integers, got " + std::to_string(i));
  }
  return out;
}

template <std::size_t N>
std::string join(const std::array<int, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) {
    if (i) s += ",";
    s += std::to_string(a[i]);
  }
  return s;
}

std::string format_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "image_size") {
    image_size = static_cast<int>(parse_int(key, value));
  } else if (key == "enc_widths") {
    enc_widths = parse_int_list<5>(key, value);
  } else if (key == "latent") {
    latent = static_cast<int>(parse_int(key, value));
  } else if (key == "angle_width") {
    angle_width = static_cast<int>(parse_int(key, value));
  } else if (key == "dec_fc") {
    dec_fc = parse_int_list<3>(key, value);
  } else if (key == "lambda") {
    lambda = parse_real(key, value);
  } else if (key == "alpha") {
    alpha = parse_real(key, value);
  } else if (key == "adversarial") {
    adversarial = parse_int(key, value) != 0;
  } else if (key == "steps") {
    steps = static_cast<int>(parse_int(key, value));
  } else if (key == "batch") {
    batch = static_cast<int>(parse_int(key, value));
  } else if (key == "lr") {
    lr = parse_real(key, value);
  } else if (key == "mode") {
    if (value != "realistic" && value != "basic") {
      throw ConfigError("config: mode must be 'realistic' or 'basic', got '" + value + "'");
    }
    mode = value;
  } else if (key == "family") {
    if (value != "vehicle" && value != "chair") {
      throw ConfigError("config: family must be 'vehicle' or 'chair', got '" + value + "'");
    }
    family = value;
  } else if (key == "object_count") {
    object_count = static_cast<int>(parse_int(key, value));
  } else if (key == "gen_count") {
    gen_count = static_cast<int>(parse_int(key, value));
  } else if (key == "test_fraction") {
    test_fraction = parse_real(key, value);
  } else if (key == "k_difficult") {
    k_difficult = static_cast<int>(parse_int(key, value));
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "background_dir") {
    background_dir = value;
  } else if (key == "eval_input_views") {
    eval_input_views = static_cast<int>(parse_int(key, value));
  } else if (key == "eval_output_views") {
    eval_output_views = static_cast<int>(parse_int(key, value));
  } else if (key == "checkpoint_every") {
    checkpoint_every = static_cast<int>(parse_int(key, value));
  } else if (key == "fuse_voxel") {
    fuse_voxel = parse_real(key, value);
  } else if (key == "fuse_outlier") {
    fuse_outlier = parse_real(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key=value: '" + t +
                        "'");
    }
    cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::resolved() const {
  std::string s;
  s += "seed=" + std::to_string(seed) + "\n";
  s += "image_size=" + std::to_string(image_size) + "\n";
  s += "enc_widths=" + join(enc_widths) + "\n";
  s += "latent=" + std::to_string(latent) + "\n";
  s += "angle_width=" + std::to_string(angle_width) + "\n";
  s += "dec_fc=" + join(dec_fc) + "\n";
  s += "lambda=" + format_real(lambda) + "\n";
  s += "alpha=" + format_real(alpha) + "\n";
  s += "adversarial=" + std::string(adversarial ? "1" : "0") + "\n";
  s += "steps=" + std::to_string(steps) + "\n";
  s += "batch=" + std::to_string(batch) + "\n";
  s += "lr=" + format_real(lr) + "\n";
  s += "mode=" + mode + "\n";
  s += "family=" + family + "\n";
  s += "object_count=" + std::to_string(object_count) + "\n";
  s += "gen_count=" + std::to_string(gen_count) + "\n";
  s += "test_fraction=" + format_real(test_fraction) + "\n";
  s += "k_difficult=" + std::to_string(k_difficult) + "\n";
  s += "out_dir=" + out_dir + "\n";
  s += "background_dir=" + background_dir + "\n";
  s += "eval_input_views=" + std::to_string(eval_input_views) + "\n";
  s += "eval_output_views=" + std::to_string(eval_output_views) + "\n";
  s += "checkpoint_every=" + std::to_string(checkpoint_every) + "\n";
  s += "fuse_voxel=" + format_real(fuse_voxel) + "\n";
  s += "fuse_outlier=" + format_real(fuse_outlier) + "\n";
  return s;
}

NetConfig RunConfig::net_config() const {
  NetConfig cfg;
  cfg.image_size = image_size;
  cfg.enc_widths = enc_widths;
  cfg.latent_size = latent;
  cfg.angle_width = angle_width;
  cfg.dec_fc_widths = dec_fc;
  cfg.lambda = static_cast<float>(lambda);
  cfg.alpha = static_cast<float>(alpha);
  cfg.adversarial = adversarial;
  cfg.validate();
  return cfg;
}

RenderConfig RunConfig::render_config() const {
  RenderConfig cfg;
  cfg.mode = mode == "basic" ? RenderMode::Basic : RenderMode::Realistic;
  cfg.background_dir = background_dir;
  return cfg;
}

ObjectFamily RunConfig::object_family() const {
  return family == "chair" ? ObjectFamily::Chair : ObjectFamily::Vehicle;
}

}  // namespace mv3d
