#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

std::string bin_path() {
  const char* env = std::getenv("MV3D_BIN");
  REQUIRE_MESSAGE(env != nullptr, "MV3D_BIN must point at the mv3d binary");
  return env;
}

int run(const std::string& args) {
  const std::string cmd = bin_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = fs::temp_directory_path() / ("mv3d_cli_" + std::to_string(rng()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// filename -> content for every regular file under dir
std::map<std::string, std::string> tree(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out[fs::relative(e.path(), dir).string()] = slurp(e.path().string());
    }
  }
  return out;
}

const char* kTinyNet =
    "image_size=32\n"
    "enc_widths=4,4,8,8,8\n"
    "latent=16\n"
    "angle_width=8\n"
    "dec_fc=16,16,8\n"
    "object_count=12\n"
    "test_fraction=0.2\n"
    "k_difficult=1\n"
    "batch=2\n"
    "checkpoint_every=0\n";

}  // namespace

TEST_CASE("gen-data is deterministic, honors gen_count, and reports I/O failures") {
  TempDir tmp;
  write_file(tmp.file("cfg.txt"), std::string(kTinyNet) + "gen_count=5\n");

  // rerun into the same path: the tree (resolved config included) must not move
  CHECK(run("gen-data --config " + tmp.file("cfg.txt") + " --out " + tmp.file("a")) == 0);
  const auto ta = tree(tmp.file("a"));
  fs::remove_all(tmp.file("a"));
  CHECK(run("gen-data --config " + tmp.file("cfg.txt") + " --out " + tmp.file("a")) == 0);
  const auto tb = tree(tmp.file("a"));
  CHECK(ta == tb);
  CHECK(ta.count("manifest.txt") == 1);
  CHECK(ta.count("sample_00000_rgb.ppm") == 1);
  CHECK(ta.count("sample_00004_depth.pgm") == 1);
  CHECK(ta.count("resolved_config.txt") == 1);

  std::istringstream manifest(ta.at("manifest.txt"));
  std::string line;
  int lines = 0;
  while (std::getline(manifest, line)) ++lines;
  CHECK(lines == 5);

  // zero samples: empty manifest, success
  write_file(tmp.file("zero.txt"), std::string(kTinyNet) + "gen_count=0\n");
  CHECK(run("gen-data --config " + tmp.file("zero.txt") + " --out " + tmp.file("z")) == 0);
  CHECK(tree(tmp.file("z")).at("manifest.txt").empty());

  // a file where the output directory should go -> exit 2
  write_file(tmp.file("blocker"), "x");
  CHECK(run("gen-data --config " + tmp.file("cfg.txt") + " --out " + tmp.file("blocker") +
            "/out") == 2);
}

TEST_CASE("config errors and missing files map to the documented exit codes") {
  TempDir tmp;
  write_file(tmp.file("bad.txt"), "no_such_key=1\n");
  CHECK(run("gen-data --config " + tmp.file("bad.txt") + " --out " + tmp.file("o")) == 5);
  CHECK(run("gen-data --config " + tmp.file("absent.txt") + " --out " + tmp.file("o")) == 2);
}

TEST_CASE("numerical blow-up exits 3 and leaves the last good checkpoint") {
  TempDir tmp;
  // an absurd learning rate overflows the parameters within a few steps
  write_file(tmp.file("explode.txt"),
             std::string(kTinyNet) + "steps=4\nseed=3\nlr=1e35\ncheckpoint_every=1\n");
  CHECK(run("train --config " + tmp.file("explode.txt") + " --out " + tmp.file("boom")) == 3);
  CHECK(fs::exists(tmp.file("boom/checkpoint.mv3d")));
}

TEST_CASE("train/predict/fuse/eval pipeline on a tiny configuration") {
  TempDir tmp;
  write_file(tmp.file("cfg.txt"),
             std::string(kTinyNet) + "steps=6\nseed=11\neval_input_views=2\neval_output_views=2\n");

  REQUIRE(run("train --config " + tmp.file("cfg.txt") + " --out " + tmp.file("run1")) == 0);
  CHECK(fs::exists(tmp.file("run1/weights.mv3d")));
  CHECK(fs::exists(tmp.file("run1/checkpoint.mv3d")));
  CHECK(fs::exists(tmp.file("run1/loss_log.txt")));
  CHECK(fs::exists(tmp.file("run1/split.txt")));
  CHECK(fs::exists(tmp.file("run1/resolved_config.txt")));

  {
    std::istringstream log(slurp(tmp.file("run1/loss_log.txt")));
    int step;
    double loss;
    int count = 0;
    while (log >> step >> loss) {
      ++count;
      CHECK(step == count);
      CHECK(loss > 0);
    }
    CHECK(count == 6);
  }

  SUBCASE("same-seed reruns produce byte-identical weights") {
    REQUIRE(run("train --config " + tmp.file("cfg.txt") + " --out " + tmp.file("run2")) == 0);
    CHECK(slurp(tmp.file("run1/weights.mv3d")) == slurp(tmp.file("run2/weights.mv3d")));
    CHECK(slurp(tmp.file("run1/loss_log.txt")) == slurp(tmp.file("run2/loss_log.txt")));
  }

  SUBCASE("a checkpointed run resumes to the identical final state") {
    write_file(tmp.file("half.txt"),
               std::string(kTinyNet) + "steps=3\nseed=11\n");
    REQUIRE(run("train --config " + tmp.file("half.txt") + " --out " + tmp.file("half")) == 0);
    REQUIRE(run("train --config " + tmp.file("cfg.txt") + " --out " + tmp.file("resumed") +
                " --weights " + tmp.file("half/checkpoint.mv3d")) == 0);
    CHECK(slurp(tmp.file("resumed/weights.mv3d")) == slurp(tmp.file("run1/weights.mv3d")));
    // resumed log covers steps 4..6 and ends at the same loss
    std::istringstream full_log(slurp(tmp.file("run1/loss_log.txt")));
    std::istringstream res_log(slurp(tmp.file("resumed/loss_log.txt")));
    std::string full_lines, line;
    while (std::getline(full_log, line)) full_lines = line;
    std::string res_last;
    int res_first_step = 0;
    bool first = true;
    while (std::getline(res_log, line)) {
      if (first) {
        res_first_step = std::stoi(line.substr(0, line.find(' ')));
        first = false;
      }
      res_last = line;
    }
    CHECK(res_first_step == 4);
    CHECK(res_last == full_lines);
  }

  SUBCASE("predict writes one rgb + one depth pair per viewpoint") {
    // input image: reuse a generated sample
    write_file(tmp.file("gen.txt"), std::string(kTinyNet) + "gen_count=1\nseed=11\n");
    REQUIRE(run("gen-data --config " + tmp.file("gen.txt") + " --out " + tmp.file("gen")) == 0);
    const std::string input = tmp.file("gen/sample_00000_rgb.ppm");

    const std::string vps =
        " --az 0 --el 20 --r 2 --az 60 --el 20 --r 2 --az 120 --el 20 --r 2"
        " --az 180 --el 20 --r 2 --az 240 --el 20 --r 2 --az 300 --el 20 --r 2";
    REQUIRE(run("predict --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
                vps + " --out " + tmp.file("pred")) == 0);
    int rgb_files = 0, depth_files = 0;
    for (const auto& e : fs::directory_iterator(tmp.file("pred"))) {
      const std::string name = e.path().filename().string();
      if (name.starts_with("pred_") && name.ends_with("_rgb.ppm")) ++rgb_files;
      if (name.starts_with("pred_") && name.ends_with("_depth.pgm")) ++depth_files;
    }
    CHECK(rgb_files == 6);
    CHECK(depth_files == 6);
    CHECK(slurp(tmp.file("pred/pred_00_rgb.ppm")).substr(0, 2) == "P6");
    CHECK(slurp(tmp.file("pred/pred_00_depth.pgm")).substr(0, 2) == "P5");

    // deterministic bytes on a wiped rerun into the same path
    REQUIRE(run("predict --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
                " --az 15 --el 10 --r 2 --out " + tmp.file("pred_a")) == 0);
    const auto first = tree(tmp.file("pred_a"));
    fs::remove_all(tmp.file("pred_a"));
    REQUIRE(run("predict --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
                " --az 15 --el 10 --r 2 --out " + tmp.file("pred_a")) == 0);
    CHECK(first == tree(tmp.file("pred_a")));

    // mismatched viewpoint component counts -> config error
    CHECK(run("predict --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
              " --az 0 --az 10 --el 20 --r 2 --out " + tmp.file("pred_bad")) == 5);

    SUBCASE("fuse emits a consistent deterministic point cloud") {
      REQUIRE(run("fuse --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
                  " --out " + tmp.file("fuse_a")) == 0);
      REQUIRE(run("fuse --weights " + tmp.file("run1/weights.mv3d") + " --input " + input +
                  " --out " + tmp.file("fuse_b")) == 0);
      const std::string ply = slurp(tmp.file("fuse_a/cloud.ply"));
      CHECK(ply == slurp(tmp.file("fuse_b/cloud.ply")));

      std::istringstream in(ply);
      std::string line;
      std::size_t declared = 0;
      int body = 0;
      bool in_body = false;
      while (std::getline(in, line)) {
        if (line.rfind("element vertex ", 0) == 0) declared = std::stoul(line.substr(15));
        if (in_body && !line.empty()) ++body;
        if (line == "end_header") in_body = true;
      }
      CHECK(declared > 0);
      CHECK(static_cast<std::size_t>(body) == declared);
    }
  }

  SUBCASE("malformed weights magic exits 4") {
    write_file(tmp.file("fake.mv3d"), "not a weights file");
    write_file(tmp.file("img.ppm"), "P6\n1 1\n255\nxyz");
    CHECK(run("predict --weights " + tmp.file("fake.mv3d") + " --input " + tmp.file("img.ppm") +
              " --az 0 --el 0 --r 2 --out " + tmp.file("o")) == 4);
  }

  SUBCASE("eval emits the report and matrices deterministically") {
    REQUIRE(run("eval --weights " + tmp.file("run1/weights.mv3d") + " --config " +
                tmp.file("cfg.txt") + " --out " + tmp.file("run1")) == 0);
    const std::string report = slurp(tmp.file("run1/report.tsv"));
    std::istringstream in(report);
    std::string line;
    std::getline(in, line);
    CHECK(line == "method\tcolor_normal\tcolor_difficult\tdepth_normal\tdepth_difficult");
    int rows = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::istringstream cells(line);
      std::string method;
      std::getline(cells, method, '\t');
      double v;
      int ncells = 0;
      while (cells >> v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        ++ncells;
      }
      CHECK(ncells == 4);
    }
    CHECK(rows == 4);
    CHECK(fs::exists(tmp.file("run1/confusion.tsv")));
    CHECK(fs::exists(tmp.file("run1/confusion.ppm")));
    CHECK(fs::exists(tmp.file("run1/latent_distances.tsv")));

    const std::string confusion = slurp(tmp.file("run1/confusion.tsv"));
    REQUIRE(run("eval --weights " + tmp.file("run1/weights.mv3d") + " --config " +
                tmp.file("cfg.txt") + " --out " + tmp.file("run1")) == 0);
    CHECK(slurp(tmp.file("run1/report.tsv")) == report);
    CHECK(slurp(tmp.file("run1/confusion.tsv")) == confusion);

    // image-size mismatch between weights and config -> exit 5
    write_file(tmp.file("cfg64.txt"),
               "image_size=64\nenc_widths=4,4,8,8,8\nlatent=16\nangle_width=8\n"
               "dec_fc=16,16,32\nobject_count=12\ntest_fraction=0.2\nk_difficult=1\nseed=11\n");
    CHECK(run("eval --weights " + tmp.file("run1/weights.mv3d") + " --config " +
              tmp.file("cfg64.txt") + " --out " + tmp.file("run1")) == 5);

    // restricted report keeps the chosen baseline and the network
    REQUIRE(run("eval --weights " + tmp.file("run1/weights.mv3d") + " --config " +
                tmp.file("cfg.txt") + " --out " + tmp.file("run1") + " --metric rgb") == 0);
    const std::string filtered = slurp(tmp.file("run1/report.tsv"));
    CHECK(filtered.find("NN RGB") != std::string::npos);
    CHECK(filtered.find("Network") != std::string::npos);
    CHECK(filtered.find("NN HOG") == std::string::npos);
  }
}
