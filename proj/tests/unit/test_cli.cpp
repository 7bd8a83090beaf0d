#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "kscdl/cli.hpp"
#include "kscdl/io.hpp"

using namespace kscdl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("kscdl_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> synth_args(const fs::path& out, const std::string& seed) {
  return {"gen-synth", "--out", out.string(), "--classes", "3", "--per-class", "4", "--landmarks", "8",
          "--dim", "2", "--min-length", "10", "--max-length", "12", "--seed", seed};
}

}  // namespace

TEST_CASE("gen-synth is byte-identical under a fixed seed") {
  const fs::path dir = scratch("synth");
  REQUIRE(cli(synth_args(dir / "a", "5")).status == 0);
  REQUIRE(cli(synth_args(dir / "b", "5")).status == 0);
  REQUIRE(cli(synth_args(dir / "c", "6")).status == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    const auto name = e.path().filename();
    CHECK(read_text(dir / "a" / name) == read_text(dir / "b" / name));
    ++files;
  }
  CHECK(files == 15);
  CHECK(read_text(dir / "a" / "c0_0.txt") != read_text(dir / "c" / "c0_0.txt"));
  const auto train = load_manifest(dir / "a" / "train.txt");
  CHECK(train.size() == 6);
  fs::remove_all(dir);
}

TEST_CASE("kernel-check reports a PSD Gram matrix for 2D data") {
  const fs::path dir = scratch("kcheck");
  REQUIRE(cli(synth_args(dir, "1")).status == 0);
  const Run r = cli({"kernel-check", "--manifest", (dir / "manifest.txt").string(), "--sigma", "0.5"});
  CHECK(r.status == 0);
  std::istringstream line(r.out);
  std::string key, sigma, frames_key, count, min_key;
  double min_eig = -1;
  line >> key >> sigma >> frames_key >> count >> min_key >> min_eig;
  CHECK(sigma == "0.5");
  CHECK(min_key == "min_eigenvalue");
  CHECK(min_eig >= -1e-8);
  CHECK(r.out.find("psd yes") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("train, eval, encode and classify") {
  const fs::path dir = scratch("train");
  REQUIRE(cli(synth_args(dir, "2")).status == 0);
  const auto bundle = (dir / "m.json").string();
  Run r = cli({"train", "--mode", "intrinsic", "--manifest", (dir / "train.txt").string(), "--out", bundle,
               "--ftp-levels", "4"});
  REQUIRE(r.status == 0);
  const std::string first = read_text(bundle);
  r = cli({"train", "--mode", "intrinsic", "--manifest", (dir / "train.txt").string(), "--out", bundle,
           "--ftp-levels", "4", "--threads", "3"});
  REQUIRE(r.status == 0);
  CHECK(read_text(bundle) == first);

  r = cli({"eval", "--model", bundle, "--manifest", (dir / "test.txt").string(), "--report",
           (dir / "report.json").string()});
  CHECK(r.status == 0);
  CHECK(r.out.rfind("accuracy ", 0) == 0);
  CHECK(r.out.find("actual") != std::string::npos);
  CHECK(read_text(dir / "report.json").find("\"confusion\"") != std::string::npos);

  r = cli({"encode", "--model", bundle, "--input", (dir / "c1_2.txt").string(), "--out",
           (dir / "codes.txt").string()});
  REQUIRE(r.status == 0);
  const SparseSeries s = load_series(dir / "codes.txt");
  CHECK(s.block_sizes.size() == 3);
  Eigen::Index off = 0;
  for (int b : s.block_sizes) {
    for (Eigen::Index t = 0; t < s.length(); ++t) CHECK(std::abs(s.codes.row(t).segment(off, b).sum() - 1.0) < 1e-6);
    off += b;
  }

  r = cli({"classify", "--model", bundle, "--input", (dir / "c1_2.txt").string()});
  CHECK(r.status == 0);
  CHECK(r.out.rfind("label ", 0) == 0);

  r = cli({"train-dict", "--manifest", (dir / "train.txt").string(), "--out", (dir / "d.json").string(),
           "--ftp-levels", "4"});
  REQUIRE(r.status == 0);
  r = cli({"train", "--manifest", (dir / "train.txt").string(), "--dict", (dir / "d.json").string(), "--out",
           (dir / "m2.json").string(), "--ftp-levels", "4"});
  REQUIRE(r.status == 0);
  CHECK(read_text(dir / "m2.json") == first);

  r = cli({"cluster", "--manifest", (dir / "train.txt").string(), "--report", (dir / "clusters.json").string()});
  CHECK(r.status == 0);
  CHECK(fs::exists(dir / "clusters.json"));
  fs::remove_all(dir);
}

TEST_CASE("config files supply defaults that flags override") {
  const fs::path dir = scratch("config");
  REQUIRE(cli(synth_args(dir, "3")).status == 0);
  write_text_atomic(dir / "cfg.toml", "mode = \"linear\"\nftp-levels = 3\nlambda = 0.05\n");
  const Run r = cli({"--config", (dir / "cfg.toml").string(), "train-dict", "--manifest",
                     (dir / "train.txt").string(), "--out", (dir / "d.json").string(), "--ftp-levels", "2"});
  REQUIRE(r.status == 0);
  const std::string text = read_text(dir / "d.json");
  CHECK(text.find("\"mode\": \"linear\"") != std::string::npos);
  CHECK(text.find("\"ftp_levels\": 2") != std::string::npos);
  CHECK(text.find("\"lambda\": 0.05") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("failures print one machine-parsable line") {
  const fs::path dir = scratch("errors");
  REQUIRE(cli(synth_args(dir, "4")).status == 0);
  Run r = cli({"eval", "--model", (dir / "missing.json").string(), "--manifest", (dir / "test.txt").string()});
  CHECK(r.status == 1);
  CHECK(r.err == "error: IoError: cannot open " + (dir / "missing.json").string() + "\n");

  REQUIRE(cli({"train-dict", "--mode", "linear", "--manifest", (dir / "train.txt").string(), "--out",
               (dir / "d.json").string()})
              .status == 0);
  std::string text = read_text(dir / "d.json");
  text.replace(text.find("\"1.0\""), 5, "\"9.0\"");
  write_text_atomic(dir / "d.json", text);
  r = cli({"classify", "--model", (dir / "d.json").string(), "--input", (dir / "c0_0.txt").string()});
  CHECK(r.status == 1);
  CHECK(r.err.rfind("error: VersionMismatch: ", 0) == 0);
  CHECK(r.err.find('\n') == r.err.size() - 1);

  write_text_atomic(dir / "bad.txt", "{\"n\": 8, \"m\": 2, \"L\": 2}\n1 2 3\n1 2 3\n");
  r = cli({"classify", "--model", (dir / "d.json").string(), "--input", (dir / "bad.txt").string()});
  CHECK(r.status == 1);

  r = cli({"train", "--mode", "kernel", "--manifest", "x", "--out", "y"});
  CHECK(r.status == 2);
  CHECK(r.err.rfind("error: Usage: ", 0) == 0);
  CHECK(cli({}).status == 2);
  CHECK(cli({"--help"}).status == 0);
  fs::remove_all(dir);
}
