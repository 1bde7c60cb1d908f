// Drives the built `ahcl` executable end to end.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ahcl/checkpoint.hpp"
#include "ahcl/contrastive.hpp"
#include "ahcl/data.hpp"
#include "ahcl/trainer.hpp"

using namespace ahcl;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ahcl_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string p(const std::string& name) { return (work_dir() / name).string(); }

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string out_file = p("stdout.txt");
  const std::string cmd = std::string(AHCL_CLI) + " " + args + " > " + out_file + " 2> " + p("stderr.txt");
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

// Trace without the wall-clock column.
std::string loss_columns(const std::string& trace) {
  std::stringstream in(trace), out;
  std::string line;
  while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << "\n";
  return out.str();
}

const std::string kSmall = " --hidden 16 --embed-dim 8 --quiet";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit with 1") {
  CHECK(run("").code == 1);
  CHECK(run("train --bogus").code == 1);
  CHECK(run("cluster --k 2 --method nope --out " + p("x.txt")).code == 1);
  CHECK(run("train --data " + p("none.csv") + " --out " + p("no_such_dir")).code == 1);
}

TEST_CASE("full pipeline and determinism") {
  REQUIRE(run("blobs --n-per-cluster 20 --dim 6 --seed 3 --out " + p("blobs.csv") + " --truth " + p("truth.txt")).code == 0);
  for (const char* tag : {"a", "b"}) {
    fs::create_directories(p(std::string("run_") + tag));
    REQUIRE(run("train --data " + p("blobs.csv") + " --label-column -1 --epochs 5 --seed 1 --out " +
                p(std::string("run_") + tag) + kSmall)
                .code == 0);
  }
  const std::string trace_a = slurp(p("run_a/trace.csv")), trace_b = slurp(p("run_b/trace.csv"));
  CHECK(trace_a.rfind("epoch,ahcl,mse,total,wall_seconds\n", 0) == 0);
  CHECK(std::count(trace_a.begin(), trace_a.end(), '\n') == 6);
  CHECK(loss_columns(trace_a) == loss_columns(trace_b));
  CHECK(slurp(p("run_a/model.ckpt")) == slurp(p("run_b/model.ckpt")));

  std::string metrics[2];
  for (int i = 0; i < 2; ++i) {
    REQUIRE(run("graph --checkpoint " + p("run_a/model.ckpt") + " --data " + p("blobs.csv") +
                " --label-column -1 --out " + p("y.csv"))
                .code == 0);
    REQUIRE(run("cluster --affinity " + p("y.csv") + " --k 4 --seed 0 --out " + p("pred.txt")).code == 0);
    const Run e = run("eval --labels " + p("pred.txt") + " --truth " + p("truth.txt") +
                      " --dataset blobs --method sc-y --seed 0");
    REQUIRE(e.code == 0);
    metrics[i] = e.out;
  }
  CHECK(metrics[0] == metrics[1]);
  const auto j = nlohmann::json::parse(metrics[0]);
  CHECK(j["dataset"] == "blobs");
  CHECK(j["acc"].get<double>() >= 0.0);

  const Matrix y = data::load_matrix_csv(p("y.csv"));
  CHECK(y.rows() == 80);
  CHECK(y.cols() == 80);

  for (const char* method : {"sc-y", "sc-z", "km-z"}) {
    CHECK(run("cluster --checkpoint " + p("run_a/model.ckpt") + " --data " + p("blobs.csv") +
              " --label-column -1 --method " + method + " --k 4 --out " + p("m.txt"))
              .code == 0);
    CHECK(data::load_labels(p("m.txt")).size() == 80);
  }
  CHECK(run("cluster --method km-z --k 2 --out " + p("m.txt")).code == 1);
  CHECK(run("cluster --checkpoint " + p("run_a/model.ckpt") + " --data " + p("blobs.csv") +
            " --label-column -1 --method km-z --k 81 --out " + p("m.txt"))
            .code == 1);
}

TEST_CASE("zero epochs writes the initialization") {
  REQUIRE(run("blobs --n-per-cluster 5 --dim 4 --out " + p("tiny.csv")).code == 0);
  fs::create_directories(p("init"));
  REQUIRE(run("train --data " + p("tiny.csv") + " --label-column -1 --epochs 0 --seed 9 --out " + p("init") + kSmall)
              .code == 0);
  CHECK(slurp(p("init/trace.csv")) == "epoch,ahcl,mse,total,wall_seconds\n");
  data::CsvOptions o;
  o.label_column = -1;
  const auto ds = data::load_csv(p("tiny.csv"), o);
  RunConfig c;
  c.hidden = {16};
  c.embed_dim = 8;
  c.seed = 9;
  CHECK(slurp(p("init/model.ckpt")) == serialize_checkpoint(initial_model(c, ds.x)));
}

TEST_CASE("config file with flag precedence") {
  REQUIRE(run("blobs --n-per-cluster 5 --dim 4 --out " + p("cfg.csv")).code == 0);
  write(p("run.cfg"), "epochs=2\nembed-dim=4\nhidden=8\nquiet=true\n");
  fs::create_directories(p("cfg1"));
  fs::create_directories(p("cfg2"));
  REQUIRE(run("train --config " + p("run.cfg") + " --data " + p("cfg.csv") + " --label-column -1 --out " + p("cfg1")).code == 0);
  const std::string t1 = slurp(p("cfg1/trace.csv"));
  CHECK(std::count(t1.begin(), t1.end(), '\n') == 3);
  REQUIRE(run("train --config " + p("run.cfg") + " --epochs 3 --data " + p("cfg.csv") + " --label-column -1 --out " +
              p("cfg2"))
              .code == 0);
  const std::string t = slurp(p("cfg2/trace.csv"));
  CHECK(std::count(t.begin(), t.end(), '\n') == 4);
  CHECK(load_checkpoint(p("cfg2/model.ckpt")).encoder.out_dim() == 4);
}

TEST_CASE("divergence exits with 3 and leaves no outputs") {
  REQUIRE(run("blobs --n-per-cluster 5 --dim 4 --out " + p("div.csv")).code == 0);
  fs::create_directories(p("div"));
  CHECK(run("train --data " + p("div.csv") + " --label-column -1 --lr 1e9 --decay-factor 1 --out " + p("div") + kSmall)
            .code == 3);
  CHECK(fs::is_empty(p("div")));
}

TEST_CASE("graph command") {
  // Identity encoder without preprocessing: embeddings equal the raw rows.
  TrainedModel m;
  m.minmax = false;
  m.normalize_embeddings = false;
  m.margin = 0.75;
  nn::Layer id;
  id.weight = Matrix::Identity(2, 2);
  id.bias = Vector::Zero(2);
  id.activation = nn::Activation::kIdentity;
  m.encoder.layers = {id};
  nn::Layer dec = id;
  dec.activation = nn::Activation::kSigmoid;
  m.decoder.layers = {dec};
  save_checkpoint(p("identity.ckpt"), m);

  write(p("toy.csv"), "0,0\n0.3,0\n0,0.9\n");
  REQUIRE(run("graph --checkpoint " + p("identity.ckpt") + " --data " + p("toy.csv") + " --out " + p("toy_y.csv")).code == 0);
  Matrix z(3, 2);
  z << 0, 0, 0.3, 0, 0, 0.9;
  const Matrix expect = soft_labels(z, Margin(0.75));
  CHECK((data::load_matrix_csv(p("toy_y.csv")) - expect).cwiseAbs().maxCoeff() == 0.0);

  write(p("same.csv"), "0.2,0.4\n0.2,0.4\n0.2,0.4\n");
  REQUIRE(run("graph --checkpoint " + p("identity.ckpt") + " --data " + p("same.csv") + " --out " + p("same_y.csv")).code == 0);
  CHECK(data::load_matrix_csv(p("same_y.csv")) == Matrix::Ones(3, 3));

  CHECK(run("graph --checkpoint " + p("missing.ckpt") + " --data " + p("toy.csv") + " --out " + p("g.csv")).code == 2);
  write(p("wide.csv"), "1,2,3\n");
  CHECK(run("graph --checkpoint " + p("identity.ckpt") + " --data " + p("wide.csv") + " --out " + p("g.csv")).code == 2);
  CHECK(!fs::exists(p("g.csv")));
}

TEST_CASE("cluster command on a block affinity") {
  write(p("block.csv"), "1,0.9,0,0,0\n0.9,1,0,0,0\n0,0,1,0.5,0.7\n0,0,0.5,1,0.6\n0,0,0.7,0.6,1\n");
  write(p("block_truth.txt"), "0\n0\n1\n1\n1\n");
  REQUIRE(run("cluster --affinity " + p("block.csv") + " --k 2 --out " + p("block_pred.txt")).code == 0);
  const Run e = run("eval --labels " + p("block_pred.txt") + " --truth " + p("block_truth.txt"));
  CHECK(nlohmann::json::parse(e.out)["acc"] == 1.0);
  CHECK(run("cluster --affinity " + p("block.csv") + " --k 6 --out " + p("b.txt")).code == 1);
  write(p("asym.csv"), "1,0.2\n0.3,1\n");
  CHECK(run("cluster --affinity " + p("asym.csv") + " --k 2 --out " + p("b.txt")).code == 2);
}

TEST_CASE("km-z on well separated blobs") {
  REQUIRE(run("blobs --separation 12 --seed 4 --out " + p("wide_blobs.csv") + " --truth " + p("wide_truth.txt")).code == 0);
  fs::create_directories(p("wide"));
  REQUIRE(run("train --data " + p("wide_blobs.csv") + " --label-column -1 --epochs 20 --out " + p("wide") + " --quiet").code == 0);
  REQUIRE(run("cluster --checkpoint " + p("wide/model.ckpt") + " --data " + p("wide_blobs.csv") +
              " --label-column -1 --method km-z --k 4 --out " + p("wide_pred.txt"))
              .code == 0);
  const Run e = run("eval --labels " + p("wide_pred.txt") + " --truth " + p("wide_truth.txt"));
  CHECK(nlohmann::json::parse(e.out)["acc"].get<double>() >= 0.99);
}

TEST_CASE("eval command") {
  write(p("t.txt"), "0\n0\n1\n1\n");
  write(p("q.txt"), "0\n1\n1\n1\n");
  write(p("empty.txt"), "");
  write(p("short.txt"), "0\n1\n");
  auto j = nlohmann::json::parse(run("eval --labels " + p("t.txt") + " --truth " + p("t.txt")).out);
  CHECK(j["acc"] == 1.0);
  CHECK(j["nmi"] == 1.0);
  j = nlohmann::json::parse(run("eval --labels " + p("q.txt") + " --truth " + p("t.txt")).out);
  CHECK(j["acc"] == 0.75);
  CHECK(run("eval --labels " + p("empty.txt") + " --truth " + p("empty.txt")).code == 2);
  CHECK(run("eval --labels " + p("short.txt") + " --truth " + p("t.txt")).code == 2);
  CHECK(run("eval --labels " + p("missing.txt") + " --truth " + p("t.txt")).code == 2);
}

TEST_CASE("selftest command") {
  const Run ok = run("selftest");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("FAIL") == std::string::npos);
  const Run bad = run("selftest --perturb-gradient");
  CHECK(bad.code != 0);
  CHECK(bad.out.find("FAIL network-gradient-finite-difference") != std::string::npos);
}

}
