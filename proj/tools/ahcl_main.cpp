// Command-line front end: train, graph, cluster, eval, blobs, selftest.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical divergence.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "ahcl/checkpoint.hpp"
#include "ahcl/data.hpp"
#include "ahcl/errors.hpp"
#include "ahcl/eval.hpp"
#include "ahcl/graph.hpp"
#include "ahcl/selftest.hpp"
#include "ahcl/trainer.hpp"

namespace fs = std::filesystem;
using namespace ahcl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

struct DataArgs {
  std::string path;
  bool header = false;
  std::optional<int> label_column;

  data::Dataset load() const {
    data::CsvOptions o;
    o.has_header = header;
    o.label_column = label_column;
    return data::load_csv(path, o);
  }
};

void add_data_args(CLI::App* cmd, DataArgs& args) {
  cmd->add_option("--data", args.path, "Input CSV (rows are samples)")->required();
  cmd->add_flag("--header", args.header, "First non-empty line is a header");
  cmd->add_option("--label-column", args.label_column,
                  "Column holding integer ground-truth labels (negative counts from the end)");
}

std::string trace_csv(const TrainTrace& trace) {
  std::string out = "epoch,ahcl,mse,total,wall_seconds\n";
  for (const auto& r : trace.epochs) {
    out += std::to_string(r.epoch) + "," + data::format_double(r.ahcl) + "," + data::format_double(r.mse) +
           "," + data::format_double(r.total) + "," + data::format_double(r.wall_seconds) + "\n";
  }
  return out;
}

struct TrainArgs {
  DataArgs data;
  std::string out_dir;
  RunConfig config;
  std::string scaling = "half-n";
  std::string mode = "ahcl";
  bool no_normalize = false;
  bool no_minmax = false;
  bool quiet = false;
};

int run_train(TrainArgs& a) {
  if (a.scaling == "pair-mean") {
    a.config.scaling = PairScaling::kPairMean;
  } else if (a.scaling != "half-n") {
    throw UsageError("unknown --scaling '" + a.scaling + "' (half-n | pair-mean)");
  }
  if (a.mode == "mse-only") {
    a.config.mode = LossMode::kMseOnly;
  } else if (a.mode != "ahcl") {
    throw UsageError("unknown --loss '" + a.mode + "' (ahcl | mse-only)");
  }
  a.config.normalize_embeddings = !a.no_normalize;
  a.config.minmax = !a.no_minmax;
  a.config.validate();
  if (!fs::is_directory(a.out_dir)) throw UsageError("output directory '" + a.out_dir + "' does not exist");

  const data::Dataset ds = a.data.load();
  const TrainResult result = train(ds.x, a.config, [&](const EpochRecord& r, const TrainedModel&) {
    if (!a.quiet) {
      std::cerr << "epoch " << r.epoch << " ahcl=" << r.ahcl << " mse=" << r.mse << " total=" << r.total
                << "\n";
    }
  });
  save_checkpoint(fs::path(a.out_dir) / "model.ckpt", result.model);
  data::write_file_atomic(fs::path(a.out_dir) / "trace.csv", trace_csv(result.trace));
  return 0;
}

int run_graph(const std::string& checkpoint, const DataArgs& d, const std::string& out) {
  const TrainedModel model = load_checkpoint(checkpoint);
  const data::Dataset ds = d.load();
  const Matrix z = encode(model, ds.x);
  const auto g = graph::affinity_from_embeddings(z, Margin(model.margin), model.epsilon);
  data::save_matrix_csv(out, g.weights());
  return 0;
}

struct ClusterArgs {
  std::string affinity;
  std::string checkpoint;
  DataArgs data;
  std::string method = "sc-y";
  int k = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_cluster(const ClusterArgs& a) {
  if (a.method != "sc-y" && a.method != "sc-z" && a.method != "km-z") {
    throw UsageError("unknown method '" + a.method + "' (sc-y | sc-z | km-z)");
  }
  if (a.k < 1) throw UsageError("--k must be >= 1");
  Labels labels;
  if (a.method == "sc-y" && !a.affinity.empty()) {
    const Matrix y = data::load_matrix_csv(a.affinity);
    if (a.k > y.rows()) throw UsageError("k=" + std::to_string(a.k) + " exceeds node count " + std::to_string(y.rows()));
    std::optional<graph::AffinityGraph> g;
    try {
      g.emplace(y);
    } catch (const std::invalid_argument& e) {
      throw DataError(std::string("affinity file: ") + e.what());
    }
    labels = graph::spectral_clustering(*g, a.k, a.seed);
  } else {
    if (a.checkpoint.empty() || a.data.path.empty()) {
      throw UsageError(a.method + " needs --checkpoint and --data" +
                       (a.method == "sc-y" ? std::string(" (or --affinity)") : std::string()));
    }
    const TrainedModel model = load_checkpoint(a.checkpoint);
    const data::Dataset ds = a.data.load();
    if (a.k > ds.size()) throw UsageError("k=" + std::to_string(a.k) + " exceeds sample count " + std::to_string(ds.size()));
    const Matrix z = encode(model, ds.x);
    if (a.method == "km-z") {
      labels = graph::kmeans(z, a.k, a.seed).labels;
    } else if (a.method == "sc-z") {
      labels = graph::spectral_clustering(graph::gaussian_affinity(z), a.k, a.seed);
    } else {
      labels = graph::spectral_clustering(graph::affinity_from_embeddings(z, Margin(model.margin), model.epsilon),
                                          a.k, a.seed);
    }
  }
  data::save_labels(a.out, labels);
  return 0;
}

struct EvalArgs {
  std::string labels;
  std::string truth;
  std::string dataset = "unknown";
  std::string method = "unknown";
  std::int64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  const Labels pred = data::load_labels(a.labels);
  const Labels truth = data::load_labels(a.truth);
  if (pred.size() != truth.size()) {
    throw DataError("label files differ in length (" + std::to_string(pred.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  }
  std::cout << eval::metric_json_line(a.dataset, a.method, a.seed, eval::evaluate(truth, pred)) << "\n";
  return 0;
}

int run_selftest(bool perturb) {
  selftest::Options options;
  options.perturb_gradient = perturb;
  bool ok = true;
  for (const auto& r : selftest::run_all(options)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " (" << r.seconds << " s)\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitData;
}

// The config file is flat key=value text for the train command; CLI11 only
// reads config files at the top level, so every flat key is scoped to train.
class TrainConfigFile : public CLI::ConfigBase {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigBase::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents = {"train"};
    }
    return items;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive homotopy contrastive learning toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<TrainConfigFile>());
  app.set_config("--config", "", "Flat key=value file of train options; command-line flags take precedence");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train encoder/decoder on a CSV dataset");
  add_data_args(train_cmd, train_args.data);
  train_cmd->add_option("--out", train_args.out_dir, "Directory for model.ckpt and trace.csv")->required();
  auto& c = train_args.config;
  train_cmd->add_option("--margin", c.margin, "Distance margin m")->capture_default_str();
  train_cmd->add_option("--gamma", c.gamma, "Weight of the reconstruction loss")->capture_default_str();
  train_cmd->add_option("--lr", c.lr, "Initial learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", c.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", c.batch_size, "0 = min(2000, n)")->capture_default_str();
  train_cmd->add_option("--batches-per-epoch", c.batches_per_epoch, "0 = ceil(n / batch size)")->capture_default_str();
  train_cmd->add_option("--embed-dim", c.embed_dim)->capture_default_str();
  train_cmd->add_option("--hidden", c.hidden, "Hidden layer widths of the encoder")->capture_default_str();
  train_cmd->add_option("--seed", c.seed)->capture_default_str();
  train_cmd->add_option("--decay-every", c.decay_every)->capture_default_str();
  train_cmd->add_option("--decay-factor", c.decay_factor)->capture_default_str();
  train_cmd->add_option("--epsilon", c.epsilon)->capture_default_str();
  train_cmd->add_option("--tol", c.tol, "Relative epoch-loss change for early stop (0 = off)")->capture_default_str();
  train_cmd->add_option("--scaling", train_args.scaling, "half-n | pair-mean")->capture_default_str();
  train_cmd->add_option("--loss", train_args.mode, "ahcl | mse-only")->capture_default_str();
  train_cmd->add_flag("--no-normalize", train_args.no_normalize, "Do not L2-normalize embeddings");
  train_cmd->add_flag("--no-minmax", train_args.no_minmax, "Skip min-max feature scaling");
  train_cmd->add_flag("--quiet", train_args.quiet, "No per-epoch progress on stderr");

  std::string graph_ckpt, graph_out;
  DataArgs graph_data;
  auto* graph_cmd = app.add_subcommand("graph", "Write the soft-label affinity matrix of a dataset");
  graph_cmd->add_option("--checkpoint", graph_ckpt)->required();
  add_data_args(graph_cmd, graph_data);
  graph_cmd->add_option("--out", graph_out)->required();

  ClusterArgs cluster_args;
  auto* cluster_cmd = app.add_subcommand("cluster", "Cluster with sc-y, sc-z or km-z");
  cluster_cmd->add_option("--affinity", cluster_args.affinity, "Affinity CSV (sc-y)");
  cluster_cmd->add_option("--checkpoint", cluster_args.checkpoint);
  cluster_cmd->add_option("--data", cluster_args.data.path);
  cluster_cmd->add_flag("--header", cluster_args.data.header);
  cluster_cmd->add_option("--label-column", cluster_args.data.label_column);
  cluster_cmd->add_option("--method", cluster_args.method, "sc-y | sc-z | km-z")->capture_default_str();
  cluster_cmd->add_option("--k", cluster_args.k, "Number of clusters")->required();
  cluster_cmd->add_option("--seed", cluster_args.seed)->capture_default_str();
  cluster_cmd->add_option("--out", cluster_args.out, "Labels file, one per line")->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted labels against ground truth");
  eval_cmd->add_option("--labels", eval_args.labels)->required();
  eval_cmd->add_option("--truth", eval_args.truth)->required();
  eval_cmd->add_option("--dataset", eval_args.dataset)->capture_default_str();
  eval_cmd->add_option("--method", eval_args.method)->capture_default_str();
  eval_cmd->add_option("--seed", eval_args.seed)->capture_default_str();

  data::BlobOptions blob;
  std::string blob_out, blob_truth;
  auto* blobs_cmd = app.add_subcommand("blobs", "Generate a synthetic Gaussian-cluster CSV");
  blobs_cmd->add_option("--n-per-cluster", blob.n_per_cluster)->capture_default_str();
  blobs_cmd->add_option("--k", blob.clusters)->capture_default_str();
  blobs_cmd->add_option("--dim", blob.dim)->capture_default_str();
  blobs_cmd->add_option("--spread", blob.spread)->capture_default_str();
  blobs_cmd->add_option("--separation", blob.separation)->capture_default_str();
  blobs_cmd->add_option("--seed", blob.seed)->capture_default_str();
  blobs_cmd->add_option("--out", blob_out, "CSV with the label as last column")->required();
  blobs_cmd->add_option("--truth", blob_truth, "Optional labels file, one per line");

  bool perturb = false;
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the embedded verification checks");
  selftest_cmd->add_flag("--perturb-gradient", perturb, "Corrupt analytic gradients (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*graph_cmd) return run_graph(graph_ckpt, graph_data, graph_out);
    if (*cluster_cmd) return run_cluster(cluster_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*blobs_cmd) {
      const data::Dataset ds = data::synthetic_blobs(blob);
      data::save_csv(blob_out, ds);
      if (!blob_truth.empty()) data::save_labels(blob_truth, *ds.labels);
      return 0;
    }
    if (*selftest_cmd) return run_selftest(perturb);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
