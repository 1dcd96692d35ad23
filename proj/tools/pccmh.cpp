// Batch front door for the anchor-graph cross-modal hashing library.
//
// Subcommands: gen, train, encode, query, eval, sweep. Every subcommand is
// deterministic under a fixed --seed; repeated runs produce byte-identical
// artifacts. Exit codes: 0 ok, 2 input/configuration error, 3 numerical
// failure, 64 usage error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pccmh/baseline_cca.hpp"
#include "pccmh/common.hpp"
#include "pccmh/datamodel.hpp"
#include "pccmh/encoder.hpp"
#include "pccmh/retrieval_eval.hpp"
#include "pccmh/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Flat key=value config file. Keys are long option names without the leading
// dashes; values parse exactly like the command line. Applied after parsing,
// so explicit flags always win over the file, which wins over defaults.
class FlatConfig {
 public:
  static FlatConfig load(const std::string& path) {
    FlatConfig out;
    if (path.empty()) return out;
    std::ifstream in(path);
    if (!in) {
      throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                              "cannot open config file: " + path);
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      std::size_t eq = t.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw pccmh::InputError(
            pccmh::ErrorKind::MalformedValue,
            path + ":" + std::to_string(lineno) + ": expected key=value");
      }
      out.kv_[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return out;
  }

  const std::string* find(const std::string& key) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, std::string> kv_;
};

void apply_string(const CLI::App& cmd, const FlatConfig& cfg,
                  const std::string& key, std::string& value) {
  if (cmd.count("--" + key) > 0) return;
  if (const std::string* v = cfg.find(key)) value = *v;
}

template <typename T>
void apply_number(const CLI::App& cmd, const FlatConfig& cfg,
                  const std::string& key, T& value) {
  if (cmd.count("--" + key) > 0) return;
  const std::string* v = cfg.find(key);
  if (v == nullptr) return;
  std::istringstream ss(*v);
  T parsed{};
  char extra = 0;
  if (!(ss >> parsed) || (ss >> extra)) {
    throw pccmh::InputError(
        pccmh::ErrorKind::MalformedValue,
        "config key '" + key + "': cannot parse value '" + *v + "'");
  }
  value = parsed;
}

pccmh::MatrixFormat parse_format(const std::string& name) {
  if (name == "csv") return pccmh::MatrixFormat::Csv;
  if (name == "bin") return pccmh::MatrixFormat::Binary;
  throw pccmh::InputError(pccmh::ErrorKind::BadArgument,
                          "--format must be csv or bin (got '" + name + "')");
}

pccmh::Relevance parse_relevance(const std::string& name) {
  if (name == "equal") return pccmh::Relevance::LabelEqual;
  if (name == "sharedbits") return pccmh::Relevance::SharedBits;
  throw pccmh::InputError(
      pccmh::ErrorKind::BadArgument,
      "--relevance must be equal or sharedbits (got '" + name + "')");
}

// Accepts "start:end:step" or a comma-separated list.
std::vector<double> parse_ratios(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start = 0, end = 0, step = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &start, &end, &step,
                    &extra) != 3 ||
        step <= 0 || end < start) {
      throw pccmh::InputError(
          pccmh::ErrorKind::BadArgument,
          "--ratios: expected start:end:step with step > 0 (got '" + text +
              "')");
    }
    int count = static_cast<int>(std::floor((end - start) / step + 1e-9)) + 1;
    for (int i = 0; i < count; ++i) out.push_back(start + i * step);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    char* tail = nullptr;
    double v = std::strtod(item.c_str(), &tail);
    if (item.empty() || tail == item.c_str() || *tail != '\0') {
      throw pccmh::InputError(
          pccmh::ErrorKind::BadArgument,
          "--ratios: cannot parse '" + item + "' in '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw pccmh::InputError(pccmh::ErrorKind::BadArgument,
                            "--ratios: no values in '" + text + "'");
  }
  return out;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

struct LoadedDir {
  pccmh::MultiModalDataset ds;
  pccmh::MatrixFormat format = pccmh::MatrixFormat::Csv;
};

// Reads a dataset directory produced by `gen`: manifest.json names the data
// files and records n_corr and the matrix format.
LoadedDir load_dataset_dir(const std::string& dir) {
  fs::path root(dir);
  fs::path manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "cannot open manifest: " + manifest_path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw pccmh::InputError(pccmh::ErrorKind::BadFileFormat,
                            manifest_path.string() + ": " + e.what());
  }
  std::string format_name, x_name, y_name, labels_name;
  std::uint64_t n_corr = 0;
  try {
    format_name = j.at("format").get<std::string>();
    x_name = j.at("files").at("x").get<std::string>();
    y_name = j.at("files").at("y").get<std::string>();
    labels_name = j.at("files").at("labels").get<std::string>();
    n_corr = j.at("n_corr").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw pccmh::InputError(pccmh::ErrorKind::BadFileFormat,
                            manifest_path.string() + ": " + e.what());
  }
  LoadedDir out;
  out.format = parse_format(format_name);
  fs::path labels_path = root / labels_name;
  if (!fs::exists(labels_path)) {
    throw pccmh::InputError(pccmh::ErrorKind::MissingLabels,
                            "labels file not found: " + labels_path.string());
  }
  out.ds.x = pccmh::load_feature_matrix((root / x_name).string(), out.format);
  out.ds.y = pccmh::load_feature_matrix((root / y_name).string(), out.format);
  out.ds.labels_x = pccmh::load_labels(labels_path.string());
  out.ds.labels_y = out.ds.labels_x;
  out.ds.n_corr = n_corr;
  return out;
}

void write_rows(const std::string& out_path,
                const std::vector<pccmh::SweepRow>& rows) {
  if (out_path.empty()) {
    pccmh::write_sweep_csv(std::cout, rows);
    return;
  }
  std::ofstream os(out_path, std::ios::binary);
  if (!os) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "cannot open output file: " + out_path);
  }
  pccmh::write_sweep_csv(os, rows);
  os.flush();
  if (!os) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "write failed: " + out_path);
  }
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
}

// Training knobs shared by `train` and `sweep`.
struct TrainOpts {
  int m = 200;
  int mx = 0;
  int my = 0;
  int c = 16;
  double lambda = 0.6;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  int s_nearest = 0;
  int kmeans_iters = 100;
  std::string thresholds = "mean";
  std::string eig_rule = "smallest";
  std::uint64_t seed = 0;
};

void add_train_options(CLI::App* cmd, TrainOpts& t) {
  cmd->add_option("--m", t.m, "anchors per modality");
  cmd->add_option("--mx", t.mx, "anchor count for modality x (0 = use --m)");
  cmd->add_option("--my", t.my, "anchor count for modality y (0 = use --m)");
  cmd->add_option("--c", t.c, "code length in bits");
  cmd->add_option("--lambda", t.lambda, "smoothness weight");
  cmd->add_option("--sigma-x", t.sigma_x,
                  "fixed kernel bandwidth for x (0 = estimate from data)");
  cmd->add_option("--sigma-y", t.sigma_y,
                  "fixed kernel bandwidth for y (0 = estimate from data)");
  cmd->add_option("--s-nearest", t.s_nearest,
                  "keep only the s nearest anchors per row (0 = dense)");
  cmd->add_option("--kmeans-iters", t.kmeans_iters, "k-means iteration cap");
  cmd->add_option("--thresholds", t.thresholds, "bit thresholds: mean or zero");
  cmd->add_option("--eig-rule", t.eig_rule,
                  "eigenvector selection: smallest or split");
  cmd->add_option("--seed", t.seed, "RNG seed");
}

void apply_train_config(const CLI::App& cmd, const FlatConfig& cfg,
                        TrainOpts& t) {
  apply_number(cmd, cfg, "m", t.m);
  apply_number(cmd, cfg, "mx", t.mx);
  apply_number(cmd, cfg, "my", t.my);
  apply_number(cmd, cfg, "c", t.c);
  apply_number(cmd, cfg, "lambda", t.lambda);
  apply_number(cmd, cfg, "sigma-x", t.sigma_x);
  apply_number(cmd, cfg, "sigma-y", t.sigma_y);
  apply_number(cmd, cfg, "s-nearest", t.s_nearest);
  apply_number(cmd, cfg, "kmeans-iters", t.kmeans_iters);
  apply_string(cmd, cfg, "thresholds", t.thresholds);
  apply_string(cmd, cfg, "eig-rule", t.eig_rule);
  apply_number(cmd, cfg, "seed", t.seed);
}

pccmh::TrainConfig to_train_config(const TrainOpts& t, Eigen::Index n_x,
                                   Eigen::Index n_y) {
  pccmh::TrainConfig out;
  out.m_x = t.mx > 0 ? t.mx : t.m;
  out.m_y = t.my > 0 ? t.my : t.m;
  if (out.m_x > n_x) {
    std::cerr << "note: m_x reduced to " << n_x << " (row count of x)\n";
    out.m_x = static_cast<int>(n_x);
  }
  if (out.m_y > n_y) {
    std::cerr << "note: m_y reduced to " << n_y << " (row count of y)\n";
    out.m_y = static_cast<int>(n_y);
  }
  out.c = t.c;
  out.lambda = t.lambda;
  if ((t.sigma_x > 0.0) != (t.sigma_y > 0.0)) {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--sigma-x and --sigma-y must be given together or not at all");
  }
  if (t.sigma_x > 0.0) {
    out.sigma_mode = pccmh::SigmaMode::Fixed;
    out.sigma_x = t.sigma_x;
    out.sigma_y = t.sigma_y;
  }
  out.s_nearest = t.s_nearest;
  out.seed = t.seed;
  out.kmeans_max_iters = t.kmeans_iters;
  if (t.thresholds == "mean") {
    out.threshold_rule = pccmh::ThresholdRule::Mean;
  } else if (t.thresholds == "zero") {
    out.threshold_rule = pccmh::ThresholdRule::Zero;
  } else {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--thresholds must be mean or zero (got '" + t.thresholds + "')");
  }
  if (t.eig_rule == "smallest") {
    out.eig_rule = pccmh::EigRule::SmallestC;
  } else if (t.eig_rule == "split") {
    out.eig_rule = pccmh::EigRule::TwoCSplit;
  } else {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--eig-rule must be smallest or split (got '" + t.eig_rule + "')");
  }
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
  std::string out_dir;
  std::string config;
  int clusters = 5;
  int per = 100;
  int dx = 20;
  int dy = 15;
  double noise = 0.3;
  double corr = 0.6;
  std::uint64_t seed = 0;
  std::string format = "csv";
  int threads = 0;
};

void run_gen(const CLI::App& cmd, GenOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_number(cmd, cfg, "clusters", o.clusters);
  apply_number(cmd, cfg, "per", o.per);
  apply_number(cmd, cfg, "dx", o.dx);
  apply_number(cmd, cfg, "dy", o.dy);
  apply_number(cmd, cfg, "noise", o.noise);
  apply_number(cmd, cfg, "corr", o.corr);
  apply_number(cmd, cfg, "seed", o.seed);
  apply_string(cmd, cfg, "format", o.format);

  pccmh::MatrixFormat fmt = parse_format(o.format);
  pccmh::SyntheticSpec spec;
  spec.n_clusters = o.clusters;
  spec.points_per_cluster = o.per;
  spec.d_x = o.dx;
  spec.d_y = o.dy;
  spec.noise_std = o.noise;
  spec.corr_ratio = o.corr;
  spec.seed = o.seed;
  pccmh::MultiModalDataset ds = pccmh::generate_synthetic(spec);

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "cannot create directory " + o.out_dir + ": " +
                                ec.message());
  }
  fs::path root(o.out_dir);
  const char* ext = fmt == pccmh::MatrixFormat::Csv ? ".csv" : ".bin";
  std::string x_name = std::string("x") + ext;
  std::string y_name = std::string("y") + ext;
  pccmh::save_feature_matrix((root / x_name).string(), ds.x, fmt);
  pccmh::save_feature_matrix((root / y_name).string(), ds.y, fmt);
  pccmh::save_labels((root / "labels.txt").string(), ds.labels_x);

  json manifest = {
      {"clusters", o.clusters},
      {"per_cluster", o.per},
      {"n", static_cast<std::uint64_t>(ds.x.rows())},
      {"n_corr", static_cast<std::uint64_t>(ds.n_corr)},
      {"d_x", o.dx},
      {"d_y", o.dy},
      {"noise_std", o.noise},
      {"corr_ratio", o.corr},
      {"seed", o.seed},
      {"format", o.format},
      {"files", {{"x", x_name}, {"y", y_name}, {"labels", "labels.txt"}}},
  };
  fs::path manifest_path = root / "manifest.json";
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "cannot open " + manifest_path.string());
  }
  mf << manifest.dump(2) << "\n";
  mf.flush();
  if (!mf) {
    throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                            "write failed: " + manifest_path.string());
  }
  std::cout << "wrote " << ds.x.rows() << " items (" << ds.n_corr
            << " corresponded) to " << o.out_dir << "\n";
}

void setup_gen(CLI::App& app) {
  auto o = std::make_shared<GenOpts>();
  CLI::App* cmd = app.add_subcommand(
      "gen", "generate a clustered synthetic two-modality dataset");
  cmd->add_option("--out", o->out_dir, "output directory")->required();
  cmd->add_option("--clusters", o->clusters, "number of clusters");
  cmd->add_option("--per", o->per, "items per cluster");
  cmd->add_option("--dx", o->dx, "modality x dimensionality");
  cmd->add_option("--dy", o->dy, "modality y dimensionality");
  cmd->add_option("--noise", o->noise, "observation noise std");
  cmd->add_option("--corr", o->corr, "fraction of corresponded items");
  cmd->add_option("--seed", o->seed, "RNG seed");
  cmd->add_option("--format", o->format, "matrix file format: csv or bin");
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_gen(*cmd, *o); });
}

// ---------------------------------------------------------------------------
// train

struct TrainCmdOpts {
  std::string data_dir;
  std::string x_path;
  std::string y_path;
  std::string labels_path;
  std::string out_path;
  std::string config;
  std::string format = "csv";
  std::uint64_t corr = 0;
  TrainOpts train;
  int threads = 0;
};

void run_train(const CLI::App& cmd, TrainCmdOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_string(cmd, cfg, "data", o.data_dir);
  apply_string(cmd, cfg, "x", o.x_path);
  apply_string(cmd, cfg, "y", o.y_path);
  apply_string(cmd, cfg, "labels", o.labels_path);
  apply_string(cmd, cfg, "format", o.format);
  apply_number(cmd, cfg, "corr", o.corr);
  apply_train_config(cmd, cfg, o.train);

  pccmh::MultiModalDataset ds;
  if (!o.data_dir.empty()) {
    if (!o.x_path.empty() || !o.y_path.empty()) {
      throw pccmh::InputError(pccmh::ErrorKind::BadArgument,
                              "give either --data or --x/--y, not both");
    }
    ds = load_dataset_dir(o.data_dir).ds;
  } else {
    if (o.x_path.empty() || o.y_path.empty()) {
      throw pccmh::InputError(pccmh::ErrorKind::BadArgument,
                              "either --data or both --x and --y are required");
    }
    pccmh::MatrixFormat fmt = parse_format(o.format);
    ds.x = pccmh::load_feature_matrix(o.x_path, fmt);
    ds.y = pccmh::load_feature_matrix(o.y_path, fmt);
    if (!o.labels_path.empty()) {
      if (!fs::exists(o.labels_path)) {
        throw pccmh::InputError(pccmh::ErrorKind::MissingLabels,
                                "labels file not found: " + o.labels_path);
      }
      ds.labels_x = pccmh::load_labels(o.labels_path);
      ds.labels_y = ds.labels_x;
    }
    std::uint64_t max_corr = static_cast<std::uint64_t>(
        std::min(ds.x.rows(), ds.y.rows()));
    ds.n_corr = o.corr > 0 ? o.corr : max_corr;
  }

  pccmh::TrainConfig tc = to_train_config(o.train, ds.x.rows(), ds.y.rows());
  pccmh::HashModel model = pccmh::train(ds, tc);
  pccmh::save_model(o.out_path, model);
  std::cout << "saved model to " << o.out_path << " (c=" << model.c
            << ", m_x=" << model.meta.m_x << ", m_y=" << model.meta.m_y
            << ")\n";
}

void setup_train(CLI::App& app) {
  auto o = std::make_shared<TrainCmdOpts>();
  CLI::App* cmd =
      app.add_subcommand("train", "train a hashing model on paired data");
  cmd->add_option("--data", o->data_dir, "dataset directory from gen");
  cmd->add_option("--x", o->x_path, "modality x feature matrix");
  cmd->add_option("--y", o->y_path, "modality y feature matrix");
  cmd->add_option("--labels", o->labels_path, "labels file (one int per line)");
  cmd->add_option("--corr", o->corr,
                  "corresponded row count for --x/--y inputs (0 = all)");
  cmd->add_option("--format", o->format, "matrix file format: csv or bin");
  cmd->add_option("--out", o->out_path, "model file to write")->required();
  add_train_options(cmd, o->train);
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_train(*cmd, *o); });
}

// ---------------------------------------------------------------------------
// encode

struct EncodeOpts {
  std::string model_path;
  std::string input_path;
  std::string modality;
  std::string out_path;
  std::string format = "csv";
  std::string config;
  int threads = 0;
};

void run_encode(const CLI::App& cmd, EncodeOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_string(cmd, cfg, "format", o.format);

  pccmh::HashModel model = pccmh::load_model(o.model_path);
  pccmh::FeatureMatrix data =
      pccmh::load_feature_matrix(o.input_path, parse_format(o.format));
  pccmh::Modality mod;
  if (o.modality == "x") {
    mod = pccmh::Modality::X;
  } else if (o.modality == "y") {
    mod = pccmh::Modality::Y;
  } else {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--modality must be x or y (got '" + o.modality + "')");
  }
  pccmh::HashCodeSet codes = pccmh::encode(model, data, mod);
  pccmh::save_codes(o.out_path, codes);
  std::cout << "encoded " << codes.n << " items (" << codes.c << " bits) to "
            << o.out_path << "\n";
}

void setup_encode(CLI::App& app) {
  auto o = std::make_shared<EncodeOpts>();
  CLI::App* cmd =
      app.add_subcommand("encode", "hash a feature matrix with a trained model");
  cmd->add_option("--model", o->model_path, "model file")->required();
  cmd->add_option("--input", o->input_path, "feature matrix to encode")
      ->required();
  cmd->add_option("--modality", o->modality, "which side the input is: x or y")
      ->required();
  cmd->add_option("--out", o->out_path, "codes file to write")->required();
  cmd->add_option("--format", o->format, "matrix file format: csv or bin");
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_encode(*cmd, *o); });
}

// ---------------------------------------------------------------------------
// query

struct QueryOpts {
  std::string db_path;
  std::string queries_path;
  std::string out_path;
  std::string config;
  int R = 50;
  long long index = -1;
  int threads = 0;
};

void run_query(const CLI::App& cmd, QueryOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_number(cmd, cfg, "R", o.R);

  pccmh::HashCodeSet db = pccmh::load_codes(o.db_path);
  pccmh::HashCodeSet queries = pccmh::load_codes(o.queries_path);
  if (o.index >= static_cast<long long>(queries.n)) {
    throw pccmh::InputError(pccmh::ErrorKind::BadArgument,
                            "--query index " + std::to_string(o.index) +
                                " out of range (have " +
                                std::to_string(queries.n) + " queries)");
  }
  std::ostringstream body;
  body << "query,rank,item,distance\n";
  std::size_t first = o.index < 0 ? 0 : static_cast<std::size_t>(o.index);
  std::size_t last = o.index < 0 ? queries.n : first + 1;
  for (std::size_t q = first; q < last; ++q) {
    pccmh::QueryResult res = pccmh::rank_by_hamming(queries, q, db, o.R);
    for (std::size_t r = 0; r < res.ranked.size(); ++r) {
      body << q << ',' << (r + 1) << ',' << res.ranked[r].first << ','
           << res.ranked[r].second << "\n";
    }
  }
  if (o.out_path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream os(o.out_path, std::ios::binary);
    if (!os) {
      throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                              "cannot open output file: " + o.out_path);
    }
    os << body.str();
    os.flush();
    if (!os) {
      throw pccmh::InputError(pccmh::ErrorKind::IoFailure,
                              "write failed: " + o.out_path);
    }
  }
}

void setup_query(CLI::App& app) {
  auto o = std::make_shared<QueryOpts>();
  CLI::App* cmd = app.add_subcommand(
      "query", "rank database codes against query codes by Hamming distance");
  cmd->add_option("--db", o->db_path, "database codes file")->required();
  cmd->add_option("--queries", o->queries_path, "query codes file")->required();
  cmd->add_option("--R", o->R, "retrieved list length");
  cmd->add_option("--query", o->index, "single query index (-1 = all)");
  cmd->add_option("--out", o->out_path, "output CSV (default: stdout)");
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_query(*cmd, *o); });
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string model_path;
  std::string data_dir;
  std::string out_path;
  std::string direction = "both";
  std::string relevance = "equal";
  std::string config;
  int R = 50;
  int threads = 0;
};

void run_eval(const CLI::App& cmd, EvalOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_number(cmd, cfg, "R", o.R);
  apply_string(cmd, cfg, "direction", o.direction);
  apply_string(cmd, cfg, "relevance", o.relevance);

  pccmh::HashModel model = pccmh::load_model(o.model_path);
  LoadedDir d = load_dataset_dir(o.data_dir);
  pccmh::EvalConfig ec;
  ec.R = o.R;
  ec.relevance = parse_relevance(o.relevance);

  std::vector<pccmh::SweepRow> rows;
  auto add = [&](pccmh::Direction dir) {
    const pccmh::FeatureMatrix& qd =
        dir == pccmh::Direction::XtoY ? d.ds.x : d.ds.y;
    const std::vector<int>& ql =
        dir == pccmh::Direction::XtoY ? d.ds.labels_x : d.ds.labels_y;
    const pccmh::FeatureMatrix& dbd =
        dir == pccmh::Direction::XtoY ? d.ds.y : d.ds.x;
    const std::vector<int>& dbl =
        dir == pccmh::Direction::XtoY ? d.ds.labels_y : d.ds.labels_x;
    pccmh::EvalReport rep =
        pccmh::mean_average_precision(model, qd, ql, dbd, dbl, dir, ec);
    pccmh::SweepRow row;
    row.ratio = rep.corr_ratio;
    row.direction = rep.task;
    row.c = rep.code_length;
    row.ok = true;
    row.map_mean = rep.map;
    row.map_std = population_std(rep.per_query_ap);
    row.seed = rep.seed;
    rows.push_back(row);
  };
  if (o.direction == "both") {
    add(pccmh::Direction::XtoY);
    add(pccmh::Direction::YtoX);
  } else if (o.direction == "x2y") {
    add(pccmh::Direction::XtoY);
  } else if (o.direction == "y2x") {
    add(pccmh::Direction::YtoX);
  } else {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--direction must be both, x2y or y2x (got '" + o.direction + "')");
  }
  write_rows(o.out_path, rows);
}

void setup_eval(CLI::App& app) {
  auto o = std::make_shared<EvalOpts>();
  CLI::App* cmd = app.add_subcommand(
      "eval", "mean average precision of a model over a dataset directory");
  cmd->add_option("--model", o->model_path, "model file")->required();
  cmd->add_option("--data", o->data_dir, "dataset directory from gen")
      ->required();
  cmd->add_option("--direction", o->direction,
                  "retrieval task: both, x2y or y2x");
  cmd->add_option("--R", o->R, "retrieved list length");
  cmd->add_option("--relevance", o->relevance,
                  "ground truth rule: equal or sharedbits");
  cmd->add_option("--out", o->out_path, "output CSV (default: stdout)");
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_eval(*cmd, *o); });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
  std::string data_dir;
  std::string out_path;
  std::string ratios = "0.2:0.8:0.1";
  int repeats = 1;
  double train_fraction = 0.8;
  int R = 50;
  std::string method = "pccmh";
  double cca_reg = 1e-4;
  std::string relevance = "equal";
  std::string config;
  TrainOpts train;
  int threads = 0;
};

void run_sweep(const CLI::App& cmd, SweepOpts& o) {
  pccmh::set_max_threads(o.threads);
  FlatConfig cfg = FlatConfig::load(o.config);
  apply_string(cmd, cfg, "ratios", o.ratios);
  apply_number(cmd, cfg, "repeats", o.repeats);
  apply_number(cmd, cfg, "train-fraction", o.train_fraction);
  apply_number(cmd, cfg, "R", o.R);
  apply_string(cmd, cfg, "method", o.method);
  apply_number(cmd, cfg, "cca-reg", o.cca_reg);
  apply_string(cmd, cfg, "relevance", o.relevance);
  apply_train_config(cmd, cfg, o.train);

  LoadedDir d = load_dataset_dir(o.data_dir);
  pccmh::TrainConfig tc =
      to_train_config(o.train, d.ds.x.rows(), d.ds.y.rows());
  pccmh::SweepConfig sc;
  sc.ratios = parse_ratios(o.ratios);
  sc.repeats = o.repeats;
  sc.master_seed = o.train.seed;
  sc.train_fraction = o.train_fraction;
  sc.R = o.R;
  sc.relevance = parse_relevance(o.relevance);
  if (o.method == "pccmh") {
    sc.method = pccmh::Method::Pccmh;
  } else if (o.method == "cca") {
    sc.method = pccmh::Method::Cca;
  } else {
    throw pccmh::InputError(
        pccmh::ErrorKind::BadArgument,
        "--method must be pccmh or cca (got '" + o.method + "')");
  }
  sc.cca_reg = o.cca_reg;
  std::vector<pccmh::SweepRow> rows = pccmh::correspondence_sweep(d.ds, tc, sc);
  write_rows(o.out_path, rows);
}

void setup_sweep(CLI::App& app) {
  auto o = std::make_shared<SweepOpts>();
  CLI::App* cmd = app.add_subcommand(
      "sweep", "retrain and evaluate across correspondence ratios");
  cmd->add_option("--data", o->data_dir, "dataset directory from gen")
      ->required();
  cmd->add_option("--ratios", o->ratios,
                  "start:end:step or comma list of ratios in (0,1]");
  cmd->add_option("--repeats", o->repeats, "training runs per ratio");
  cmd->add_option("--train-fraction", o->train_fraction,
                  "fraction of items used as the database/training side");
  cmd->add_option("--R", o->R, "retrieved list length");
  cmd->add_option("--method", o->method, "hashing method: pccmh or cca");
  cmd->add_option("--cca-reg", o->cca_reg, "CCA ridge regularization");
  cmd->add_option("--relevance", o->relevance,
                  "ground truth rule: equal or sharedbits");
  cmd->add_option("--out", o->out_path, "output CSV (default: stdout)");
  add_train_options(cmd, o->train);
  cmd->add_option("--config", o->config, "flat key=value config file");
  cmd->add_option("--threads", o->threads, "worker thread cap (0 = hardware)")
      ->envname("PCCMH_THREADS");
  cmd->callback([cmd, o]() { run_sweep(*cmd, *o); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anchor-graph cross-modal hashing toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  setup_gen(app);
  setup_train(app);
  setup_encode(app);
  setup_query(app);
  setup_eval(app);
  setup_sweep(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  } catch (const pccmh::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const pccmh::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
