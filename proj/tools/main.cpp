// tegraph: command-line driver for preprocessing, training and analysis.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tegcn/config.hpp"
#include "tegcn/pipeline.hpp"
#include "tegcn/serialize.hpp"

namespace fs = std::filesystem;
using namespace tegcn;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct ConfigFlags {
  std::string file;
  std::vector<std::string> overrides;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", file, "key=value config file");
    cmd->add_option("--set", overrides, "override, key=value (repeatable)");
  }

  RunConfig build(const DatasetInfo* info) const {
    RunConfig rc;
    if (info) rc.adopt(*info);
    KeyValues kv;
    if (!file.empty()) kv = load_key_values(file);
    for (const auto& o : overrides) {
      auto [k, v] = parse_override(o);
      kv[k] = v;
    }
    rc.apply(kv);
    return rc;
  }
};

std::vector<Modality> parse_modalities(const std::string& list) {
  std::vector<Modality> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_modality(item));
  }
  return out;
}

void write_scores(const fs::path& path, const Dataset& data, const EvalResult& r) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    os << json{{"sample_id", data.samples[i].id}, {"label", data.samples[i].label}, {"scores", r.scores[i]}}.dump()
       << '\n';
  }
}

struct ScoreFile {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::vector<double>> scores;
};

ScoreFile read_scores(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  ScoreFile f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      f.ids.push_back(j.at("sample_id").get<std::string>());
      f.labels.push_back(j.at("label").get<int>());
      f.scores.push_back(j.at("scores").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return f;
}

int cmd_preprocess(const std::string& input, const std::string& output, std::size_t fixed_len,
                   const std::string& motion, const std::string& modalities, const std::string& protocol,
                   std::size_t spine) {
  const auto mods = parse_modalities(modalities);
  PreprocessReport report;
  if (fs::is_regular_file(input) && fs::path(input).extension() == ".json") {
    report = preprocess_synthetic(input, output, mods);
  } else {
    PreprocessOptions opts;
    opts.fixed_len = fixed_len;
    opts.spine_joint = spine;
    const auto comma = motion.find(',');
    if (comma == std::string::npos) throw ConfigError("--motion-range must be lo,hi");
    opts.motion.lo = std::stod(motion.substr(0, comma));
    opts.motion.hi = std::stod(motion.substr(comma + 1));
    if (!(opts.motion.lo < opts.motion.hi)) throw ConfigError("--motion-range needs lo < hi");
    report = preprocess_ntu_directory(input, output, opts, parse_protocol(protocol), mods);
  }
  for (const auto& r : report.rejected) std::cerr << "rejected " << r << '\n';
  std::cout << json{{"written", report.written}, {"rejected", report.rejected.size()}}.dump() << '\n';
  return kExitOk;
}

int cmd_train(const std::string& data, const std::string& out, const ConfigFlags& flags, const std::string& modality,
              bool single_thread) {
  const DatasetInfo info = load_dataset_info(data);
  RunConfig rc = flags.build(&info);
  rc.train.single_thread = single_thread;
  const Modality m = parse_modality(modality);
  Dataset tr = load_dataset(data, "train", m);
  Dataset ev = load_dataset(data, "eval", m);
  Network net(rc.resolve());
  TrainResult r = train(net, rc.train, tr, ev.samples.empty() ? nullptr : &ev, out);
  std::cout << json{{"epochs", r.history.size()},
                    {"best_eval", r.best_eval},
                    {"best_epoch", r.best_epoch},
                    {"final_train_acc", r.history.empty() ? 0.0 : r.history.back().train_acc}}
                   .dump()
            << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& split, const std::string& modality,
             const std::string& scores_out, bool single_thread) {
  auto net = network_from_checkpoint(ckpt);
  Dataset d = load_dataset(data, split, parse_modality(modality));
  EvalResult r = evaluate(*net, d, 64, single_thread);
  if (!scores_out.empty()) write_scores(scores_out, d, r);
  std::cout << json{{"split", split}, {"top1", r.accuracy}, {"correct", r.correct}, {"total", r.total}}.dump() << '\n';
  return kExitOk;
}

int cmd_fuse(const std::vector<std::string>& files, const std::vector<double>& weights_in, const std::string& out) {
  if (files.empty()) throw ConfigError("fuse needs at least one --scores file");
  std::vector<double> weights = weights_in.empty() ? std::vector<double>(files.size(), 1.0) : weights_in;
  if (weights.size() != files.size()) throw ConfigError("one weight per --scores file");
  std::vector<ScoreFile> streams;
  for (const auto& f : files) streams.push_back(read_scores(f));
  const ScoreFile& first = streams.front();
  for (const auto& s : streams) {
    if (s.ids != first.ids) throw DataError("score files list different samples");
  }
  if (first.ids.empty()) throw DataError("score files are empty");
  std::size_t correct = 0;
  std::ofstream os;
  if (!out.empty()) {
    os.open(out, std::ios::trunc);
    if (!os) throw DataError("cannot write " + out);
  }
  for (std::size_t i = 0; i < first.ids.size(); ++i) {
    StreamScores ss;
    ss.weights = weights;
    for (const auto& s : streams) ss.scores.push_back(s.scores[i]);
    const auto fused = fuse_streams(ss);
    if (static_cast<int>(argmax(fused)) == first.labels[i]) ++correct;
    if (os) os << json{{"sample_id", first.ids[i]}, {"label", first.labels[i]}, {"scores", fused}}.dump() << '\n';
  }
  std::cout << json{{"streams", files.size()},
                    {"top1", static_cast<double>(correct) / static_cast<double>(first.ids.size())},
                    {"total", first.ids.size()}}
                   .dump()
            << '\n';
  return kExitOk;
}

int cmd_gradcheck(const ConfigFlags& flags, double tol, double eps) {
  RunConfig rc;
  rc.model.num_classes = 3;
  rc.model.frames = 6;
  rc.model.bodies = 1;
  rc.model.graph = "chain";
  rc.model.joints = 4;
  rc.model.kernel = 3;
  rc.model.heads = 2;
  rc.backbone.channels = {4, 4};
  rc.backbone.strides = {1, 1};
  rc.backbone.insertion = 2;
  rc = [&] {
    RunConfig base = rc;
    KeyValues kv;
    if (!flags.file.empty()) kv = load_key_values(flags.file);
    for (const auto& o : flags.overrides) {
      auto [k, v] = parse_override(o);
      kv[k] = v;
    }
    base.apply(kv);
    return base;
  }();
  const GradCheckResult r = check_network_gradients(rc.resolve(), 2, rc.model.seed, eps);
  const bool ok = r.max_rel_error <= tol;
  std::cout << json{{"max_rel_error", r.max_rel_error},
                    {"worst_parameter", r.worst_parameter},
                    {"worst_index", r.worst_index},
                    {"analytic", r.analytic},
                    {"numeric", r.numeric},
                    {"coordinates", r.coordinates},
                    {"tolerance", tol},
                    {"pass", ok}}
                   .dump()
            << '\n';
  return ok ? kExitOk : kExitNumeric;
}

int cmd_ablate(const std::string& suite, const std::string& data, const std::string& out, const ConfigFlags& flags,
               bool single_thread) {
  AblationInputs in;
  RunConfig rc;
  if (data.empty()) {
    // Desk-scale default: synthetic templates on a 5-joint chain.
    SynthParams p;
    rc.model.num_classes = p.classes;
    rc.model.frames = p.frames;
    rc.model.bodies = p.bodies;
    rc.model.graph = "chain";
    rc.model.joints = p.joints;
    rc.train.batch_size = 8;
    rc.train.epochs = 30;
    rc.train.decay_epochs = {20};
    rc.backbone.width_div = 4;
    KeyValues kv;
    if (!flags.file.empty()) kv = load_key_values(flags.file);
    for (const auto& o : flags.overrides) {
      auto [k, v] = parse_override(o);
      kv[k] = v;
    }
    rc.apply(kv);
    p.frames = rc.model.frames;
    in.train_set = make_dataset(synth_dataset(p), p.classes);
    p.samples_per_class /= 2;
    p.seed += 1;
    in.eval_set = make_dataset(synth_dataset(p), p.classes);
  } else {
    const DatasetInfo info = load_dataset_info(data);
    rc = flags.build(&info);
    in.train_set = load_dataset(data, "train", Modality::kJoint);
    in.eval_set = load_dataset(data, "eval", Modality::kJoint);
  }
  rc.train.single_thread = single_thread;
  in.base = rc.model;
  in.backbone = rc.backbone;
  in.train = rc.train;
  const std::string csv = ablation_csv(ablate(parse_suite(suite), in));
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream os(out, std::ios::trunc);
    if (!os) throw DataError("cannot write " + out);
    os << csv;
  }
  return kExitOk;
}

int cmd_dump_adjacency(const std::string& ckpt, const std::string& data, const std::string& split,
                       const std::string& modality, std::size_t sample, const std::string& out) {
  auto net = network_from_checkpoint(ckpt);
  Dataset d = load_dataset(data, split, parse_modality(modality));
  if (sample >= d.samples.size()) {
    throw DataError("sample index " + std::to_string(sample) + " outside the " + std::to_string(d.samples.size()) +
                    "-sample split");
  }
  const auto adj = net->adjacencies(batch_input({&d.samples[sample].data}));
  fs::create_directories(out);
  std::size_t written = 0;
  for (std::size_t l = 0; l < adj.size(); ++l) {
    for (std::size_t n = 0; n < adj[l].size(); ++n) {
      save_tensor(fs::path(out) / ("layer" + std::to_string(l + 1) + "_head" + std::to_string(n) + ".tegt"),
                  adj[l][n]);
      ++written;
    }
  }
  std::cout << json{{"sample_id", d.samples[sample].id}, {"files", written}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TE-GCN skeleton action recognition"};
  app.require_subcommand(1);

  std::string input, output, motion = "0.1,2.0", modalities = "joint,joint-motion,bone,bone-motion", protocol = "xsub";
  std::size_t fixed_len = 300, spine = 1;
  auto* pre = app.add_subcommand("preprocess", "NTU .skeleton directory or synthetic JSON spec -> dataset");
  pre->add_option("--input", input, "directory of .skeleton files, or a .json generator spec")->required();
  pre->add_option("--output", output, "dataset directory")->required();
  pre->add_option("--fixed-len", fixed_len, "frames per sample")->capture_default_str();
  pre->add_option("--motion-range", motion, "lo,hi body motion range")->capture_default_str();
  pre->add_option("--modalities", modalities, "comma-separated streams to write")->capture_default_str();
  pre->add_option("--protocol", protocol, "xsub or xview")->capture_default_str();
  pre->add_option("--spine-joint", spine, "0-based spine joint used for centering")->capture_default_str();

  std::string data, out, modality = "joint", checkpoint, split = "eval", scores_out;
  bool single_thread = false;
  ConfigFlags train_flags;
  auto* tr = app.add_subcommand("train", "train a model on a preprocessed dataset");
  tr->add_option("--data", data, "dataset directory")->required();
  tr->add_option("--out", out, "run directory (metrics, checkpoints)")->required();
  tr->add_option("--modality", modality, "input stream")->capture_default_str();
  tr->add_flag("--single-thread", single_thread, "bit-reproducible single worker");
  train_flags.add(tr);

  auto* ev = app.add_subcommand("eval", "top-1 accuracy of a checkpoint");
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", data)->required();
  ev->add_option("--split", split)->capture_default_str();
  ev->add_option("--modality", modality)->capture_default_str();
  ev->add_option("--scores-out", scores_out, "write per-sample softmax scores (jsonl)");
  ev->add_flag("--single-thread", single_thread);

  std::vector<std::string> score_files;
  std::vector<double> weights;
  auto* fu = app.add_subcommand("fuse", "weighted-sum fusion of per-stream scores");
  fu->add_option("--scores", score_files, "scores jsonl from eval (repeatable)")->required();
  fu->add_option("--weights", weights, "one weight per stream (default 1)")->delimiter(',');
  fu->add_option("--out", out, "write fused scores (jsonl)");

  double tol = 1e-5, eps = 1e-5;
  ConfigFlags gc_flags;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of a small network");
  gc->add_option("--tol", tol)->capture_default_str();
  gc->add_option("--eps", eps)->capture_default_str();
  gc_flags.add(gc);

  std::string suite;
  ConfigFlags ab_flags;
  auto* ab = app.add_subcommand("ablate", "heads / layers / modalities grids; CSV out");
  ab->add_option("--suite", suite, "heads, layers or modalities")->required();
  ab->add_option("--data", data, "dataset directory (default: synthetic corpus)");
  ab->add_option("--out", out, "CSV path (default stdout)");
  ab->add_flag("--single-thread", single_thread);
  ab_flags.add(ab);

  std::size_t sample = 0;
  auto* da = app.add_subcommand("dump-adjacency", "write each head's temporal adjacency for one sample");
  da->add_option("--checkpoint", checkpoint)->required();
  da->add_option("--data", data)->required();
  da->add_option("--split", split)->capture_default_str();
  da->add_option("--modality", modality)->capture_default_str();
  da->add_option("--sample", sample, "index within the split")->capture_default_str();
  da->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*pre) return cmd_preprocess(input, output, fixed_len, motion, modalities, protocol, spine);
    if (*tr) return cmd_train(data, out, train_flags, modality, single_thread);
    if (*ev) return cmd_eval(checkpoint, data, split, modality, scores_out, single_thread);
    if (*fu) return cmd_fuse(score_files, weights, out);
    if (*gc) return cmd_gradcheck(gc_flags, tol, eps);
    if (*ab) return cmd_ablate(suite, data, out, ab_flags, single_thread);
    if (*da) return cmd_dump_adjacency(checkpoint, data, split, modality, sample, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
