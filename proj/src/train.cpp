#include "tegcn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "tegcn/serialize.hpp"

namespace tegcn {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (!(decay_factor > 0.0)) throw ConfigError("decay factor must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  for (std::size_t i = 1; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] <= decay_epochs[i - 1]) throw ConfigError("decay epochs must be strictly increasing");
  }
}

std::string TrainConfig::schedule_json() const {
  json j;
  j["base_lr"] = lr;
  j["decay_epochs"] = decay_epochs;
  j["decay_factor"] = decay_factor;
  j["weight_decay"] = weight_decay;
  j["momentum"] = momentum;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["seed"] = seed;
  return j.dump();
}

double lr_at(const TrainConfig& cfg, std::size_t epoch) {
  int drops = 0;
  for (auto e : cfg.decay_epochs) {
    if (e <= epoch) ++drops;
  }
  // Divide by the integral inverse when there is one, so 0.1 decays land on
  // the nearest doubles of 0.01, 0.001, ...
  const double inv = 1.0 / cfg.decay_factor;
  if (inv == std::round(inv)) return cfg.lr / std::pow(inv, drops);
  return cfg.lr * std::pow(cfg.decay_factor, drops);
}

void sgd_step(const std::vector<Parameter*>& params, double lr, double weight_decay, double momentum,
              MomentumState& state) {
  for (Parameter* p : params) {
    if (!p->grad.all_finite()) throw NumericError("non-finite gradient in parameter " + p->name);
  }
  for (Parameter* p : params) {
    Tensor& v = state[p->name];
    if (v.shape() != p->value.shape()) v = Tensor(p->value.shape());
    const bool has_grad = p->grad.size() == p->value.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double g = has_grad ? p->grad[i] : 0.0;
      v[i] = round_to_precision(momentum * v[i] + g + weight_decay * p->value[i]);
      p->value[i] = round_to_precision(p->value[i] - lr * v[i]);
    }
  }
}

Dataset make_dataset(std::vector<SkeletonSequence> seqs, std::size_t num_classes) {
  Dataset d;
  d.num_classes = num_classes;
  for (auto& s : seqs) d.samples.push_back({std::move(s.data), s.label, std::move(s.source_id)});
  return d;
}

Dataset derive_dataset(const Dataset& joints, const SkeletonGraph& graph, Modality m) {
  Dataset d;
  d.num_classes = joints.num_classes;
  for (const auto& s : joints.samples) d.samples.push_back({derive_stream(s.data, graph, m).data, s.label, s.id});
  return d;
}

DatasetInfo load_dataset_info(const std::filesystem::path& dir) {
  std::ifstream is(dir / "dataset.json");
  if (!is) throw DataError("missing " + (dir / "dataset.json").string());
  DatasetInfo info;
  try {
    const json j = json::parse(is);
    info.num_classes = j.at("num_classes").get<std::size_t>();
    info.frames = j.at("frames").get<std::size_t>();
    info.joints = j.at("joints").get<std::size_t>();
    info.bodies = j.at("bodies").get<std::size_t>();
    info.graph = j.value("graph", std::string("ntu"));
  } catch (const json::exception& e) {
    throw DataError("bad dataset.json: " + std::string(e.what()));
  }
  return info;
}

Dataset load_dataset(const std::filesystem::path& dir, const std::string& split, Modality m) {
  const DatasetInfo info = load_dataset_info(dir);
  std::ifstream is(dir / "manifest.jsonl");
  if (!is) throw DataError("missing " + (dir / "manifest.jsonl").string());
  Dataset d;
  d.num_classes = info.num_classes;
  std::string line;
  std::size_t lineno = 0;
  const std::string key(modality_name(m));
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("manifest.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    if (j.value("split", "") != split) continue;
    const auto files = j.value("files", json::object());
    if (!files.contains(key)) {
      throw DataError("manifest.jsonl line " + std::to_string(lineno) + " has no '" + key + "' stream");
    }
    Sample s;
    s.id = j.value("sample_id", "");
    s.label = j.value("label", -1);
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= info.num_classes) {
      throw DataError("sample " + s.id + " has label " + std::to_string(s.label) + " outside [0, " +
                      std::to_string(info.num_classes) + ")");
    }
    s.data = load_tensor(dir / files.at(key).get<std::string>());
    d.samples.push_back(std::move(s));
  }
  return d;
}

std::string EpochMetrics::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["lr"] = lr;
  j["train_loss"] = train_loss;
  j["train_acc"] = train_acc;
  if (eval_acc) j["eval_acc"] = *eval_acc;
  return j.dump();
}

std::size_t thread_count(bool single_thread) {
  if (single_thread) return 1;
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TEGRAPH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError("TEGRAPH_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
  }
  return n;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

Tensor gather(const Dataset& d, std::span<const std::size_t> idx) {
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(idx.size());
  for (auto i : idx) ptrs.push_back(&d.samples[i].data);
  return batch_input(ptrs);
}

void check_classes(const Network& net, const Dataset& d) {
  if (d.num_classes != net.config().num_classes) {
    throw ConfigError("dataset has " + std::to_string(d.num_classes) + " classes, model has " +
                      std::to_string(net.config().num_classes));
  }
}

// Deterministic Fisher-Yates on a 64-bit Mersenne stream.
void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

EvalResult evaluate(Network& net, const Dataset& data, std::size_t batch_size, bool single_thread) {
  if (data.samples.empty()) throw DataError("evaluation set is empty");
  check_classes(net, data);
  if (batch_size == 0) batch_size = 1;
  const std::size_t n = data.samples.size();
  const std::size_t chunks = (n + batch_size - 1) / batch_size;
  std::vector<Tensor> logits(chunks);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  parallel_for(chunks, thread_count(single_thread), [&](std::size_t c) {
    const std::size_t lo = c * batch_size, hi = std::min(n, lo + batch_size);
    logits[c] = net.predict(gather(data, std::span(idx).subspan(lo, hi - lo)));
  });

  EvalResult r;
  r.total = n;
  const std::size_t k = net.config().num_classes;
  for (std::size_t c = 0; c < chunks; ++c) {
    if (!logits[c].all_finite()) throw NumericError("non-finite logits during evaluation");
    for (std::size_t row = 0; row < logits[c].dim(0); ++row) {
      std::span<const double> l = logits[c].data().subspan(row * k, k);
      const std::size_t pred = argmax(l);
      const std::size_t i = c * batch_size + row;
      if (static_cast<int>(pred) == data.samples[i].label) ++r.correct;
      r.predictions.push_back(pred);
      r.scores.push_back(softmax(l));
    }
  }
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

TrainResult train(Network& net, const TrainConfig& cfg, const Dataset& train_set, const Dataset* eval_set,
                  const std::filesystem::path& out_dir) {
  cfg.validate();
  if (train_set.samples.empty()) throw DataError("training set is empty");
  check_classes(net, train_set);
  for (const auto& s : train_set.samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= train_set.num_classes) {
      throw DataError("sample " + s.id + " has label " + std::to_string(s.label) + " outside the class range");
    }
  }
  std::ofstream metrics, timing;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    metrics.open(out_dir / kMetricsFile, std::ios::trunc);
    timing.open(out_dir / kTimingFile, std::ios::trunc);
    if (!metrics || !timing) throw DataError("cannot write metrics into " + out_dir.string());
  }

  const auto params = net.parameters();
  MomentumState momentum;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_set.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  bool have_best = false;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(cfg, epoch);
    shuffle(order, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + cfg.batch_size);
      std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      std::vector<int> labels;
      for (auto i : idx) labels.push_back(train_set.samples[i].label);

      zero_grads(params);
      Tape tape;
      Var logits = net.forward(tape, tape.constant(gather(train_set, idx)), true);
      Var loss = cross_entropy(logits, labels);
      const double lv = loss.value()[0];
      if (!std::isfinite(lv)) {
        throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch) +
                           "; last good checkpoint kept");
      }
      tape.backward(loss);
      sgd_step(params, lr, cfg.weight_decay, cfg.momentum, momentum);

      loss_sum += lv * static_cast<double>(idx.size());
      const std::size_t k = net.config().num_classes;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        if (static_cast<int>(argmax(logits.value().data().subspan(r * k, k))) == labels[r]) ++correct;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = loss_sum / static_cast<double>(order.size());
    m.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    if (eval_set) m.eval_acc = evaluate(net, *eval_set, cfg.batch_size, cfg.single_thread).accuracy;
    result.history.push_back(m);

    const double score = m.eval_acc.value_or(m.train_acc);
    const bool improved = !have_best || score > result.best_eval;
    if (improved) {
      have_best = true;
      result.best_eval = score;
      result.best_epoch = epoch;
    }
    if (!out_dir.empty()) {
      CheckpointMeta meta{epoch, lr, result.best_eval, cfg.schedule_json()};
      save_checkpoint(out_dir / kLastCheckpoint, net, meta, &momentum);
      if (improved) save_checkpoint(out_dir / kBestCheckpoint, net, meta, &momentum);
      metrics << m.to_json() << '\n' << std::flush;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      timing << json{{"epoch", epoch}, {"seconds", secs}}.dump() << '\n' << std::flush;
    }
  }
  return result;
}

AblationSuite parse_suite(std::string_view name) {
  if (name == "heads") return AblationSuite::kHeads;
  if (name == "layers" || name == "layer-placement") return AblationSuite::kLayers;
  if (name == "modalities") return AblationSuite::kModalities;
  throw ConfigError("unknown ablation suite '" + std::string(name) + "' (heads, layers, modalities)");
}

namespace {

double run_cell(ModelConfig cfg, const TrainConfig& tc, const Dataset& tr, const Dataset& ev,
                EvalResult* scores = nullptr) {
  Network net(std::move(cfg));
  train(net, tc, tr, &ev);
  EvalResult r = evaluate(net, ev, tc.batch_size, tc.single_thread);
  if (scores) *scores = r;
  return r.accuracy;
}

}  // namespace

std::vector<AblationCell> ablate(AblationSuite suite, const AblationInputs& in) {
  std::vector<AblationCell> cells;
  switch (suite) {
    case AblationSuite::kHeads:
      for (std::size_t n : {1, 2, 4, 8}) {
        ModelConfig c = in.base;
        c.layers = backbone_layers(in.backbone, c.in_channels);
        c.heads = n;
        cells.push_back({"heads", std::to_string(n), run_cell(c, in.train, in.train_set, in.eval_set)});
      }
      break;
    case AblationSuite::kLayers:
      for (std::size_t l = 1; l <= in.backbone.channels.size(); ++l) {
        BackboneOptions b = in.backbone;
        b.insertion = l;
        b.replace_all = false;
        ModelConfig c = in.base;
        c.layers = backbone_layers(b, c.in_channels);
        cells.push_back({"layers", std::to_string(l), run_cell(c, in.train, in.train_set, in.eval_set)});
      }
      break;
    case AblationSuite::kModalities: {
      ModelConfig c = in.base;
      c.layers = backbone_layers(in.backbone, c.in_channels);
      const SkeletonGraph graph = c.make_graph();
      std::vector<EvalResult> per(4);
      for (std::size_t m = 0; m < 4; ++m) {
        const Modality mod = kAllModalities[m];
        run_cell(c, in.train, derive_dataset(in.train_set, graph, mod), derive_dataset(in.eval_set, graph, mod),
                 &per[m]);
      }
      const std::vector<std::pair<std::string, std::vector<std::size_t>>> rows{
          {"J", {0}},       {"JM", {1}},        {"B", {2}},           {"BM", {3}},
          {"J+JM", {0, 1}}, {"B+BM", {2, 3}}, {"J+JM+B+BM", {0, 1, 2, 3}}};
      for (const auto& [name, streams] : rows) {
        std::size_t correct = 0;
        const std::size_t n = in.eval_set.samples.size();
        for (std::size_t i = 0; i < n; ++i) {
          StreamScores s;
          for (auto m : streams) {
            s.scores.push_back(per[m].scores[i]);
            s.weights.push_back(1.0);
          }
          if (static_cast<int>(argmax(fuse_streams(s))) == in.eval_set.samples[i].label) ++correct;
        }
        cells.push_back({"modalities", name, static_cast<double>(correct) / static_cast<double>(n)});
      }
      break;
    }
  }
  return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
  std::ostringstream os;
  os << "suite,setting,top1\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& c : cells) os << c.suite << ',' << c.setting << ',' << c.top1 << '\n';
  return os.str();
}

}  // namespace tegcn

namespace tegcn {

GradCheckResult check_network_gradients(const ModelConfig& cfg, std::size_t batch, std::uint64_t seed, double eps) {
  ScopedPrecision f64(Precision::kFloat64);
  Network net(cfg);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor x(Shape{batch * cfg.bodies, cfg.in_channels, cfg.frames, cfg.joints});
  for (auto& v : x.data()) v = normal(rng);
  std::vector<int> labels;
  for (std::size_t i = 0; i < batch; ++i) labels.push_back(static_cast<int>(rng() % cfg.num_classes));
  // Zero-initialized output maps would hide the relevance heads' gradients.
  for (auto& layer : net.layers()) {
    if (!layer->tg) continue;
    for (auto& w : layer->tg->out_maps) {
      w.value = uniform_init(w.value.shape(), w.value.dim(0), seed, w.name);
    }
  }
  auto params = net.parameters();
  return grad_check(
      [&](Tape& tape) { return cross_entropy(net.forward(tape, tape.constant(x), true), labels); }, params, eps);
}

}  // namespace tegcn
