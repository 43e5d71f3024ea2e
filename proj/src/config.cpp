#include "tegcn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace tegcn {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  std::string out(s.substr(b, e - b + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::size_t> to_sizes(const std::string& key, std::string v) {
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_size(key, item));
  }
  return out;
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value, got '" + t + "'");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str());
}

std::pair<std::string, std::string> parse_override(std::string_view kv) {
  const auto eq = kv.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value, got '" + std::string(kv) + "'");
  }
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

std::vector<std::pair<std::string, std::string>> config_keys() {
  return {
      {"preset", "desk: 32 frames, batch 8"},
      {"model.classes", "class count"},
      {"model.frames", "input frames T"},
      {"model.bodies", "body slots M"},
      {"model.graph", "ntu | chain | custom"},
      {"model.joints", "joint count (chain graphs)"},
      {"model.channels", "comma-separated output channels per layer"},
      {"model.strides", "comma-separated temporal strides per layer"},
      {"model.insertion", "1-based layer carrying temporal graph conv (0: none)"},
      {"model.insertion_mode", "temporal-graph | both"},
      {"model.replace_all", "temporal graph conv in every layer"},
      {"model.width_div", "divide every channel count"},
      {"model.kernel", "TC-block kernel K_t"},
      {"model.heads", "temporal graph heads N"},
      {"model.relevance", "feature-calculated | feature-learned | mixed"},
      {"model.seed", "parameter init seed"},
      {"train.lr", "base learning rate"},
      {"train.decay_epochs", "comma-separated epochs where lr decays"},
      {"train.decay_factor", "lr multiplier per decay"},
      {"train.weight_decay", "L2 coefficient"},
      {"train.momentum", "SGD momentum"},
      {"train.batch_size", "mini-batch size"},
      {"train.epochs", "total epochs"},
      {"train.seed", "shuffle seed"},
  };
}

void RunConfig::apply(const KeyValues& kv) {
  if (auto it = kv.find("preset"); it != kv.end()) {
    if (it->second != "desk" && it->second != "paper") throw ConfigError("preset: expected desk or paper");
    if (it->second == "desk") {
      model.frames = 32;
      train.batch_size = 8;
    }
  }
  for (const auto& [key, v] : kv) {
    if (key == "preset") continue;
    else if (key == "model.classes") model.num_classes = to_size(key, v);
    else if (key == "model.frames") model.frames = to_size(key, v);
    else if (key == "model.bodies") model.bodies = to_size(key, v);
    else if (key == "model.graph") model.graph = v;
    else if (key == "model.joints") model.joints = to_size(key, v);
    else if (key == "model.channels") backbone.channels = to_sizes(key, v);
    else if (key == "model.strides") backbone.strides = to_sizes(key, v);
    else if (key == "model.insertion") backbone.insertion = to_size(key, v);
    else if (key == "model.insertion_mode") backbone.insertion_mode = parse_temporal_mode(v);
    else if (key == "model.replace_all") backbone.replace_all = to_bool(key, v);
    else if (key == "model.width_div") backbone.width_div = to_size(key, v);
    else if (key == "model.kernel") model.kernel = to_size(key, v);
    else if (key == "model.heads") model.heads = to_size(key, v);
    else if (key == "model.relevance") model.relevance = parse_relevance_mode(v);
    else if (key == "model.seed") model.seed = to_size(key, v);
    else if (key == "train.lr") train.lr = to_double(key, v);
    else if (key == "train.decay_epochs") train.decay_epochs = to_sizes(key, v);
    else if (key == "train.decay_factor") train.decay_factor = to_double(key, v);
    else if (key == "train.weight_decay") train.weight_decay = to_double(key, v);
    else if (key == "train.momentum") train.momentum = to_double(key, v);
    else if (key == "train.batch_size") train.batch_size = to_size(key, v);
    else if (key == "train.epochs") train.epochs = to_size(key, v);
    else if (key == "train.seed") train.seed = to_size(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  train.validate();
}

ModelConfig RunConfig::resolve() const {
  ModelConfig c = model;
  c.layers = backbone_layers(backbone, c.in_channels);
  c.validate();
  return c;
}

void RunConfig::adopt(const DatasetInfo& info) {
  model.num_classes = info.num_classes;
  model.frames = info.frames;
  model.joints = info.joints;
  model.bodies = info.bodies;
  model.graph = info.graph;
}

}  // namespace tegcn
