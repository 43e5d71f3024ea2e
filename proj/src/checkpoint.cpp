#include "tegcn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tegcn/serialize.hpp"

namespace tegcn {

using nlohmann::json;

namespace {

json shape_json(const Shape& s) {
  json a = json::array();
  for (auto d : s) a.push_back(d);
  return a;
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint truncated in header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Network& net, const CheckpointMeta& meta,
                     const std::map<std::string, Tensor>* momentum) {
  struct Entry {
    std::string name;
    std::string kind;
    const Tensor* t;
  };
  std::vector<Entry> entries;
  for (Parameter* p : net.parameters()) entries.push_back({p->name, "param", &p->value});
  for (auto& [name, t] : net.buffers()) entries.push_back({name, "buffer", t});
  if (momentum) {
    for (auto& [name, t] : *momentum) entries.push_back({name, "momentum", &t});
  }

  json index = json::array();
  std::size_t offset = 0;
  for (const auto& e : entries) {
    const std::size_t bytes = tensor_record_size(*e.t, precision());
    index.push_back({{"name", e.name}, {"kind", e.kind}, {"shape", shape_json(e.t->shape())}, {"offset", offset},
                     {"bytes", bytes}});
    offset += bytes;
  }
  json manifest;
  manifest["format"] = "tegcn-checkpoint";
  manifest["version"] = 1;
  manifest["config"] = json::parse(net.config().to_json());
  manifest["epoch"] = meta.epoch;
  manifest["lr"] = meta.lr;
  manifest["best_eval"] = meta.best_eval;
  manifest["schedule"] = json::parse(meta.schedule_json);
  manifest["tensors"] = std::move(index);
  const std::string text = manifest.dump();

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write checkpoint " + tmp.string());
    put_u64(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& e : entries) write_tensor(os, *e.t);
    if (!os) throw DataError("write failed for checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  const std::uint64_t len = get_u64(is);
  if (len > (1ULL << 30)) throw DataError("checkpoint manifest length is implausible: " + std::to_string(len));
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw DataError("checkpoint manifest truncated");
  Checkpoint ck;
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint manifest is not JSON: ") + e.what());
  }
  if (manifest.value("format", "") != "tegcn-checkpoint") throw DataError(path.string() + " is not a checkpoint");
  ck.config = ModelConfig::from_json(manifest.at("config").dump());
  ck.meta.epoch = manifest.value("epoch", std::size_t{0});
  ck.meta.lr = manifest.value("lr", 0.0);
  ck.meta.best_eval = manifest.value("best_eval", 0.0);
  ck.meta.schedule_json = manifest.value("schedule", json::object()).dump();
  for (const auto& e : manifest.at("tensors")) {
    Tensor t = read_tensor(is);
    Shape want;
    for (const auto& d : e.at("shape")) want.push_back(d.get<std::size_t>());
    const std::string name = e.at("name").get<std::string>();
    if (t.shape() != want) {
      throw DataError("checkpoint tensor " + name + " has shape " + shape_str(t.shape()) + ", index says " +
                      shape_str(want));
    }
    const std::string kind = e.at("kind").get<std::string>();
    auto& dst = kind == "param" ? ck.params : kind == "buffer" ? ck.buffers : ck.momentum;
    dst.emplace(name, std::move(t));
  }
  return ck;
}

void apply_checkpoint(Network& net, const Checkpoint& ck) {
  auto copy = [](const std::string& name, Tensor& dst, const std::map<std::string, Tensor>& src) {
    auto it = src.find(name);
    if (it == src.end()) throw DimensionError("checkpoint has no tensor " + name);
    if (it->second.shape() != dst.shape()) {
      throw DimensionError("checkpoint tensor " + name + " has shape " + shape_str(it->second.shape()) +
                           ", model expects " + shape_str(dst.shape()));
    }
    dst = it->second;
  };
  for (Parameter* p : net.parameters()) copy(p->name, p->value, ck.params);
  for (auto& [name, t] : net.buffers()) copy(name, *t, ck.buffers);
}

std::unique_ptr<Network> network_from_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  auto net = std::make_unique<Network>(ck.config);
  apply_checkpoint(*net, ck);
  return net;
}

}  // namespace tegcn
