#include "tegcn/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "tegcn/serialize.hpp"

namespace tegcn {

using nlohmann::json;

SplitProtocol parse_protocol(std::string_view name) {
  if (name == "xsub" || name == "cross-subject") return SplitProtocol::kCrossSubject;
  if (name == "xview" || name == "cross-view") return SplitProtocol::kCrossView;
  throw ConfigError("unknown split protocol '" + std::string(name) + "' (xsub, xview)");
}

std::string ntu_split(const NtuName& name, SplitProtocol protocol) {
  // Standard NTU RGB+D 60 training performers.
  static constexpr int kTrainSubjects[] = {1, 2, 4, 5, 8, 9, 13, 14, 15, 16, 17, 18, 19, 25, 27, 28, 31, 34, 35, 38};
  if (protocol == SplitProtocol::kCrossSubject) {
    return std::find(std::begin(kTrainSubjects), std::end(kTrainSubjects), name.performer) != std::end(kTrainSubjects)
               ? "train"
               : "eval";
  }
  return name.camera == 1 ? "eval" : "train";
}

void write_dataset(const std::filesystem::path& out_dir, const DatasetInfo& info, const SkeletonGraph& graph,
                   const std::vector<LabeledSequence>& samples, const std::vector<Modality>& modalities) {
  if (modalities.empty()) throw ConfigError("no modalities requested");
  std::filesystem::create_directories(out_dir);
  for (auto m : modalities) std::filesystem::create_directories(out_dir / std::string(modality_name(m)));
  {
    std::ofstream os(out_dir / "dataset.json", std::ios::trunc);
    json j{{"num_classes", info.num_classes},
           {"frames", info.frames},
           {"joints", info.joints},
           {"bodies", info.bodies},
           {"graph", info.graph}};
    os << j.dump(2) << '\n';
    if (!os) throw DataError("cannot write dataset.json in " + out_dir.string());
  }
  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::trunc);
  if (!manifest) throw DataError("cannot write manifest.jsonl in " + out_dir.string());
  for (const auto& s : samples) {
    json files = json::object();
    for (auto m : modalities) {
      const std::string name(modality_name(m));
      const std::string rel = name + "/" + s.seq.source_id + ".tegt";
      save_tensor(out_dir / rel, derive_stream(s.seq.data, graph, m).data);
      files[name] = rel;
    }
    manifest << json{{"sample_id", s.seq.source_id},
                     {"label", s.seq.label},
                     {"split", s.split},
                     {"valid_frames", s.seq.valid_frames},
                     {"files", files}}
                    .dump()
             << '\n';
  }
}

PreprocessReport preprocess_ntu_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                                          const PreprocessOptions& opts, SplitProtocol protocol,
                                          const std::vector<Modality>& modalities) {
  if (!std::filesystem::is_directory(in_dir)) throw DataError(in_dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(in_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".skeleton") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no .skeleton files in " + in_dir.string());

  PreprocessReport report;
  std::vector<LabeledSequence> samples;
  int max_label = -1;
  for (const auto& f : files) {
    NtuName name;
    if (!parse_ntu_name(f.stem().string(), name)) {
      throw DataError(f.filename().string() + ": file name does not follow SsssCcccPpppRrrrAaaa");
    }
    RawClip clip;
    try {
      clip = parse_skeleton_file(f);
    } catch (const ParseError& e) {
      throw ParseError(f.filename().string() + ": " + e.what());
    }
    try {
      SkeletonSequence seq = preprocess_clip(clip, opts);
      seq.label = name.action - 1;
      seq.source_id = f.stem().string();
      max_label = std::max(max_label, seq.label);
      samples.push_back({std::move(seq), ntu_split(name, protocol)});
    } catch (const EmptyClipError& e) {
      report.rejected.push_back(f.filename().string() + ": " + e.what());
    }
  }
  DatasetInfo info;
  info.num_classes = max_label < 60 ? 60 : 120;
  info.frames = opts.fixed_len;
  info.joints = kNtuJoints;
  info.bodies = opts.max_bodies;
  info.graph = "ntu";
  write_dataset(out_dir, info, ntu_graph(), samples, modalities);
  report.written = samples.size();
  return report;
}

PreprocessReport preprocess_synthetic(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir,
                                      const std::vector<Modality>& modalities) {
  std::ifstream is(spec_file);
  if (!is) throw DataError("cannot read " + spec_file.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(spec_file.string() + ": " + e.what());
  }
  const std::string kind = j.value("kind", "templates");
  SynthParams p;
  p.classes = j.value("classes", kind == "long-range" ? std::size_t{2} : p.classes);
  p.samples_per_class = j.value("samples_per_class", p.samples_per_class);
  p.joints = j.value("joints", p.joints);
  p.frames = j.value("frames", p.frames);
  p.bodies = j.value("bodies", p.bodies);
  p.noise = j.value("noise", p.noise);
  p.seed = j.value("seed", p.seed);
  const std::size_t eval_per_class = j.value("eval_samples_per_class", p.samples_per_class / 2);

  auto generate = [&](const SynthParams& q) {
    if (kind == "templates") return synth_dataset(q);
    if (kind == "long-range") return synth_long_range_dataset(q);
    throw ConfigError("unknown synthetic kind '" + kind + "' (templates, long-range)");
  };
  std::vector<LabeledSequence> samples;
  for (auto& s : generate(p)) {
    s.source_id = "train-" + s.source_id;
    samples.push_back({std::move(s), "train"});
  }
  if (eval_per_class > 0) {
    SynthParams q = p;
    q.samples_per_class = eval_per_class;
    q.seed = p.seed + 1;
    for (auto& s : generate(q)) {
      s.source_id = "eval-" + s.source_id;
      samples.push_back({std::move(s), "eval"});
    }
  }
  DatasetInfo info{p.classes, p.frames, p.joints, p.bodies, "chain"};
  write_dataset(out_dir, info, chain_graph(p.joints), samples, modalities);
  return {samples.size(), {}};
}

}  // namespace tegcn
