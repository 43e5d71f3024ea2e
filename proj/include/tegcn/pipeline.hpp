#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tegcn/modality.hpp"
#include "tegcn/skeleton.hpp"
#include "tegcn/synth.hpp"
#include "tegcn/train.hpp"

namespace tegcn {

enum class SplitProtocol { kCrossSubject, kCrossView };
SplitProtocol parse_protocol(std::string_view name);

/// "train" or "eval" for an NTU file name under the given protocol.
std::string ntu_split(const NtuName& name, SplitProtocol protocol);

struct LabeledSequence {
  SkeletonSequence seq;
  std::string split;
};

struct PreprocessReport {
  std::size_t written = 0;
  std::vector<std::string> rejected;  // "<file>: <reason>"
};

// Writes dataset.json, manifest.jsonl and <modality>/<sample>.tegt for every
// requested modality. Samples are written in the given order.
void write_dataset(const std::filesystem::path& out_dir, const DatasetInfo& info, const SkeletonGraph& graph,
                   const std::vector<LabeledSequence>& samples, const std::vector<Modality>& modalities);

// Every *.skeleton file under in_dir in sorted name order. Clips emptied by body
// filtering are rejected and reported; parse failures throw.
PreprocessReport preprocess_ntu_directory(const std::filesystem::path& in_dir, const std::filesystem::path& out_dir,
                                          const PreprocessOptions& opts, SplitProtocol protocol,
                                          const std::vector<Modality>& modalities);

// JSON manifest of generator parameters:
//   {"kind": "templates" | "long-range", "classes", "samples_per_class",
//    "eval_samples_per_class", "joints", "frames", "bodies", "noise", "seed"}
// Train samples use seed, eval samples seed + 1.
PreprocessReport preprocess_synthetic(const std::filesystem::path& spec_file, const std::filesystem::path& out_dir,
                                      const std::vector<Modality>& modalities);

}  // namespace tegcn
