#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tegcn/model.hpp"
#include "tegcn/train.hpp"

namespace tegcn {

using KeyValues = std::map<std::string, std::string>;

// key = value lines; '#' starts a comment; a "[section]" line prefixes the
// following keys with "section.". Throws ConfigError with the line number.
KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);
/// "key=value" override as given on the command line.
std::pair<std::string, std::string> parse_override(std::string_view kv);

struct RunConfig {
  ModelConfig model;  // layers filled by resolve()
  BackboneOptions backbone;
  TrainConfig train;

  // Throws ConfigError on unknown keys or unparsable values.
  void apply(const KeyValues& kv);
  /// Model config with the layer plan expanded from `backbone`.
  ModelConfig resolve() const;
  void adopt(const DatasetInfo& info);
};

/// All accepted keys with a one-line description, for --help output.
std::vector<std::pair<std::string, std::string>> config_keys();

}  // namespace tegcn
