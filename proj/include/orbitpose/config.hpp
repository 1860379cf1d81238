#pragma once

#include <map>
#include <string>

#include "orbitpose/model.hpp"
#include "orbitpose/toydata.hpp"
#include "orbitpose/trainer.hpp"

namespace orbitpose {

using ConfigMap = std::map<std::string, std::string>;

// Plain-text key=value file; '#' starts a comment, blank lines are ignored.
ConfigMap parse_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text);

// Applies recognized keys onto the three config structs and rejects unknown
// keys with std::invalid_argument (a usage error at the CLI).
void apply_config(const ConfigMap& map, ModelConfig& model, TrainerConfig& trainer,
                  DatasetSpec& data);

}  // namespace orbitpose
