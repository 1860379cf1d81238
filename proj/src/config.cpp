#include "orbitpose/config.hpp"

#include <fstream>
#include <sstream>

#include "orbitpose/errors.hpp"

namespace orbitpose {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" +
                                value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" +
                                value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw std::invalid_argument("config: key '" + key + "' expects a boolean, got '" +
                              value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::istringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty())
    throw std::invalid_argument("config: key '" + key + "' expects a comma list");
  return out;
}

LossWeights to_weights(const std::string& key, const std::string& value) {
  const std::vector<double> v = to_list(key, value);
  if (v.size() != 3)
    throw std::invalid_argument("config: key '" + key + "' expects three weights");
  return LossWeights{v[0], v[1], v[2]};
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key=value: '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " has an empty key");
    map[key] = value;
  }
  return map;
}

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_config(const ConfigMap& map, ModelConfig& model, TrainerConfig& trainer,
                  DatasetSpec& data) {
  for (const auto& [key, value] : map) {
    if (key == "image_size") {
      model.image_size = to_int(key, value);
      data.image_size = model.image_size;
    } else if (key == "channels") {
      model.channels = to_int(key, value);
      data.channels = model.channels;
    } else if (key == "d_id") {
      model.d_id = to_int(key, value);
    } else if (key == "hidden_sizes") {
      model.hidden_sizes.clear();
      for (double h : to_list(key, value)) model.hidden_sizes.push_back(static_cast<int>(h));
    } else if (key == "c") {
      model.c = to_double(key, value);
    } else if (key == "k_order") {
      model.group = GroupParams(to_int(key, value));
      data.group = model.group;
    } else if (key == "n_objects") {
      data.n_objects = to_int(key, value);
    } else if (key == "complexity") {
      data.complexity = to_int(key, value);
    } else if (key == "elevations_deg") {
      data.elevations_deg = to_list(key, value);
    } else if (key == "lr0") {
      trainer.lr0 = to_double(key, value);
    } else if (key == "gamma") {
      trainer.gamma = to_double(key, value);
    } else if (key == "decay_every") {
      trainer.decay_every = to_int(key, value);
    } else if (key == "batch_size") {
      trainer.batch_size = to_int(key, value);
    } else if (key == "stage1_iters") {
      trainer.stage1_iters = to_int(key, value);
    } else if (key == "stage2_iters") {
      trainer.stage2_iters = to_int(key, value);
    } else if (key == "stage1_weights") {
      trainer.stage1_weights = to_weights(key, value);
    } else if (key == "stage2_weights") {
      trainer.stage2_weights = to_weights(key, value);
    } else if (key == "rho") {
      trainer.rho = to_double(key, value);
    } else if (key == "epsilon") {
      trainer.epsilon = to_double(key, value);
    } else if (key == "threads") {
      trainer.n_threads = to_int(key, value);
    } else if (key == "checkpoint_every") {
      trainer.checkpoint_every = to_int(key, value);
    } else if (key == "pixel_norm") {
      trainer.normalize_recon_by_pixels = to_bool(key, value);
    } else {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

}  // namespace orbitpose
