// src/util/config.cc

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cefa/util/config.h"

#include <fstream>
#include <sstream>

#include "cefa/util/rng.h"

namespace cefa {

namespace {

const std::map<std::string, std::string>& Defaults() {
  static const std::map<std::string, std::string> defaults = {
      // dataset synthesis
      {"data.image_size", "96"},
      {"data.patch_size", "8"},
      {"data.num_verbs", "6"},
      {"data.num_objects", "5"},
      {"data.rare_threshold", "10"},
      {"data.tail_classes", "8"},
      {"data.tail_count", "8"},
      {"data.head_max", "48"},
      {"data.zipf_exponent", "0.7"},
      {"data.test_per_category", "6"},
      {"data.per_rare", "50"},
      // generated-domain appearance shift
      {"data.texture_amplitude", "0.30"},
      {"data.hue_delta", "0.45"},
      {"data.noise_sigma", "0.04"},
      {"data.gen_jitter_scale", "0.5"},
      // verb slot assignment: "object_coupled" scrambles the relation slot per
      // object class so rare pairs cannot be read off head pairs
      {"data.verb_slots", "object_coupled"},

      // detector
      {"model.dim", "64"},
      {"model.stem_channels", "32"},
      {"model.encoder_layers", "2"},
      {"model.decoder_layers", "2"},
      {"model.heads", "4"},
      {"model.ffn_dim", "128"},
      {"model.num_queries", "16"},
      {"model.score_mode", "product"},

      // instance feature alignment
      {"align.enabled", "true"},
      {"align.k", "6"},
      {"align.graph_variant", "bidirectional"},
      {"align.gcn_layers", "1"},
      {"align.grl_lambda", "1.0"},
      {"align.grl_warmup_steps", "0"},
      {"align.gcn_activation", "relu"},
      {"align.aggregator", "gcn"},
      {"align.disc_hidden", "64"},

      // context enhancement
      {"ctx.enabled", "true"},
      {"ctx.sigma", "0.8"},
      {"ctx.controller", "cross_attention"},
      {"ctx.loss_scope", "masked_only"},
      {"ctx.conditioning", "gated"},
      {"ctx.gate_mode", "hard"},
      {"ctx.sign_channels", "per_channel"},
      {"ctx.decoder_layers", "2"},

      // training
      {"train.lr", "1e-3"},
      {"train.lr_backbone", "1e-4"},
      {"train.lr_disc", "1e-3"},
      {"train.pretrain_epochs", "14"},
      {"train.epochs", "6"},
      {"train.batch_src", "6"},
      {"train.batch_gen", "6"},
      {"train.pseudo_threshold", "1.4"},
      {"train.freeze", "pair_decoder"},
      {"train.use_generated", "true"},
      {"train.trust_prompt_labels", "false"},
      {"train.weight_l1", "2.5"},
      {"train.weight_giou", "1.0"},
      {"train.weight_obj", "1.0"},
      {"train.weight_verb", "1.0"},
      {"train.weight_noobj", "0.1"},
      {"train.weight_ctx", "1.0"},
      {"train.weight_adv", "1.0"},
      {"train.eval_every", "1"},
      {"train.max_steps", "0"},
      {"train.pretrain_cache", ""},
      {"train.seed", "0"},

      // evaluation
      {"eval.iou_threshold", "0.5"},
      {"eval.mode", "default"},
      {"probe.folds", "5"},

      {"preset", "full_cefa"},
  };
  return defaults;
}

std::string Trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

Config::Config() : values_(Defaults()) {}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (key == "preset")
      apply_preset(value);
    else
      set(key, value);
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (Defaults().count(key) == 0) throw ConfigError("unknown config key: " + key);
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

int Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  size_t pos = 0;
  int out;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": '" + v + "' is not an integer");
  }
  if (pos != v.size())
    throw ConfigError("config key " + key + ": '" + v + "' is not an integer");
  return out;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  size_t pos = 0;
  double out;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": '" + v + "' is not a number");
  }
  if (pos != v.size())
    throw ConfigError("config key " + key + ": '" + v + "' is not a number");
  return out;
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key " + key + ": '" + v + "' is not a boolean");
}

void Config::apply_preset(const std::string& preset) {
  auto on_off = [&](bool align, bool ctx, bool use_gen) {
    values_["align.enabled"] = align ? "true" : "false";
    values_["ctx.enabled"] = ctx ? "true" : "false";
    values_["train.use_generated"] = use_gen ? "true" : "false";
  };
  if (preset == "baseline") {
    on_off(false, false, false);
  } else if (preset == "naive_merge") {
    on_off(false, false, true);
  } else if (preset == "instance_only") {
    on_off(true, false, true);
  } else if (preset == "context_only") {
    on_off(false, true, true);
  } else if (preset == "full_cefa") {
    on_off(true, true, true);
  } else if (preset == "graph_fully_connected") {
    on_off(true, true, true);
    values_["align.graph_variant"] = "fully_connected";
  } else if (preset == "graph_directed") {
    on_off(true, true, true);
    values_["align.graph_variant"] = "directed";
  } else if (preset == "aggregator_transformer") {
    on_off(true, true, true);
    values_["align.aggregator"] = "transformer";
  } else if (preset == "controller_mlp") {
    on_off(true, true, true);
    values_["ctx.controller"] = "mlp";
  } else if (preset == "controller_self_attention") {
    on_off(true, true, true);
    values_["ctx.controller"] = "self_attention";
  } else if (preset == "context_non_condition") {
    on_off(true, true, true);
    values_["ctx.conditioning"] = "none";
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + preset + "'; available: " + names);
  }
  values_["preset"] = preset;
}

std::vector<std::string> Config::preset_names() {
  return {"baseline",
          "naive_merge",
          "instance_only",
          "context_only",
          "full_cefa",
          "graph_fully_connected",
          "graph_directed",
          "aggregator_transformer",
          "controller_mlp",
          "controller_self_attention",
          "context_non_condition"};
}

uint64_t Config::architecture_fingerprint() const {
  static const char* kArchKeys[] = {
      "data.image_size",      "data.patch_size",    "data.num_verbs",
      "data.num_objects",     "model.dim",          "model.stem_channels",
      "model.encoder_layers", "model.decoder_layers", "model.heads",
      "model.ffn_dim",        "model.num_queries",  "align.k",
      "align.gcn_layers",     "align.aggregator",   "align.disc_hidden",
      "ctx.controller",       "ctx.decoder_layers", "ctx.sign_channels",
  };
  uint64_t h = 0xcefa0001u;
  for (const char* key : kArchKeys) {
    for (char c : std::string(key) + "=" + get(key) + ";")
      h = HashCombine(h, static_cast<uint64_t>(static_cast<unsigned char>(c)));
  }
  return h;
}

std::string Config::to_string() const {
  // The preset line must come first: load_file applies a preset the moment
  // it reads it, so any toggle key serialized before "preset" would be
  // clobbered on the round trip.
  std::ostringstream os;
  auto it = values_.find("preset");
  if (it != values_.end()) os << "preset = " << it->second << "\n";
  for (const auto& [k, v] : values_)
    if (k != "preset") os << k << " = " << v << "\n";
  return os.str();
}

}  // namespace cefa
