// Copyright 2026 The picrypt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <charconv>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

#include "picrypt/errors.h"
#include "picrypt/harness.h"

namespace picrypt::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || value.empty()) {
    throw ConfigError("config: bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw ConfigError("config: bad boolean '" + value + "' for " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<T>(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  cfg.train.model.embed_dim = 64;
  cfg.train.model.depth = 4;
  cfg.train.model.heads = 4;
  cfg.train.model.classes = cfg.data.classes;
  bool sweep_model = false;
  std::optional<std::size_t> spn_rounds;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto size_of = [](std::size_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = parse_number<std::size_t>(k, v);
    };
  };
  auto u64_of = [](std::uint64_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = parse_number<std::uint64_t>(k, v);
    };
  };
  auto real_of = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) {
      field = parse_number<double>(k, v);
    };
  };
  auto bool_of = [](bool& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_bool(k, v); };
  };

  const std::map<std::string, Setter> setters = {
      {"data.image_size", size_of(cfg.data.image_size)},
      {"data.classes", size_of(cfg.data.classes)},
      {"data.train_per_class", size_of(cfg.data.train_per_class)},
      {"data.test_per_class", size_of(cfg.data.test_per_class)},
      {"data.seed", u64_of(cfg.data.seed)},
      {"data.marker", bool_of(cfg.data.marker_enabled)},
      {"model.patch_size", size_of(cfg.train.patch_size)},
      {"model.embed_dim", size_of(cfg.train.model.embed_dim)},
      {"model.depth", size_of(cfg.train.model.depth)},
      {"model.heads", size_of(cfg.train.model.heads)},
      {"model.rpe", bool_of(cfg.train.model.rpe_enabled)},
      {"model.rpe_hidden", size_of(cfg.train.model.rpe_hidden)},
      {"model.abs_pos", bool_of(cfg.train.absolute_positions)},
      {"model.init_std", real_of(cfg.train.init_std)},
      {"train.epochs", size_of(cfg.train.epochs)},
      {"train.batch", size_of(cfg.train.batch)},
      {"train.lr", real_of(cfg.train.lr)},
      {"train.beta1", real_of(cfg.train.beta1)},
      {"train.beta2", real_of(cfg.train.beta2)},
      {"train.eps", real_of(cfg.train.eps)},
      {"train.seed", u64_of(cfg.train.seed)},
      {"train.target_accuracy", real_of(cfg.train.target_accuracy)},
      {"enc.mode",
       [&](const std::string&, const std::string& v) { cfg.train.enc = Encryption::parse(v); }},
      {"enc.rounds",
       [&](const std::string& k, const std::string& v) {
         spn_rounds = parse_number<std::size_t>(k, v);
       }},
      {"sweep.patch_sizes",
       [&](const std::string& k, const std::string& v) {
         cfg.sweep.patch_sizes = parse_list<std::size_t>(k, v);
       }},
      {"sweep.intervals",
       [&](const std::string& k, const std::string& v) {
         cfg.sweep.intervals = parse_list<std::size_t>(k, v);
       }},
      {"sweep.drops",
       [&](const std::string& k, const std::string& v) {
         cfg.sweep.drop_ratios = parse_list<double>(k, v);
       }},
      {"sweep.image_sizes",
       [&](const std::string& k, const std::string& v) {
         cfg.sweep.image_sizes = parse_list<std::size_t>(k, v);
       }},
      {"sweep.corpus", size_of(cfg.sweep.corpus)},
      {"sweep.seed", u64_of(cfg.sweep.seed)},
      {"sweep.train_model", bool_of(sweep_model)},
  };

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not key=value");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second(key, value);
  }

  if (spn_rounds) cfg.train.enc.rounds = *spn_rounds;
  if (cfg.train.enc.rounds == 0) throw ConfigError("config: enc.rounds must be at least 1");
  if (cfg.train.model.heads == 0 || cfg.train.model.embed_dim % cfg.train.model.heads != 0) {
    throw ConfigError("config: model.embed_dim must be divisible by model.heads");
  }
  cfg.train.model.head_dim = cfg.train.model.embed_dim / cfg.train.model.heads;
  cfg.train.model.classes = cfg.data.classes;
  cfg.train.validate();
  cfg.sweep.data = cfg.data;
  if (sweep_model) cfg.sweep.model = cfg.train;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace picrypt::harness
