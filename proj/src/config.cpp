#include "ccafuse/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <set>
#include <sstream>

#include "ccafuse/errors.hpp"
#include "ccafuse/io.hpp"

namespace ccafuse {

namespace {

// Every accepted key; anything else is a typo worth reporting.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"seed", "jobs", "folds"}},
      {"paths", {"data", "embeddings", "labels"}},
      {"simulate",
       {"n", "p", "q", "d", "k_eig", "sigma_x", "sigma_y", "sparsity", "structure", "folds",
        "split", "survival", "survival_strength", "censoring_rate"}},
      {"embed",
       {"solver", "scheme", "k", "ridge", "c_grid", "lambda_l1_grid", "lambda_graph_grid",
        "graph_threshold", "graph_x", "graph_y", "tol", "max_iter"}},
      {"predict", {"hidden", "hidden_concat", "epochs", "lr", "momentum", "batch_size", "patience"}},
      {"survival", {"penalizer", "l1_ratio"}},
  };
  return keys;
}

void check_key(const std::string& section, const std::string& key) {
  const auto& keys = known_keys();
  const auto it = keys.find(section);
  if (it == keys.end()) throw ConfigError("unknown config section [" + section + "]");
  if (!it->second.count(key)) throw ConfigError("unknown config key " + section + "." + key);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Config Config::parse(const std::string& text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config cfg;
  cfg.base_dir_ = base_dir;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, value] : body) cfg.set(section, key, value.data());
  }
  return cfg;
}

Config Config::load(const std::optional<std::filesystem::path>& path) {
  if (!path) return Config();
  std::string text;
  try {
    text = read_text(*path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path->string());
  }
  auto base = std::filesystem::absolute(*path).parent_path();
  return parse(text, base);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = values_.find(section);
  return it != values_.end() && it->second.count(key) > 0;
}

std::string Config::get(const std::string& section, const std::string& key,
                        const std::string& fallback) const {
  if (!has(section, key)) return fallback;
  return values_.at(section).at(key);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  if (!has(section, key)) return fallback;
  try {
    return parse_double(get(section, key, ""));
  } catch (const DataError&) {
    throw ConfigError(section + "." + key + " is not a number");
  }
}

long long Config::get_int(const std::string& section, const std::string& key,
                          long long fallback) const {
  if (!has(section, key)) return fallback;
  const std::string text = get(section, key, "");
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(section + "." + key + " is not an integer");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string v = lower(get(section, key, ""));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(section + "." + key + " is not a boolean");
}

std::vector<double> Config::get_list(const std::string& section, const std::string& key,
                                     const std::vector<double>& fallback) const {
  if (!has(section, key)) return fallback;
  std::vector<double> out;
  std::istringstream in(get(section, key, ""));
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    try {
      out.push_back(parse_double(item));
    } catch (const DataError&) {
      throw ConfigError(section + "." + key + ": '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError(section + "." + key + " must not be empty");
  return out;
}

std::filesystem::path Config::get_path(const std::string& section, const std::string& key,
                                       const std::filesystem::path& fallback) const {
  if (!has(section, key)) return fallback;
  std::filesystem::path p = get(section, key, "");
  return p.is_absolute() ? p : base_dir_ / p;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  check_key(section, key);
  values_[section][key] = value;
}

void Config::apply_env(char** envp) {
  if (!envp) return;
  const std::string prefix = "CCAFUSE_";
  for (char** e = envp; *e; ++e) {
    const std::string entry = *e;
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(prefix.size(), eq - prefix.size());
    const auto sep = name.find('_');
    if (sep == std::string::npos) throw ConfigError("malformed override " + entry.substr(0, eq));
    set(lower(name.substr(0, sep)), lower(name.substr(sep + 1)), entry.substr(eq + 1));
  }
}

std::string Config::dump() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& [section, body] : values_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << section << "]\n";
    for (const auto& [key, value] : body) {
      const bool is_path = section == "paths" || key == "graph_x" || key == "graph_y";
      out << key << " = " << (is_path ? get_path(section, key, "").string() : value) << '\n';
    }
  }
  return out.str();
}

}  // namespace ccafuse
