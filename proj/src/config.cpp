#include "pdmpclt/config.hpp"

#include <fstream>
#include <memory>
#include <sstream>

namespace pdmpclt {

namespace {

std::string strip(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Cut a '#' comment, respecting double-quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char c : key)
    if (std::isalnum(static_cast<unsigned char>(c)) == 0 && c != '_' && c != '-') return false;
  return true;
}

}  // namespace

ConfigNode parse_config_text(const std::string& text) {
  ConfigNode root;
  std::vector<ConfigNode*> stack{&root};
  std::istringstream in(text);
  std::string raw_line;
  int line_no = 0;
  while (std::getline(in, raw_line)) {
    ++line_no;
    const std::string line = strip(strip_comment(raw_line));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);

    if (line == "}") {
      if (stack.size() == 1) throw ConfigError(where + ": unmatched '}'");
      stack.pop_back();
      continue;
    }
    if (line.back() == '{') {
      const std::string key = strip(line.substr(0, line.size() - 1));
      if (!valid_key(key)) throw ConfigError(where + ": bad block name '" + key + "'");
      ConfigNode& parent = *stack.back();
      if (parent.children.count(key) != 0 || parent.values.count(key) != 0)
        throw ConfigError(where + ": duplicate key '" + key + "'");
      stack.push_back(&parent.children[key]);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', 'block {' or '}'");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where + ": bad key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    ConfigNode& parent = *stack.back();
    if (parent.children.count(key) != 0 || parent.values.count(key) != 0)
      throw ConfigError(where + ": duplicate key '" + key + "'");
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded())
      throw ConfigError(where + ": value for '" + key + "' is not a JSON fragment");
    parent.values[key] = std::move(parsed);
  }
  if (stack.size() != 1) throw ConfigError("config: unclosed block at end of file");
  return root;
}

ConfigNode parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

ConfigView::ConfigView(const ConfigNode& node, std::string path) : node_(&node), path_(std::move(path)) {}

bool ConfigView::has(const std::string& key) const { return node_->values.count(key) != 0; }
bool ConfigView::has_block(const std::string& key) const { return node_->children.count(key) != 0; }

ConfigView& ConfigView::block(const std::string& key) {
  ConfigView* view = maybe_block(key);
  if (view == nullptr) throw ConfigError("config: missing required block '" + path_ + key + "'");
  return *view;
}

ConfigView* ConfigView::maybe_block(const std::string& key) {
  auto tracked = used_blocks_.find(key);
  if (tracked != used_blocks_.end()) return tracked->second.get();
  auto it = node_->children.find(key);
  if (it == node_->children.end()) return nullptr;
  auto view = std::make_shared<ConfigView>(it->second, path_ + key + ".");
  return used_blocks_.emplace(key, std::move(view)).first->second.get();
}

const nlohmann::json& ConfigView::raw(const std::string& key) {
  auto it = node_->values.find(key);
  if (it == node_->values.end())
    throw ConfigError("config: missing required key '" + path_ + key + "'");
  used_values_.insert(key);
  return it->second;
}

double ConfigView::number(const std::string& key) {
  const auto& v = raw(key);
  if (!v.is_number()) throw ConfigError("config: '" + path_ + key + "' must be a number");
  return v.get<double>();
}

double ConfigView::number_or(const std::string& key, double dflt) {
  return has(key) ? number(key) : dflt;
}

std::int64_t ConfigView::integer(const std::string& key) {
  const auto& v = raw(key);
  if (!v.is_number_integer())
    throw ConfigError("config: '" + path_ + key + "' must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t ConfigView::integer_or(const std::string& key, std::int64_t dflt) {
  return has(key) ? integer(key) : dflt;
}

std::string ConfigView::text(const std::string& key) {
  const auto& v = raw(key);
  if (!v.is_string()) throw ConfigError("config: '" + path_ + key + "' must be a string");
  return v.get<std::string>();
}

std::string ConfigView::text_or(const std::string& key, const std::string& dflt) {
  return has(key) ? text(key) : dflt;
}

bool ConfigView::boolean_or(const std::string& key, bool dflt) {
  if (!has(key)) return dflt;
  const auto& v = raw(key);
  if (!v.is_boolean()) throw ConfigError("config: '" + path_ + key + "' must be true or false");
  return v.get<bool>();
}

std::vector<double> ConfigView::number_list(const std::string& key) {
  const auto& v = raw(key);
  if (!v.is_array()) throw ConfigError("config: '" + path_ + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config: '" + path_ + key + "' must be a list of numbers");
    out.push_back(e.get<double>());
  }
  if (out.empty()) throw ConfigError("config: '" + path_ + key + "' must be nonempty");
  return out;
}

std::vector<double> ConfigView::number_list_or(const std::string& key, std::vector<double> dflt) {
  return has(key) ? number_list(key) : std::move(dflt);
}

std::vector<std::vector<double>> ConfigView::matrix(const std::string& key) {
  const auto& v = raw(key);
  if (!v.is_array()) throw ConfigError("config: '" + path_ + key + "' must be a matrix");
  std::vector<std::vector<double>> out;
  for (const auto& row : v) {
    if (!row.is_array()) throw ConfigError("config: '" + path_ + key + "' must be a matrix");
    std::vector<double> r;
    for (const auto& e : row) {
      if (!e.is_number()) throw ConfigError("config: '" + path_ + key + "' must be a matrix");
      r.push_back(e.get<double>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::pair<double, double>> ConfigView::pair_list(const std::string& key) {
  const auto rows = matrix(key);
  std::vector<std::pair<double, double>> out;
  for (const auto& r : rows) {
    if (r.size() != 2)
      throw ConfigError("config: '" + path_ + key + "' must be a list of [x, y] pairs");
    out.emplace_back(r[0], r[1]);
  }
  return out;
}

std::map<std::string, double> ConfigView::all_numbers() {
  std::map<std::string, double> out;
  for (const auto& [k, v] : node_->values) {
    if (!v.is_number()) throw ConfigError("config: '" + path_ + k + "' must be a number");
    used_values_.insert(k);
    out[k] = v.get<double>();
  }
  return out;
}

void ConfigView::assert_consumed() const {
  for (const auto& [k, v] : node_->values)
    if (used_values_.count(k) == 0)
      throw ConfigError("config: unknown key '" + path_ + k + "'");
  for (const auto& [k, child] : node_->children)
    if (used_blocks_.count(k) == 0)
      throw ConfigError("config: unknown block '" + path_ + k + "'");
  for (const auto& [k, view] : used_blocks_) view->assert_consumed();
}

}  // namespace pdmpclt
