#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pdmpclt {

// Configuration problems exit with code 2; everything else runtime-errors
// with code 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nested key-value tree. Grammar (one item per line, '#' comments):
//   block {            -- open a nested block
//   }                  -- close it
//   key = <value>      -- value is a JSON fragment: number, "string", [list]
// Unknown keys are hard errors at consumption time: every command walks its
// tree through ConfigView, and unread keys are reported by assert_consumed().
struct ConfigNode {
  std::map<std::string, nlohmann::json> values;
  std::map<std::string, ConfigNode> children;

  bool empty() const { return values.empty() && children.empty(); }
};

ConfigNode parse_config_text(const std::string& text);
ConfigNode parse_config_file(const std::string& path);

// Tracking accessor over a ConfigNode. Block accessors hand out stable
// references owned by the parent view, so consumption marks accumulate on a
// single instance per block.
class ConfigView {
 public:
  explicit ConfigView(const ConfigNode& node, std::string path = "");

  bool has(const std::string& key) const;
  bool has_block(const std::string& key) const;

  ConfigView& block(const std::string& key);      // required
  ConfigView* maybe_block(const std::string& key);  // nullptr when absent

  double number(const std::string& key);
  double number_or(const std::string& key, double dflt);
  std::int64_t integer(const std::string& key);
  std::int64_t integer_or(const std::string& key, std::int64_t dflt);
  std::string text(const std::string& key);
  std::string text_or(const std::string& key, const std::string& dflt);
  bool boolean_or(const std::string& key, bool dflt);
  std::vector<double> number_list(const std::string& key);
  std::vector<double> number_list_or(const std::string& key, std::vector<double> dflt);
  std::vector<std::vector<double>> matrix(const std::string& key);
  std::vector<std::pair<double, double>> pair_list(const std::string& key);

  // All scalar keys of this node as doubles (model overrides).
  std::map<std::string, double> all_numbers();

  // Throws ConfigError naming every key that was never read.
  void assert_consumed() const;

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& raw(const std::string& key);

  const ConfigNode* node_;
  std::string path_;
  std::set<std::string> used_values_;
  std::map<std::string, std::shared_ptr<ConfigView>> used_blocks_;
};

}  // namespace pdmpclt
