#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dic/eval.hpp"
#include "dic/trainer.hpp"

namespace dic {

/// Key=value configuration with a fixed schema. Files hold one `key = value`
/// per line ('#' comments); command-line overrides use the same key=value
/// syntax and take precedence. Unknown keys are ConfigErrors naming the key.
class Config {
 public:
  /// Schema defaults only.
  static Config defaults();

  /// Defaults overlaid with the file's entries.
  static Config from_file(const std::filesystem::path& path);

  /// Apply one "key=value" override (CLI -D flags).
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  /// The effective configuration, one key per line, sorted; echoed into
  /// output directories for provenance.
  std::string render() const;

  /// Schema documentation (every key, default, help text, paper value where
  /// one exists); embedded in --help.
  static std::string help_text();

  // Typed views assembled from the raw keys.
  TrainConfig train_config() const;
  ProxyTaskConfig proxy_config() const;
  EvalOptions eval_options() const;
  std::vector<double> sweep_lambdas() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace dic
