#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dic/error.hpp"

namespace dic {

/// Self-describing binary container for model checkpoints: a kind tag, a
/// string metadata map (architecture descriptor fields), and named double
/// arrays. Doubles round-trip bit-exactly (stored as little-endian IEEE 754).
struct Checkpoint {
  std::string kind;  // "codec" | "classifier" | "extractor"
  std::map<std::string, std::string> meta;
  struct Array {
    std::string name;
    std::vector<int> dims;
    std::vector<double> data;
  };
  std::vector<Array> arrays;

  const Array& array(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
  int meta_int(const std::string& key) const;
  double meta_double(const std::string& key) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dic
