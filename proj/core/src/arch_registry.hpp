#pragma once

// Internal registry of the conv trunk/head layouts shared by classifier and
// extractor (de)serialization. Not installed.

#include <string>
#include <vector>

#include "dic/checkpoint.hpp"
#include "dic/nn.hpp"

namespace dic::detail {

struct TrunkSpec {
  nn::Sequential trunk;
  int feature_dim = 0;
};

/// Builds the conv trunk (convs + global average pool) for an architecture id
/// ("convnet_a" | "convnet_b"). ConfigError on unknown ids.
TrunkSpec build_trunk(const std::string& arch_id, dic::Rng& init);

/// The classification head paired with a trunk.
nn::Sequential build_head(int feature_dim, int num_classes, dic::Rng& init);

/// Copy checkpoint arrays into parameter tensors by name; FormatError on a
/// missing array or shape mismatch.
void load_params_from_checkpoint(std::vector<nn::ParamTensor*> params,
                                 const Checkpoint& ckpt);

}  // namespace dic::detail
