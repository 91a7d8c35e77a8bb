#pragma once

#include <memory>
#include <string>
#include <vector>

#include "yatnn/model.hpp"

namespace yatnn {

// Single-file checkpoint: 8-byte magic, little-endian u64 manifest length,
// JSON manifest (model config, head, tensor table), then the tensors as
// little-endian 64-bit floats in declaration order.
void save_checkpoint(Model& model, const std::string& path);

std::unique_ptr<Model> load_checkpoint(const std::string& path);

std::vector<std::string> checkpoint_tensor_names(const std::string& path);

// Extracts one named kernel (e.g. "layer1.kernel", or the shorthand
// "layer1") as a matrix, without rebuilding the model.
Matrix checkpoint_layer_kernel(const std::string& path, const std::string& layer);

}  // namespace yatnn
