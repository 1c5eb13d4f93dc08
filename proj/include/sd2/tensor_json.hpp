#pragma once

#include "json.hpp"
#include "sd2/tensor.hpp"

namespace sd2 {

/// Nested arrays in row-major order (a scalar is a bare number).
nlohmann::json tensor_to_json(const Tensor& t);

/// Accepts nested arrays of exactly `shape`, or a flat row-major array.
Tensor tensor_from_json(const nlohmann::json& j, const Shape& shape, const std::string& where);

}  // namespace sd2
