#include "sd2/tensor_json.hpp"

#include "sd2/errors.hpp"

namespace sd2 {

namespace {

nlohmann::json nest(const Tensor& t, std::size_t axis, std::size_t& pos) {
  if (axis == t.shape().size()) return t[pos++];
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < t.shape()[axis]; ++i) a.push_back(nest(t, axis + 1, pos));
  return a;
}

void flatten(const nlohmann::json& j, const Shape& shape, std::size_t axis, std::vector<double>& out,
             const std::string& where) {
  if (axis == shape.size()) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    out.push_back(j.get<double>());
    return;
  }
  if (!j.is_array() || static_cast<int>(j.size()) != shape[axis])
    throw ValidationError(where + ": expected shape " + shape_to_string(shape));
  for (const auto& e : j) flatten(e, shape, axis + 1, out, where);
}

}  // namespace

nlohmann::json tensor_to_json(const Tensor& t) {
  std::size_t pos = 0;
  return nest(t, 0, pos);
}

Tensor tensor_from_json(const nlohmann::json& j, const Shape& shape, const std::string& where) {
  std::vector<double> data;
  const bool flat = j.is_array() && shape.size() > 1 && j.size() == shape_size(shape) &&
                    (j.empty() || j.front().is_number());
  if (flat) {
    for (const auto& e : j) {
      if (!e.is_number()) throw ValidationError(where + ": expected a number");
      data.push_back(e.get<double>());
    }
  } else {
    flatten(j, shape, 0, data, where);
  }
  return Tensor(shape, std::move(data));
}

}  // namespace sd2
