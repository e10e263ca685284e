#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bdnet/common.hpp"

namespace bdnet {

// Dense row-major float tensor. Shape dimensions are strictly positive;
// data length always equals the shape product.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> shape_in, std::vector<float> data_in);

  static Tensor zeros(std::vector<std::uint32_t> shape_in);

  std::size_t numel() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

std::size_t shape_numel(const std::vector<std::uint32_t>& shape);
void check_shape_valid(const std::vector<std::uint32_t>& shape);
bool all_finite(const Tensor& t);
std::string shape_to_string(const std::vector<std::uint32_t>& shape);
bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace bdnet
