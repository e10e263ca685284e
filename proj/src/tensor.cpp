#include "bdnet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace bdnet {

std::size_t shape_numel(const std::vector<std::uint32_t>& shape) {
  std::size_t n = 1;
  for (std::uint32_t d : shape) n *= d;
  return n;
}

void check_shape_valid(const std::vector<std::uint32_t>& shape) {
  if (shape.empty())
    fail(Status::invalid_argument, "tensor shape must have at least one dimension");
  for (std::uint32_t d : shape) {
    if (d == 0)
      fail(Status::invalid_argument, "tensor dimensions must be positive");
  }
}

Tensor::Tensor(std::vector<std::uint32_t> shape_in, std::vector<float> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  check_shape_valid(shape);
  if (shape_numel(shape) != data.size())
    fail(Status::invalid_argument,
         "tensor data length " + std::to_string(data.size()) +
             " does not match shape " + shape_to_string(shape));
}

Tensor Tensor::zeros(std::vector<std::uint32_t> shape_in) {
  check_shape_valid(shape_in);
  std::vector<float> d(shape_numel(shape_in), 0.0f);
  return Tensor(std::move(shape_in), std::move(d));
}

bool all_finite(const Tensor& t) {
  for (float v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string shape_to_string(const std::vector<std::uint32_t>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace bdnet
