#include "cmmp/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cmmp/errors.hpp"

namespace cmmp {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

namespace {

void check_extents(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor: empty shape");
  for (auto e : s) {
    if (e == 0) throw ShapeError("tensor: zero extent in " + to_string(s));
  }
}

}  // namespace

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  check_extents(shape);
  data.assign(element_count(shape), fill);
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  check_extents(shape);
  if (data.size() != element_count(shape)) {
    throw ShapeError("tensor: " + std::to_string(data.size()) +
                     " values do not fill shape " + to_string(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("tensor: ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

double Tensor::item() const {
  if (data.size() != 1) throw ShapeError("tensor: item() on shape " + to_string(shape));
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace cmmp
