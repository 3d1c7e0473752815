// Copyright 2026 The OMLC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMLC_TENSOR_H_
#define OMLC_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace omlc {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;

  size_t size() const {
    return static_cast<size_t>(channels) * height * width;
  }
  bool operator==(const Shape&) const = default;
  std::string ToString() const;
};

// Dense channel-major (C, H, W) array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(shape), data_(shape.size(), fill) {}
  Tensor(int channels, int height, int width, double fill = 0.0)
      : Tensor(Shape{channels, height, width}, fill) {}

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.channels; }
  int height() const { return shape_.height; }
  int width() const { return shape_.width; }
  size_t size() const { return data_.size(); }
  size_t plane_size() const {
    return static_cast<size_t>(shape_.height) * shape_.width;
  }

  double& at(int c, int y, int x) {
    return data_[(static_cast<size_t>(c) * shape_.height + y) * shape_.width +
                 x];
  }
  double at(int c, int y, int x) const {
    return data_[(static_cast<size_t>(c) * shape_.height + y) * shape_.width +
                 x];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> plane(int c) {
    return std::span<double>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(c * plane_size(),
                                                  plane_size());
  }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws kShapeMismatch when the shapes differ.
void RequireSameShape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace omlc

#endif  // OMLC_TENSOR_H_
