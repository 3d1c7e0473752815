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

#ifndef OMLC_IMAGE_H_
#define OMLC_IMAGE_H_

#include <filesystem>

#include "omlc/tensor.h"

namespace omlc {

// RGB image with samples in [0, 1]. The constructor validates the range.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, double fill = 0.0);
  explicit ImageTensor(Tensor values);

  int height() const { return values_.height(); }
  int width() const { return values_.width(); }
  size_t num_pixels() const { return values_.plane_size(); }
  const Tensor& tensor() const { return values_; }

  double at(int c, int y, int x) const { return values_.at(c, y, x); }
  // Writes are clamped to [0, 1].
  void set(int c, int y, int x, double v);

  bool operator==(const ImageTensor&) const = default;

 private:
  Tensor values_;
};

struct PaddedImage {
  ImageTensor image;
  int original_height = 0;
  int original_width = 0;
};

// Edge-replicates to the smallest multiples of `factor` covering the input.
PaddedImage PadToMultiple(const ImageTensor& x, int factor);

ImageTensor Crop(const ImageTensor& x, int top, int left, int height,
                 int width);
Tensor CropTensor(const Tensor& x, int top, int left, int height, int width);
Tensor PadTensorEdge(const Tensor& x, int height, int width);

// 8-bit PNG or binary PPM (P6), chosen by file extension.
ImageTensor ReadImage(const std::filesystem::path& path);
void WriteImage(const ImageTensor& image, const std::filesystem::path& path);

}  // namespace omlc

#endif  // OMLC_IMAGE_H_
