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

#include "omlc/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "omlc/error.h"

namespace omlc {

std::string Shape::ToString() const {
  std::ostringstream os;
  os << channels << "x" << height << "x" << width;
  return os.str();
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + ": shape " + a.shape().ToString() +
                    " vs " + b.shape().ToString());
  }
}

ImageTensor::ImageTensor(int height, int width, double fill)
    : ImageTensor(Tensor(3, height, width, fill)) {}

ImageTensor::ImageTensor(Tensor values) : values_(std::move(values)) {
  if (values_.channels() != 3 || values_.height() < 1 ||
      values_.width() < 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "image must be 3xHxW with H,W >= 1, got " +
                    values_.shape().ToString());
  }
  for (double v : values_.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "image sample outside [0,1]: " + std::to_string(v));
    }
  }
}

void ImageTensor::set(int c, int y, int x, double v) {
  values_.at(c, y, x) = std::clamp(v, 0.0, 1.0);
}

Tensor PadTensorEdge(const Tensor& x, int height, int width) {
  Tensor out(x.channels(), height, width);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const int sy = std::min(y, x.height() - 1);
      for (int xx = 0; xx < width; ++xx) {
        out.at(c, y, xx) = x.at(c, sy, std::min(xx, x.width() - 1));
      }
    }
  }
  return out;
}

PaddedImage PadToMultiple(const ImageTensor& x, int factor) {
  OMLC_CHECK_ARG(factor >= 1, "padding factor must be >= 1");
  const int h = (x.height() + factor - 1) / factor * factor;
  const int w = (x.width() + factor - 1) / factor * factor;
  return PaddedImage{ImageTensor(PadTensorEdge(x.tensor(), h, w)),
                     x.height(), x.width()};
}

Tensor CropTensor(const Tensor& x, int top, int left, int height, int width) {
  OMLC_CHECK_ARG(top >= 0 && left >= 0 && height >= 1 && width >= 1 &&
                     top + height <= x.height() && left + width <= x.width(),
                 "crop window outside tensor");
  Tensor out(x.channels(), height, width);
  for (int c = 0; c < x.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const auto src = x.plane(c).subspan(
          static_cast<size_t>(top + y) * x.width() + left, width);
      std::copy(src.begin(), src.end(), &out.at(c, y, 0));
    }
  }
  return out;
}

ImageTensor Crop(const ImageTensor& x, int top, int left, int height,
                 int width) {
  return ImageTensor(CropTensor(x.tensor(), top, left, height, width));
}

namespace {

bool HasExtension(const std::filesystem::path& path, const char* ext) {
  std::string e = path.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return e == ext;
}

ImageTensor FromInterleaved(const std::vector<uint8_t>& rgb, int height,
                            int width) {
  Tensor t(3, height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.at(c, y, x) = rgb[(static_cast<size_t>(y) * width + x) * 3 + c] /
                        255.0;
      }
    }
  }
  return ImageTensor(std::move(t));
}

std::vector<uint8_t> ToInterleaved(const ImageTensor& image) {
  std::vector<uint8_t> rgb(image.num_pixels() * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        rgb[(static_cast<size_t>(y) * image.width() + x) * 3 + c] =
            static_cast<uint8_t>(std::lround(image.at(c, y, x) * 255.0));
      }
    }
  }
  return rgb;
}

// Skips whitespace and '#' comments in a PPM header.
int ReadPpmInt(std::istream& in) {
  int ch = in.peek();
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      in.get();
    }
    ch = in.peek();
  }
  int value = -1;
  in >> value;
  if (!in) throw Error(ErrorCode::kFormat, "malformed PPM header");
  return value;
}

ImageTensor ReadPpm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  char magic[2] = {};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6') {
    throw Error(ErrorCode::kFormat, path.string() + ": not a binary PPM");
  }
  const int width = ReadPpmInt(in);
  const int height = ReadPpmInt(in);
  const int maxval = ReadPpmInt(in);
  if (width < 1 || height < 1 || maxval != 255) {
    throw Error(ErrorCode::kFormat, path.string() + ": unsupported PPM");
  }
  in.get();
  std::vector<uint8_t> rgb(static_cast<size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(rgb.data()),
          static_cast<std::streamsize>(rgb.size()));
  if (!in) throw Error(ErrorCode::kTruncated, path.string() + ": short PPM");
  return FromInterleaved(rgb, height, width);
}

void WritePpm(const ImageTensor& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  const std::vector<uint8_t> rgb = ToInterleaved(image);
  out.write(reinterpret_cast<const char*>(rgb.data()),
            static_cast<std::streamsize>(rgb.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

ImageTensor ReadPng(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error(ErrorCode::kIo, path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> rgb(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::kFormat, path.string() + ": " + msg);
  }
  return FromInterleaved(rgb, static_cast<int>(png.height),
                         static_cast<int>(png.width));
}

void WritePng(const ImageTensor& image, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  const std::vector<uint8_t> rgb = ToInterleaved(image);
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, rgb.data(), 0,
                               nullptr)) {
    throw Error(ErrorCode::kIo, path.string() + ": " + png.message);
  }
}

}  // namespace

ImageTensor ReadImage(const std::filesystem::path& path) {
  if (HasExtension(path, ".ppm")) return ReadPpm(path);
  if (HasExtension(path, ".png")) return ReadPng(path);
  throw Error(ErrorCode::kInvalidArgument,
              "unsupported image extension: " + path.string());
}

void WriteImage(const ImageTensor& image, const std::filesystem::path& path) {
  if (HasExtension(path, ".ppm")) return WritePpm(image, path);
  if (HasExtension(path, ".png")) return WritePng(image, path);
  throw Error(ErrorCode::kInvalidArgument,
              "unsupported image extension: " + path.string());
}

}  // namespace omlc
