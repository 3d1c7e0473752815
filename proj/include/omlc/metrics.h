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

// Image quality metrics and rate-distortion reports.

#ifndef OMLC_METRICS_H_
#define OMLC_METRICS_H_

#include <filesystem>
#include <string>
#include <vector>

#include "omlc/image.h"
#include "omlc/tensor.h"

namespace omlc {

inline constexpr double kPsnrCapDb = 100.0;

// -10 log10(MSE) for samples in [0, 1], capped at kPsnrCapDb.
double Psnr(const Tensor& x, const Tensor& x_hat);
double Psnr(const ImageTensor& x, const ImageTensor& x_hat);

// Number of MS-SSIM scales that fit: scale s (1-based) needs
// min(height, width) >= 11 * 2^(s-1). At most 5, at least 1.
int MsssimScales(int height, int width);

// Multi-scale SSIM averaged over channels. Gaussian window 11, sigma 1.5,
// K1 = 0.01, K2 = 0.03, 2x2 average pooling between scales. Images with
// min dimension below 176 use the finest scales that fit, with the weights
// renormalized to sum to one. Requires min(height, width) >= 16.
double Msssim(const Tensor& x, const Tensor& y);
double Msssim(const ImageTensor& x, const ImageTensor& y);
// As Msssim; also writes d(MS-SSIM)/d(y) into `d_y`.
double MsssimWithGradient(const Tensor& x, const Tensor& y, Tensor* d_y);

// -10 log10(1 - msssim).
double MsssimDb(double msssim);

enum class Metric { kMse, kMsssim };

Metric ParseMetric(const std::string& name);  // "psnr", "mse" or "msssim"
const char* MetricName(Metric metric);

// Lower is better: MSE, or 1 - MS-SSIM.
double Distortion(const Tensor& x, const Tensor& x_hat, Metric metric);
// Also writes d(distortion)/d(x_hat).
double DistortionWithGradient(const Tensor& x, const Tensor& x_hat,
                              Metric metric, Tensor* d_x_hat);

struct RdPoint {
  double lambda = 0.0;
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
  double msssim_db = 0.0;
  int oml_iters = 0;
  double encode_time = 0.0;
};

// CSV with header lambda,bpp,psnr,msssim,msssim_db,oml_iters,encode_time,
// rows sorted by ascending bpp, 6 significant digits.
void WriteRdReport(std::vector<RdPoint> points,
                   const std::filesystem::path& path);
std::vector<RdPoint> ReadRdReport(const std::filesystem::path& path);

}  // namespace omlc

#endif  // OMLC_METRICS_H_
