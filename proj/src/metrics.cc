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

#include "omlc/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "omlc/codec.h"
#include "omlc/error.h"

namespace omlc {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001,
                                                 0.2363, 0.1333};

const std::array<double, kWindow>& GaussianTaps() {
  static const std::array<double, kWindow> taps = [] {
    std::array<double, kWindow> t{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - kWindow / 2;
      t[i] = std::exp(-d * d / (2 * kSigma * kSigma));
      sum += t[i];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  Plane() = default;
  Plane(int height, int width, double fill = 0.0)
      : h(height), w(width), v(static_cast<size_t>(height) * width, fill) {}
  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
};

Plane FromTensor(const Tensor& t, int c) {
  Plane p(t.height(), t.width());
  const auto src = t.plane(c);
  std::copy(src.begin(), src.end(), p.v.begin());
  return p;
}

// Separable Gaussian, "valid" extent.
Plane Filter(const Plane& in) {
  const auto& g = GaussianTaps();
  Plane tmp(in.h, in.w - kWindow + 1);
  for (int y = 0; y < tmp.h; ++y) {
    for (int x = 0; x < tmp.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * in.at(y, x + k);
      tmp.at(y, x) = s;
    }
  }
  Plane out(in.h - kWindow + 1, tmp.w);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * tmp.at(y + k, x);
      out.at(y, x) = s;
    }
  }
  return out;
}

// Adjoint of Filter back to an (h, w) plane.
Plane FilterAdjoint(const Plane& d, int h, int w) {
  const auto& g = GaussianTaps();
  Plane tmp(h, d.w);
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      for (int k = 0; k < kWindow; ++k) tmp.at(y + k, x) += g[k] * d.at(y, x);
    }
  }
  Plane out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      for (int k = 0; k < kWindow; ++k) {
        out.at(y, x + k) += g[k] * tmp.at(y, x);
      }
    }
  }
  return out;
}

Plane Product(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Plane AvgPool(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) +
                             in.at(2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

// Adds the adjoint of AvgPool(d) into `acc`.
void AvgPoolAdjointAdd(const Plane& d, Plane* acc) {
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      const double g = 0.25 * d.at(y, x);
      acc->at(2 * y, 2 * x) += g;
      acc->at(2 * y, 2 * x + 1) += g;
      acc->at(2 * y + 1, 2 * x) += g;
      acc->at(2 * y + 1, 2 * x + 1) += g;
    }
  }
}

// Mean contrast-structure term (or full SSIM when `with_luminance`) of one
// scale. With a non-null `d_y`, writes d(value)/d(y).
double ScaleTerm(const Plane& x, const Plane& y, bool with_luminance,
                 Plane* d_y) {
  const Plane mu_x = Filter(x);
  const Plane mu_y = Filter(y);
  const Plane e_xx = Filter(Product(x, x));
  const Plane e_yy = Filter(Product(y, y));
  const Plane e_xy = Filter(Product(x, y));
  const size_t n = mu_x.v.size();
  Plane a, b, c;
  if (d_y != nullptr) {
    a = Plane(mu_x.h, mu_x.w);
    b = Plane(mu_x.h, mu_x.w);
    c = Plane(mu_x.h, mu_x.w);
  }
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double mx = mu_x.v[i];
    const double my = mu_y.v[i];
    const double sxx = e_xx.v[i] - mx * mx;
    const double syy = e_yy.v[i] - my * my;
    const double sxy = e_xy.v[i] - mx * my;
    const double num = 2 * sxy + kC2;
    const double den = sxx + syy + kC2;
    const double cs = num / den;
    double lum = 1.0;
    double d_lum_d_my = 0.0;
    if (with_luminance) {
      const double p = 2 * mx * my + kC1;
      const double q = mx * mx + my * my + kC1;
      lum = p / q;
      d_lum_d_my = (2 * mx * q - p * 2 * my) / (q * q);
    }
    total += lum * cs;
    if (d_y != nullptr) {
      const double f_sxy = lum * 2.0 / den;
      const double f_syy = -lum * num / (den * den);
      const double f_my = cs * d_lum_d_my;
      a.v[i] = (f_my - mx * f_sxy - 2 * my * f_syy) / n;
      b.v[i] = f_syy / n;
      c.v[i] = f_sxy / n;
    }
  }
  if (d_y != nullptr) {
    const Plane ga = FilterAdjoint(a, y.h, y.w);
    const Plane gb = FilterAdjoint(b, y.h, y.w);
    const Plane gc = FilterAdjoint(c, y.h, y.w);
    *d_y = Plane(y.h, y.w);
    for (size_t i = 0; i < y.v.size(); ++i) {
      d_y->v[i] = ga.v[i] + 2 * y.v[i] * gb.v[i] + x.v[i] * gc.v[i];
    }
  }
  return total / n;
}

// MS-SSIM of one channel; `d_y` (optional) receives the gradient.
double ChannelMsssim(const Plane& x0, const Plane& y0, int scales,
                     Plane* d_y) {
  std::vector<double> weights(kScaleWeights.begin(),
                              kScaleWeights.begin() + scales);
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  std::vector<Plane> xs{x0}, ys{y0};
  for (int s = 1; s < scales; ++s) {
    xs.push_back(AvgPool(xs.back()));
    ys.push_back(AvgPool(ys.back()));
  }
  std::vector<double> values(scales);
  std::vector<Plane> grads(scales);
  for (int s = 0; s < scales; ++s) {
    const double raw = ScaleTerm(xs[s], ys[s], s == scales - 1,
                                 d_y != nullptr ? &grads[s] : nullptr);
    values[s] = std::max(raw, 0.0);
  }
  double m = 1.0;
  for (int s = 0; s < scales; ++s) m *= std::pow(values[s], weights[s]);
  if (d_y == nullptr) return m;

  // d m / d value_s, then back through the pyramid.
  Plane acc(ys[scales - 1].h, ys[scales - 1].w);
  for (int s = scales - 1; s >= 0; --s) {
    double coef = 0.0;
    if (values[s] > 0.0) {
      coef = weights[s] * std::pow(values[s], weights[s] - 1.0);
      for (int t = 0; t < scales; ++t) {
        if (t != s) coef *= std::pow(values[t], weights[t]);
      }
    }
    for (size_t i = 0; i < acc.v.size(); ++i) {
      acc.v[i] += coef * grads[s].v[i];
    }
    if (s > 0) {
      Plane up(ys[s - 1].h, ys[s - 1].w);
      AvgPoolAdjointAdd(acc, &up);
      acc = std::move(up);
    }
  }
  *d_y = std::move(acc);
  return m;
}

double MsssimImpl(const Tensor& x, const Tensor& y, Tensor* d_y) {
  RequireSameShape(x, y, "msssim");
  OMLC_CHECK_ARG(std::min(x.height(), x.width()) >= 16,
                 "msssim needs min(height, width) >= 16");
  const int scales = MsssimScales(x.height(), x.width());
  if (d_y != nullptr) *d_y = Tensor(y.shape());
  double sum = 0.0;
  for (int c = 0; c < x.channels(); ++c) {
    Plane g;
    sum += ChannelMsssim(FromTensor(x, c), FromTensor(y, c), scales,
                         d_y != nullptr ? &g : nullptr);
    if (d_y != nullptr) {
      auto dst = d_y->plane(c);
      for (size_t i = 0; i < g.v.size(); ++i) {
        dst[i] = g.v[i] / x.channels();
      }
    }
  }
  return sum / x.channels();
}

std::string FormatG6(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

double Psnr(const Tensor& x, const Tensor& x_hat) {
  const double mse = MeanSquaredError(x, x_hat);
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, -10.0 * std::log10(mse));
}

double Psnr(const ImageTensor& x, const ImageTensor& x_hat) {
  return Psnr(x.tensor(), x_hat.tensor());
}

int MsssimScales(int height, int width) {
  const int m = std::min(height, width);
  int scales = 1;
  while (scales < static_cast<int>(kScaleWeights.size()) &&
         m >= kWindow * (1 << scales)) {
    ++scales;
  }
  return scales;
}

double Msssim(const Tensor& x, const Tensor& y) {
  return MsssimImpl(x, y, nullptr);
}

double Msssim(const ImageTensor& x, const ImageTensor& y) {
  return Msssim(x.tensor(), y.tensor());
}

double MsssimWithGradient(const Tensor& x, const Tensor& y, Tensor* d_y) {
  OMLC_CHECK_ARG(d_y != nullptr, "gradient output required");
  return MsssimImpl(x, y, d_y);
}

double MsssimDb(double msssim) { return -10.0 * std::log10(1.0 - msssim); }

Metric ParseMetric(const std::string& name) {
  if (name == "psnr" || name == "mse") return Metric::kMse;
  if (name == "msssim") return Metric::kMsssim;
  throw Error(ErrorCode::kInvalidArgument, "unknown metric: " + name);
}

const char* MetricName(Metric metric) {
  return metric == Metric::kMse ? "mse" : "msssim";
}

double Distortion(const Tensor& x, const Tensor& x_hat, Metric metric) {
  if (metric == Metric::kMse) return MeanSquaredError(x, x_hat);
  return 1.0 - Msssim(x, x_hat);
}

double DistortionWithGradient(const Tensor& x, const Tensor& x_hat,
                              Metric metric, Tensor* d_x_hat) {
  OMLC_CHECK_ARG(d_x_hat != nullptr, "gradient output required");
  if (metric == Metric::kMse) {
    const double mse = MeanSquaredError(x, x_hat);
    *d_x_hat = Tensor(x.shape());
    const double scale = 2.0 / static_cast<double>(x.size());
    auto d = d_x_hat->data();
    const auto a = x.data();
    const auto b = x_hat.data();
    for (size_t i = 0; i < d.size(); ++i) d[i] = scale * (b[i] - a[i]);
    return mse;
  }
  const double m = MsssimWithGradient(x, x_hat, d_x_hat);
  for (double& v : d_x_hat->data()) v = -v;
  return 1.0 - m;
}

void WriteRdReport(std::vector<RdPoint> points,
                   const std::filesystem::path& path) {
  OMLC_CHECK_ARG(!points.empty(), "rd report needs at least one point");
  std::stable_sort(points.begin(), points.end(),
                   [](const RdPoint& a, const RdPoint& b) {
                     return a.bpp < b.bpp;
                   });
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "lambda,bpp,psnr,msssim,msssim_db,oml_iters,encode_time\n";
  for (const RdPoint& p : points) {
    out << FormatG6(p.lambda) << ',' << FormatG6(p.bpp) << ','
        << FormatG6(p.psnr) << ',' << FormatG6(p.msssim) << ','
        << FormatG6(p.msssim_db) << ',' << p.oml_iters << ','
        << FormatG6(p.encode_time) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<RdPoint> ReadRdReport(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) ||
      line != "lambda,bpp,psnr,msssim,msssim_db,oml_iters,encode_time") {
    throw Error(ErrorCode::kFormat, path.string() + ": bad rd report header");
  }
  std::vector<RdPoint> points;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[7];
    for (std::string& s : f) {
      if (!std::getline(ss, s, ',')) {
        throw Error(ErrorCode::kFormat, "short rd report row: " + line);
      }
    }
    try {
      points.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2]),
                        std::stod(f[3]), std::stod(f[4]), std::stoi(f[5]),
                        std::stod(f[6])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kFormat, "bad rd report row: " + line);
    }
  }
  return points;
}

}  // namespace omlc
