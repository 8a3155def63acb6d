#include "iqlut/subnet.hpp"

#include <cmath>

#include "iqlut/error.hpp"

namespace iqlut {
namespace {

constexpr int kMaxHidden = 512;

}  // namespace

void subnet_forward(const SubnetParams& params, double x, std::span<double> out,
                    std::span<double> pre1, std::span<double> pre2) {
  const int hidden = params.hidden();
  double h1[kMaxHidden];
  double h2[kMaxHidden];

  const DenseLayer& s1 = params.stages[0];
  for (int i = 0; i < hidden; ++i) {
    const double z = s1.weight[i] * x + s1.bias[i];
    if (!pre1.empty()) pre1[i] = z;
    h1[i] = z > 0.0 ? z : 0.0;
  }
  const DenseLayer& s2 = params.stages[1];
  for (int i = 0; i < hidden; ++i) {
    const double* w = s2.weight.data() + static_cast<std::size_t>(i) * hidden;
    double z = s2.bias[i];
    for (int j = 0; j < hidden; ++j) z += w[j] * h1[j];
    if (!pre2.empty()) pre2[i] = z;
    h2[i] = z > 0.0 ? z : 0.0;
  }
  const DenseLayer& s3 = params.stages[2];
  const int width = s3.out_features;
  for (int o = 0; o < width; ++o) {
    const double* w = s3.weight.data() + static_cast<std::size_t>(o) * hidden;
    double z = s3.bias[o];
    for (int j = 0; j < hidden; ++j) z += w[j] * h2[j];
    out[o] = z;
  }
}

std::vector<double> subnet_forward(const SubnetParams& params, double x) {
  if (!std::isfinite(x)) throw NumericalError("subnet input is not finite");
  if (params.hidden() > kMaxHidden) throw ConfigError("subnet hidden width exceeds 512");
  std::vector<double> out(params.output_width());
  subnet_forward(params, x, out);
  return out;
}

double subnet_backward(const SubnetParams& params, SubnetParams& grad, double x,
                       std::span<const double> pre1, std::span<const double> pre2,
                       std::span<const double> d_out) {
  const int hidden = params.hidden();
  const int width = params.output_width();
  double h1[kMaxHidden];
  double h2[kMaxHidden];
  double dz2[kMaxHidden];
  double dz1[kMaxHidden];
  for (int i = 0; i < hidden; ++i) {
    h1[i] = pre1[i] > 0.0 ? pre1[i] : 0.0;
    h2[i] = pre2[i] > 0.0 ? pre2[i] : 0.0;
    dz2[i] = 0.0;
  }

  const DenseLayer& s3 = params.stages[2];
  DenseLayer& g3 = grad.stages[2];
  for (int o = 0; o < width; ++o) {
    const double g = d_out[o];
    if (g == 0.0) continue;
    g3.bias[o] += g;
    double* gw = g3.weight.data() + static_cast<std::size_t>(o) * hidden;
    const double* w = s3.weight.data() + static_cast<std::size_t>(o) * hidden;
    for (int j = 0; j < hidden; ++j) {
      gw[j] += g * h2[j];
      dz2[j] += g * w[j];
    }
  }
  for (int i = 0; i < hidden; ++i) {
    if (pre2[i] <= 0.0) dz2[i] = 0.0;
    dz1[i] = 0.0;
  }

  const DenseLayer& s2 = params.stages[1];
  DenseLayer& g2 = grad.stages[1];
  for (int i = 0; i < hidden; ++i) {
    const double g = dz2[i];
    if (g == 0.0) continue;
    g2.bias[i] += g;
    double* gw = g2.weight.data() + static_cast<std::size_t>(i) * hidden;
    const double* w = s2.weight.data() + static_cast<std::size_t>(i) * hidden;
    for (int j = 0; j < hidden; ++j) {
      gw[j] += g * h1[j];
      dz1[j] += g * w[j];
    }
  }

  const DenseLayer& s1 = params.stages[0];
  DenseLayer& g1 = grad.stages[0];
  double dx = 0.0;
  for (int i = 0; i < hidden; ++i) {
    if (pre1[i] <= 0.0) continue;
    g1.weight[i] += dz1[i] * x;
    g1.bias[i] += dz1[i];
    dx += dz1[i] * s1.weight[i];
  }
  return dx;
}

}  // namespace iqlut
