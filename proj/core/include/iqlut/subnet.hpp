#pragma once

#include <span>
#include <vector>

#include "iqlut/model.hpp"

namespace iqlut {

/// Evaluates the per-pixel subnetwork: dense -> ReLU -> dense -> ReLU -> dense.
/// No clamping. Throws NumericalError for non-finite x.
std::vector<double> subnet_forward(const SubnetParams& params, double x);

/// Allocation-free variant. `out` has output_width() entries. When the
/// pre-activation buffers are given (hidden() entries each) they receive the
/// values needed by subnet_backward. x is assumed finite.
void subnet_forward(const SubnetParams& params, double x, std::span<double> out,
                    std::span<double> pre1 = {}, std::span<double> pre2 = {});

/// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(out) and the
/// pre-activations recorded by subnet_forward. Returns d(loss)/dx.
double subnet_backward(const SubnetParams& params, SubnetParams& grad, double x,
                       std::span<const double> pre1, std::span<const double> pre2,
                       std::span<const double> d_out);

}  // namespace iqlut
