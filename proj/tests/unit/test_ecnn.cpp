#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "iqlut/ecnn.hpp"
#include "iqlut/error.hpp"
#include "iqlut/resize.hpp"
#include "iqlut/subnet.hpp"
#include "synthetic.hpp"

namespace iqlut {
namespace {

SubnetParams random_subnet(std::mt19937_64& rng, int hidden, int width, double scale = 0.5) {
  SubnetParams p = make_subnet(hidden, width);
  std::normal_distribution<double> n(0.0, scale);
  for (DenseLayer& l : p.stages) {
    for (double& w : l.weight) w = n(rng);
    for (double& b : l.bias) b = n(rng);
  }
  return p;
}

// Straight-line evaluation of dense -> relu -> dense -> relu -> dense.
std::vector<double> oracle_forward(const SubnetParams& p, double x) {
  std::vector<double> h{x};
  for (int s = 0; s < 3; ++s) {
    const DenseLayer& l = p.stages[s];
    std::vector<double> o(l.out_features);
    for (int r = 0; r < l.out_features; ++r) {
      double acc = l.bias[r];
      for (int c = 0; c < l.in_features; ++c) acc += l.weight[r * l.in_features + c] * h[c];
      o[r] = s < 2 ? std::max(acc, 0.0) : acc;
    }
    h = o;
  }
  return h;
}

TEST(SubnetForward, ZeroWeightsAndBiases) {
  const SubnetParams p = make_subnet(4, 12);
  for (double x : {-3.0, 0.0, 0.7}) {
    for (double v : subnet_forward(p, x)) EXPECT_EQ(v, 0.0);
  }
}

TEST(SubnetForward, StageThreeBiasPassesThrough) {
  SubnetParams p = make_subnet(3, 5);
  p.stages[2].bias = {0.1, -0.2, 0.3, 4.0, -5.0};
  EXPECT_EQ(subnet_forward(p, 0.42), p.stages[2].bias);
}

TEST(SubnetForward, MatchesHandRolledOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const SubnetParams p = random_subnet(rng, 1 + t % 5, 1 + t % 7, 0.3);
    const auto got = subnet_forward(p, 0.3);
    const auto want = oracle_forward(p, 0.3);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
  }
}

TEST(SubnetForward, NonFiniteInputRejected) {
  const SubnetParams p = make_subnet(2, 2);
  EXPECT_THROW(subnet_forward(p, std::numeric_limits<double>::quiet_NaN()), NumericalError);
  EXPECT_THROW(subnet_forward(p, std::numeric_limits<double>::infinity()), NumericalError);
}

// Literal Eq. 2: F[c, h, w] = sum_{i, j, c_in} X_{c_in}(h + i, w + j)[c, i, j].
FeatureTensor oracle_conv(const FeatureTensor& in, const std::vector<SubnetParams>& p, KernelShape k, int cout) {
  FeatureTensor out(cout, in.height(), in.width());
  for (int c = 0; c < cout; ++c)
    for (int h = 0; h < in.height(); ++h)
      for (int w = 0; w < in.width(); ++w)
        for (int cin = 0; cin < in.channels(); ++cin)
          for (int i = 0; i < k.height; ++i)
            for (int j = 0; j < k.width; ++j) {
              if (h + i >= in.height() || w + j >= in.width()) continue;
              const auto v = oracle_forward(p[cin], in.at(cin, h + i, w + j));
              out.at(c, h, w) += v[c * k.height * k.width + i * k.width + j];
            }
  return out;
}

FeatureTensor random_tensor(std::mt19937_64& rng, int c, int h, int w) {
  std::uniform_real_distribution<double> u(-1, 1);
  FeatureTensor t(c, h, w);
  for (double& v : t.values()) v = u(rng);
  return t;
}

TEST(ExpandedConv, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const KernelShape k{1 + t % 3, 1 + (t / 3) % 3};
    const int cin = 1 + static_cast<int>(rng() % 4);
    const int cout = 1 + static_cast<int>(rng() % 4);
    std::vector<SubnetParams> p;
    for (int c = 0; c < cin; ++c) p.push_back(random_subnet(rng, 3, cout * k.taps()));
    const FeatureTensor in = random_tensor(rng, cin, 3 + t % 4, 2 + t % 5);
    const FeatureTensor got = expanded_conv(in, SubnetFunctions(p), k, cout);
    const FeatureTensor want = oracle_conv(in, p, k, cout);
    ASSERT_TRUE(got.same_shape(want));
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_LE(std::abs(got.values()[i] - want.values()[i]), 1e-6 * std::max(1.0, std::abs(want.values()[i])));
    }
  }
}

TEST(ExpandedConv, DegenerateWindowIsTheSubnet) {
  std::mt19937_64 rng(3);
  const std::vector<SubnetParams> p{random_subnet(rng, 4, 3)};
  FeatureTensor in(1, 1, 1);
  in.at(0, 0, 0) = 0.25;
  const FeatureTensor out = expanded_conv(in, SubnetFunctions(p), KernelShape{1, 1}, 3);
  const auto v = subnet_forward(p[0], 0.25);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(c, 0, 0), v[c]);
}

TEST(ExpandedConv, ConstantSubnetOnConstantInput) {
  // Subnet emits the constant vector v; an interior pixel of a 3x3 map
  // receives k_h * k_w * C_in per-tap contributions.
  const KernelShape k{2, 2};
  const int cin = 2, cout = 1;
  std::vector<SubnetParams> p(cin, make_subnet(2, cout * k.taps()));
  for (auto& s : p) s.stages[2].bias = {1.0, 2.0, 3.0, 4.0};
  const FeatureTensor in(cin, 3, 3, 0.5);
  const FeatureTensor out = expanded_conv(in, SubnetFunctions(p), k, cout);
  EXPECT_EQ(out.at(0, 0, 0), cin * (1.0 + 2.0 + 3.0 + 4.0));
  EXPECT_EQ(out.at(0, 2, 2), cin * 1.0);  // only tap (0, 0) stays inside
  const FeatureTensor want = oracle_conv(in, p, k, cout);
  EXPECT_EQ(out, want);
}

TEST(ExpandedConv, ZeroInputZeroBiasGivesZero) {
  std::mt19937_64 rng(4);
  std::vector<SubnetParams> p;
  for (int c = 0; c < 3; ++c) {
    p.push_back(random_subnet(rng, 4, 2 * 4));
    for (auto& l : p.back().stages) std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  const FeatureTensor out = expanded_conv(FeatureTensor(3, 4, 5), SubnetFunctions(p), KernelShape{2, 2}, 2);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(ExpandedConv, ChannelMismatchRejected) {
  const std::vector<SubnetParams> p(2, make_subnet(2, 4));
  EXPECT_THROW(expanded_conv(FeatureTensor(3, 2, 2), SubnetFunctions(p), KernelShape{2, 2}, 1), ConfigError);
  EXPECT_THROW(expanded_conv(FeatureTensor(2, 2, 2), SubnetFunctions(p), KernelShape{2, 2}, 2), ConfigError);
}

TEST(ExpandedConv, ThreadCountDoesNotChangeBits) {
  std::mt19937_64 rng(5);
  std::vector<SubnetParams> p;
  for (int c = 0; c < 4; ++c) p.push_back(random_subnet(rng, 4, 4 * 9));
  const FeatureTensor in = random_tensor(rng, 4, 17, 13);
  const FeatureTensor one = expanded_conv(in, SubnetFunctions(p), KernelShape{3, 3}, 4, 1);
  const FeatureTensor many = expanded_conv(in, SubnetFunctions(p), KernelShape{3, 3}, 4, 4);
  EXPECT_EQ(one, many);
}

TEST(ResidualBlend, Examples) {
  std::mt19937_64 rng(6);
  const FeatureTensor x = random_tensor(rng, 2, 3, 3);
  const FeatureTensor fx = random_tensor(rng, 2, 3, 3);
  const FeatureTensor lo = residual_blend(x, fx, -20.0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(lo.values()[i], x.values()[i], 1e-8);
  const FeatureTensor mid = residual_blend(x, fx, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(mid.values()[i], (x.values()[i] + fx.values()[i]) / 2);
  const FeatureTensor one = residual_blend(FeatureTensor(1, 1, 1, 0.0), FeatureTensor(1, 1, 1, 1.0), 1.0);
  EXPECT_NEAR(one.at(0, 0, 0), 0.731059, 1e-6);
  EXPECT_NEAR(one.at(0, 0, 0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}

TEST(ResidualBlend, StaysInsideEnvelope) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 3);
  for (int t = 0; t < 50; ++t) {
    const FeatureTensor x = random_tensor(rng, 3, 4, 4);
    const FeatureTensor fx = random_tensor(rng, 3, 4, 4);
    const FeatureTensor o = residual_blend(x, fx, n(rng));
    for (std::size_t i = 0; i < o.size(); ++i) {
      EXPECT_GE(o.values()[i], std::min(x.values()[i], fx.values()[i]) - 1e-15);
      EXPECT_LE(o.values()[i], std::max(x.values()[i], fx.values()[i]) + 1e-15);
    }
  }
}

TEST(ResidualBlend, BroadcastsSingleChannelAndRejectsMismatch) {
  std::mt19937_64 rng(8);
  const FeatureTensor x = random_tensor(rng, 1, 2, 2);
  const FeatureTensor fx = random_tensor(rng, 3, 2, 2);
  const FeatureTensor o = residual_blend(x, fx, 0.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(o.at(c, 1, 0), (x.at(0, 1, 0) + fx.at(c, 1, 0)) / 2);
  EXPECT_THROW(residual_blend(FeatureTensor(2, 2, 2), FeatureTensor(3, 2, 2), 0.0), ConfigError);
  EXPECT_THROW(residual_blend(FeatureTensor(3, 2, 3), FeatureTensor(3, 2, 2), 0.0), ConfigError);
}

TEST(PixelShuffle, DefiningOrdering) {
  FeatureTensor f(4, 1, 1);
  for (int c = 0; c < 4; ++c) f.at(c, 0, 0) = 10.0 + c;
  const ImagePlane out = pixel_shuffle(f, 2);
  EXPECT_EQ(out(0, 0), 10.0);
  EXPECT_EQ(out(0, 1), 11.0);
  EXPECT_EQ(out(1, 0), 12.0);
  EXPECT_EQ(out(1, 1), 13.0);
}

TEST(PixelShuffle, FactorOneIsIdentity) {
  std::mt19937_64 rng(9);
  const FeatureTensor f = random_tensor(rng, 1, 3, 4);
  const ImagePlane out = pixel_shuffle(f, 1);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(out(y, x), f.at(0, y, x));
}

TEST(PixelShuffle, MatchesIndexFormulaAndIsABijection) {
  std::mt19937_64 rng(10);
  for (int s : {2, 3}) {
    const FeatureTensor f = random_tensor(rng, s * s, 2, 2);
    const ImagePlane out = pixel_shuffle(f, s);
    // Flat-index formula: out index (Y * sW + X) with Y = y s + c / s, X = x s + c % s.
    for (int c = 0; c < s * s; ++c)
      for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
          const std::size_t flat = static_cast<std::size_t>(y * s + c / s) * (2 * s) + (x * s + c % s);
          EXPECT_EQ(out.values()[flat], f.at(c, y, x));
        }
    std::vector<double> a(f.values().begin(), f.values().end());
    std::vector<double> b(out.values().begin(), out.values().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    const FeatureTensor back = pixel_unshuffle(out, s);
    EXPECT_EQ(back, f);
  }
  EXPECT_THROW(pixel_shuffle(FeatureTensor(3, 2, 2), 2), ConfigError);
}

TEST(UpsampleBlock, EmitsUpscaleSquaredChannels) {
  Model m = make_model(make_model_spec(1, 2, 2, KernelShape{1, 1}, {3, 3}));
  m.blocks[1].subnets[0].stages[2].bias = {1, 2, 3, 4};
  FeatureTensor f(2, 1, 1, 0.3);
  const ImagePlane out = upsample_block(f, m.blocks[1].subnets, m.spec);
  ASSERT_EQ(out.height(), 2);
  EXPECT_EQ(out(0, 0), 1.0);
  EXPECT_EQ(out(0, 1), 2.0);
  EXPECT_EQ(out(1, 0), 3.0);
  EXPECT_EQ(out(1, 1), 4.0);
  EXPECT_THROW(upsample_block(FeatureTensor(3, 1, 1), m.blocks[1].subnets, m.spec), ConfigError);
}

TEST(ForwardFull, ZeroModelIsTheBilinearBaseline) {
  const Model m = make_model(make_model_spec(2, 4, 4, KernelShape{2, 2}, default_input_bits(2)));
  const ImagePlane lr = testing::random_plane(11, 9, 7);
  const ImagePlane want = clamp_unit(resize(lr, 4.0, ResizeKernel::kBilinear));
  EXPECT_EQ(forward_full(lr, m), want);
  ForwardOptions fo;
  fo.clamp_output = false;
  EXPECT_EQ(forward_full(lr, m, fo), resize(lr, 4.0, ResizeKernel::kBilinear));
}

TEST(ForwardFull, FloatEqualsQuantizedWhenActivationsAreOnGrid) {
  // Block 0 emits nothing, so its output is x / 2 for an LR plane with
  // values in {0, 1}; both blocks' ranges put those values on grid levels.
  std::mt19937_64 rng(12);
  for (int bits = 2; bits <= 8; ++bits) {
    Model m = make_model(make_model_spec(1, 3, 2, KernelShape{2, 2}, {bits, bits}));
    for (SubnetParams& p : m.blocks[1].subnets) p = random_subnet(rng, 3, 4 * 4);
    m.spec.quant[0] = {bits, 0.5, 0.5, 0.0, 1.0, true};
    m.spec.quant[1] = {bits, 0.3, 0.3, 0.0, 1.0, true};
    ImagePlane lr(6, 5);
    for (double& v : lr.values()) v = static_cast<double>(rng() % 2);
    ForwardOptions q;
    q.mode = ForwardMode::kQuantized;
    q.clamp_output = false;
    ForwardOptions f;
    f.clamp_output = false;
    EXPECT_EQ(forward_full(lr, m, f), forward_full(lr, m, q)) << bits;
  }
}

TEST(ForwardFull, QuantizedModeNeedsCalibration) {
  const Model m = make_model(make_model_spec(1, 2, 2, KernelShape{2, 2}, {3, 3}));
  ForwardOptions q;
  q.mode = ForwardMode::kQuantized;
  EXPECT_THROW(forward_full(ImagePlane(4, 4), m, q), ConfigError);
  EXPECT_THROW(forward_full(ImagePlane(), m), DataError);
}

TEST(ForwardFull, DeterministicAcrossThreadCounts) {
  const Model m = testing::random_model(make_model_spec(2, 4, 3, KernelShape{2, 2}, {4, 3, 3}), 13, 0.3);
  const ImagePlane lr = testing::random_plane(14, 21, 18);
  ForwardOptions a, b;
  b.threads = 3;
  EXPECT_EQ(forward_full(lr, m, a), forward_full(lr, m, b));
}

}  // namespace
}  // namespace iqlut
