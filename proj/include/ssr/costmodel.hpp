#pragma once

#include <span>
#include <vector>

#include "ssr/archspace.hpp"

namespace ssr::cost {

struct CostSpec {
  double target_flops = 0.0;  // T_F, same unit as the model's count
  double delta = 0.95;        // single-side tolerance ratio
  double lambda = 0.01;       // constraint weight
  void validate() const;
};

// Expected output channels of one convolution: total mass of the weighted
// prefix-mask sum.
double expected_channels(const space::ArchParamGroup& channel_group,
                         const std::vector<std::vector<double>>& masks);

struct ConvCost {
  double e_in = 0.0;
  double e_out = 0.0;
};

// Per-operator expected cost. The kernel term is sum over convs of
// (k*E_in + 1)*E_out per position; s > 1 adds an s*E_in pooling/upsampling
// overhead (E_in = first conv input) and evaluates at the pooled length.
double expected_operator_flops(std::span<const ConvCost> convs, int kernel, int length,
                               int spatial);

// Fixed stem/transition/head convolution cost; independent of the
// architecture distribution.
double basic_flops(const space::SpaceConfig& config);

// Probability-weighted operation count of the whole supernet. Operator level
// mixed by the dilation-spatial probabilities, depth level by cumulative
// layer costs under the depth probabilities. Frozen groups contribute
// nothing; a fully one-hot state reproduces the discrete count.
double expected_total_flops(const space::SuperNet& net, const space::ArchState& arch);

// Piecewise log barrier around the target band [delta*T_F, T_F]; zero inside
// the closed band. Natural log with a 1e-9 floor inside |.|.
double flops_constraint_loss(double e_f, const CostSpec& spec);

// Tape versions used by the architecture update; they reuse the probability
// and mask nodes of an existing continuous forward graph so gradients couple
// to the same parameters the task loss sees.
ad::Value expected_total_flops_node(ad::Tape& tape, const space::SuperNet& net,
                                    const space::ArchState& arch,
                                    const space::ForwardGraph& fwd);
ad::Value flops_constraint_node(ad::Tape& tape, ad::Value e_f, const CostSpec& spec);

// Reference cost of the published 2D factorized pair (3x1 then 1x3) kept as
// a standalone calculation: E_kernel = (3*E_in+1)*E_a + (3*E_a+1)*E_b, times
// H*W at s=1 or (E_kernel + s^2*E_in)*(H/s)*(W/s) otherwise.
double factorized_conv2d_flops(double e_in, double e_first, double e_second, int height,
                               int width, int spatial);

}  // namespace ssr::cost
