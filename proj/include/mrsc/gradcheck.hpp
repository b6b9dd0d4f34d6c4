#pragma once

// Central-difference gradient checks for the autodiff primitives and for a
// complete small transceiver loss.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mrsc/tensor.hpp"

namespace mrsc {

struct GradCheckResult {
  std::string name;
  // ||g_auto - g_fd|| / (||g_auto|| + ||g_fd||) over all checked entries.
  double rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

// `loss` is re-evaluated for every perturbation of every entry of `inputs`,
// which must all require gradients.
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss,
                                const std::vector<Tensor>& inputs, double h = 1e-6);

// One check per primitive, each on small random inputs.
std::vector<GradCheckResult> check_primitives(std::uint64_t seed = 1);

// Transmitter, channel, receiver and cross-entropy on a tiny architecture,
// checked with respect to every parameter.
GradCheckResult check_transceiver(std::uint64_t seed = 1);

}  // namespace mrsc
