#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ecgstress/nn.hpp"

namespace gradcheck {

struct LayerCase {
  ecgstress::LayerSpec spec;
  ecgstress::Shape input;
};

// `count` seeded random layer/shape combinations of one kind.
std::vector<LayerCase> layer_cases(ecgstress::LayerKind kind, std::size_t count, std::uint64_t seed);

// Largest relative error between analytic and central-difference gradients
// (input, weights and bias) of L = sum(r * layer(x)) for random r. Relative
// error is |a - n| / max(|a|, |n|, 1e-7). Inputs keep clear of relu kinks
// and max-pool ties so the finite differences are well defined.
double layer_error(const LayerCase& c, std::uint64_t seed);

}  // namespace gradcheck
