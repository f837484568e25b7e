#pragma once

#include <vector>

namespace causalot {

/// Nodes and weights of an n-point Gauss-Hermite rule for N(0,1).
struct Quantization {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point quantization of the standard normal whose weighted moments of
/// order <= 2n-1 are those of N(0,1). Nodes are ascending and symmetric
/// about 0; weights sum to one.
Quantization quantize_gauss_hermite(int n);

}  // namespace causalot
