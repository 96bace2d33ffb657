#pragma once

#include <vector>

#include "fk/nn.hpp"

namespace fk {

struct AttackConfig {
  double epsilon = 0.0;          // L-inf budget, pixel-fraction units
  bool clip_to_range = true;     // keep x' inside [0,1]
  std::vector<double> epsilon_grid;
};

// x' = x + epsilon * sign(dL/dx), with sign(0) = 0. When clip is set the
// result is clamped to [0,1] elementwise.
Tensor fgsm_perturb(const Model& model, const Batch& batch, double epsilon,
                    bool clip);

struct SweepPoint {
  double epsilon = 0.0;
  double accuracy = 0.0;
};

// Accuracy under the attack at each grid value; the epsilon = 0 entry equals
// clean accuracy exactly.
std::vector<SweepPoint> attack_sweep(const Model& model, const Batch& data,
                                     const std::vector<double>& grid,
                                     bool clip);

}  // namespace fk
