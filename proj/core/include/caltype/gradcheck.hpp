#pragma once

#include <string>
#include <vector>

#include "caltype/model.hpp"

namespace caltype {

/// Maximum relative error between the analytic parameter gradients of
/// cross_entropy(net.forward(x), target) and central finite differences.
/// The caller chooses training/eval mode beforehand.
double gradcheck_network(Network& net, std::span<const double> x,
                         std::size_t target, double h = 1e-5);

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
};

/// Miniature-network sweep for one family: conv/pool/dense/dropout stacks
/// for the convolutional family, 1- and 2-layer cells at T in {1,2,3} for
/// the recurrent ones. Dropout layers run in eval mode (identity).
std::vector<GradCheckCase> gradcheck_family(Family family, std::uint64_t seed);

} // namespace caltype
