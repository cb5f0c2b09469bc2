#pragma once

#include <functional>
#include <map>
#include <string>

#include "qdyn/tensor.hpp"

namespace qdyn {

using ParamMap = std::map<std::string, Tensor>;

// Central-difference gradient of a deterministic scalar function of a
// parameter set: (f(theta + h e_i) - f(theta - h e_i)) / 2h per coordinate.
// Independent of the tape; used to cross-check reverse-mode gradients.
ParamMap finite_diff_grad(const std::function<double(const ParamMap&)>& f, ParamMap theta,
                          double h);

}  // namespace qdyn
