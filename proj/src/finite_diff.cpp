#include "qdyn/finite_diff.hpp"

namespace qdyn {

ParamMap finite_diff_grad(const std::function<double(const ParamMap&)>& f, ParamMap theta,
                          double h) {
    if (!(h > 0.0)) {
        throw ShapeError("finite_diff_grad step h must be positive");
    }
    ParamMap grads;
    for (auto& [name, tensor] : theta) {
        Tensor g(tensor.rows(), tensor.cols());
        for (int i = 0; i < tensor.size(); ++i) {
            const double original = tensor.data()[i];
            tensor.data()[i] = original + h;
            const double plus = f(theta);
            tensor.data()[i] = original - h;
            const double minus = f(theta);
            tensor.data()[i] = original;
            g.data()[i] = (plus - minus) / (2.0 * h);
        }
        grads.emplace(name, std::move(g));
    }
    return grads;
}

}  // namespace qdyn
