#include "react/training.hpp"

#include "react/errors.hpp"

#include <cmath>

namespace react {

void optimizer_step(std::span<nn::ParamTensor* const> params, double lr, AdamState& state, const AdamOptions& opts) {
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw InputError("adam: parameter list changed between steps");
  ++state.step;
  const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto* p = params[k];
    if (p->grad.rows() != state.m[k].rows() || p->grad.cols() != state.m[k].cols())
      throw InputError("adam: shape mismatch");
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    m = opts.beta1 * m + (1.0 - opts.beta1) * p->grad;
    v = opts.beta2 * v + (1.0 - opts.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + opts.eps);
  }
}

}  // namespace react
