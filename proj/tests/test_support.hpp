#pragma once

// Shared helpers for the test suites: the central finite-difference gradient
// oracle and a few small utilities. Everything here is independent of the
// library's backward pass so it can serve as ground truth for it.

#include <cmath>
#include <functional>
#include <vector>

#include "lan/nn.hpp"
#include "lan/tape.hpp"
#include "lan/tensor.hpp"

namespace testsup {

// Evaluates a scalar loss as a pure function of the parameter set.
using LossFn = std::function<double(const lan::ParamSet<double>&)>;

// Central finite differences over every scalar in the set. h = 1e-5, double
// precision throughout.
inline std::vector<lan::Tensor<double>> fd_gradients(lan::ParamSet<double> params, const LossFn& loss,
                                                     double h = 1e-5) {
  std::vector<lan::Tensor<double>> grads;
  for (std::size_t i = 0; i < params.count(); ++i) {
    lan::Tensor<double> g = lan::Tensor<double>::zeros(params.value(i).shape());
    for (std::size_t k = 0; k < g.size(); ++k) {
      double saved = params.value(i)[k];
      params.value(i)[k] = saved + h;
      double up = loss(params);
      params.value(i)[k] = saved - h;
      double down = loss(params);
      params.value(i)[k] = saved;
      g[k] = (up - down) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

// max over coordinates of |ga - gfd| / max(1, |gfd|).
inline double max_rel_err(const lan::Gradients<double>& analytic, const std::vector<lan::Tensor<double>>& fd) {
  double worst = 0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const lan::Tensor<double>& ga = analytic.items[i].second;
    for (std::size_t k = 0; k < fd[i].size(); ++k) {
      double denom = std::max(1.0, std::fabs(fd[i][k]));
      double err = std::fabs(ga[k] - fd[i][k]) / denom;
      if (err > worst) worst = err;
    }
  }
  return worst;
}

// Runs a tape forward/backward given a builder that maps bound params to a
// scalar loss var, and checks it against finite differences.
template <typename BuildF>
double fd_check(lan::ParamSet<double>& params, BuildF build, double h = 1e-5) {
  lan::Tape<double> tape;
  lan::Gradients<double> analytic;
  {
    typename lan::Tape<double>::Scope scope(tape);
    lan::Bound<double> bound = lan::bind(tape, params);
    lan::Var<double> loss = build(tape, bound);
    analytic = tape.backward(loss);
  }
  auto loss_of = [&](const lan::ParamSet<double>& p) {
    lan::Tape<double> t2;
    typename lan::Tape<double>::Scope scope(t2);
    lan::Bound<double> b2 = lan::bind(t2, p);
    return build(t2, b2).value()[0];
  };
  std::vector<lan::Tensor<double>> fd = fd_gradients(params, loss_of, h);
  return max_rel_err(analytic, fd);
}

inline lan::Rng make_rng(std::uint64_t seed) { return lan::Rng(seed); }

}  // namespace testsup
