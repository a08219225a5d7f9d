#pragma once

// Central-finite-difference gradient oracle. Runs the computation in the
// 64-bit shadow mode (GraphT<double> over the same op implementations) and
// compares reverse-mode gradients of a scalar loss against
// (f(x+h) - f(x-h)) / 2h for every element of every input.

#include <doctest.h>

#include <functional>
#include <vector>

#include "mv3d/graph.hpp"

namespace mv3d::testing {

using BuildFn = std::function<Graph64::NodeId(Graph64&, const std::vector<Graph64::NodeId>&)>;

inline double eval_loss(const BuildFn& build, const std::vector<Tensor64>& inputs) {
  Graph64 g;
  std::vector<Graph64::NodeId> ids;
  ids.reserve(inputs.size());
  for (const auto& t : inputs) ids.push_back(g.leaf(t));
  return g.value(build(g, ids)).data[0];
}

inline void check_gradients(const BuildFn& build, std::vector<Tensor64> inputs,
                            double h = 1e-3, double tol = 1e-4) {
  Graph64 g;
  std::vector<Graph64::NodeId> ids;
  ids.reserve(inputs.size());
  for (const auto& t : inputs) ids.push_back(g.leaf(t));
  const auto loss = build(g, ids);
  g.backward(loss);

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor64& analytic = g.grad(ids[i]);
    for (std::int64_t j = 0; j < inputs[i].numel(); ++j) {
      const double keep = inputs[i].data[j];
      inputs[i].data[j] = keep + h;
      const double fp = eval_loss(build, inputs);
      inputs[i].data[j] = keep - h;
      const double fm = eval_loss(build, inputs);
      inputs[i].data[j] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      const double a = analytic.data[j];
      const double err = std::abs(a - fd);
      const double scale = std::max({std::abs(a), std::abs(fd), 1e-6});
      INFO("input ", i, " element ", j, ": analytic ", a, " fd ", fd);
      CHECK(err / scale < tol);
    }
  }
}

}  // namespace mv3d::testing
