#pragma once

// Helpers shared by the unit tests: random inputs and central finite
// differences against the tape's analytic gradients.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "balancereg/diffcore.hpp"
#include "balancereg/model.hpp"
#include "balancereg/random.hpp"
#include "balancereg/tensor.hpp"

namespace testing {

using balancereg::Rng;
using balancereg::Tensor;
namespace ad = balancereg::ad;

inline Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Tensor t(r, c);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from 0 in magnitude, for ops with a kink there.
inline Tensor random_away_from_zero(Rng& rng, std::size_t r, std::size_t c, double margin = 0.05) {
  Tensor t(r, c);
  for (double& v : t.data) {
    const double mag = rng.uniform(margin, 1.0);
    v = rng.bernoulli(0.5) ? mag : -mag;
  }
  return t;
}

inline bool close(double a, double b, double rtol, double atol = 1e-8) {
  return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

// f builds a scalar from tape variables bound to `inputs`.
using ScalarFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

struct GradCheck {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::size_t kinks = 0;  // coordinates skipped because one-sided slopes disagree
  std::string first_failure;
};

inline double evaluate(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).item();
}

inline std::vector<Tensor> analytic_grads(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
  tape.backward(f(tape, vars));
  std::vector<Tensor> out;
  for (const ad::Var& v : vars) out.push_back(v.grad());
  return out;
}

inline GradCheck finite_difference_check(const ScalarFn& f, std::vector<Tensor> inputs, double rtol,
                                         double step = 1e-5, double atol = 1e-8) {
  GradCheck result;
  const std::vector<Tensor> grads = analytic_grads(f, inputs);
  const double f0 = evaluate(f, inputs);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double saved = inputs[k].data[i];
      inputs[k].data[i] = saved + step;
      const double fp = evaluate(f, inputs);
      inputs[k].data[i] = saved - step;
      const double fm = evaluate(f, inputs);
      inputs[k].data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double analytic = grads[k].data[i];
      ++result.checked;
      if (close(analytic, numeric, rtol, atol)) continue;
      const double right = (fp - f0) / step;
      const double left = (f0 - fm) / step;
      if (!close(right, left, 1e-2, 1e-6)) {
        ++result.kinks;
        continue;
      }
      if (result.failed++ == 0) {
        result.first_failure = "input " + std::to_string(k) + "[" + std::to_string(i) + "]: analytic " +
                               std::to_string(analytic) + " vs numeric " + std::to_string(numeric);
      }
    }
  }
  return result;
}

// Finite differences over every included model parameter against one
// backward pass through f.
inline GradCheck parameter_gradient_check(balancereg::Model& model, const std::function<ad::Var(ad::Tape&)>& f,
                                            const std::function<bool(const ad::Parameter&)>& include, double rtol) {
  for (ad::Parameter* p : parameters(model)) p->zero_grad();
  {
    ad::Tape tape;
    tape.backward(f(tape));
  }
  auto eval = [&] {
    ad::Tape tape;
    return f(tape).item();
  };
  GradCheck result;
  const double f0 = eval();
  const double h = 1e-5;
  for (ad::Parameter* p : parameters(model)) {
    if (!include(*p)) continue;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value.data[i];
      p->value.data[i] = saved + h;
      const double fp = eval();
      p->value.data[i] = saved - h;
      const double fm = eval();
      p->value.data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad.data[i];
      ++result.checked;
      if (close(analytic, numeric, rtol, 1e-6)) continue;
      if (!close((fp - f0) / h, (f0 - fm) / h, 1e-2, 1e-5)) {
        ++result.kinks;
        continue;
      }
      if (result.failed++ == 0) {
        result.first_failure = p->name + "[" + std::to_string(i) + "]: analytic " + std::to_string(analytic) +
                               " vs numeric " + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace testing
