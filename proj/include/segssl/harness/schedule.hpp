// Copyright 2026 The segssl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace segssl::harness {

/// base * (1 - iter/max_iter)^power.
inline double poly_lr(std::size_t iter, std::size_t max_iter, double base,
                      double power = 0.9) {
  if (max_iter == 0 || iter > max_iter) {
    throw std::invalid_argument("poly_lr: need 0 <= iter <= max_iter, max_iter > 0");
  }
  const double frac = 1.0 - static_cast<double>(iter) / static_cast<double>(max_iter);
  return base * std::pow(frac, power);
}

/// Poly decay preceded by a constant slow-start phase.
struct LrSchedule {
  double base = 0.01;
  std::size_t max_iter = 2000;
  double power = 0.9;
  std::size_t slow_start_steps = 100;
  double slow_start_ratio = 1.0 / 7.0;

  double slow_start_lr() const { return base * slow_start_ratio; }
  double at(std::size_t iter) const {
    if (iter < slow_start_steps) return slow_start_lr();
    return poly_lr(iter, max_iter, base, power);
  }
};

/// Heavy-ball SGD: v <- momentum * v + g; w <- w - lr * v.
template <class Scalar>
class MomentumSgd {
 public:
  MomentumSgd(std::size_t parameters, double momentum)
      : momentum_(momentum), velocity_(parameters, Scalar{0}) {}

  template <class Params, class Grads>
  void step(Params &&param, Grads &&grad, double lr) {
    for (std::size_t i = 0; i < velocity_.size(); ++i) {
      velocity_[i] = static_cast<Scalar>(momentum_) * velocity_[i] + grad(i);
      param(i) -= static_cast<Scalar>(lr) * velocity_[i];
    }
  }

  const std::vector<Scalar> &velocity() const { return velocity_; }

 private:
  double momentum_;
  std::vector<Scalar> velocity_;
};

}  // namespace segssl::harness
