/*
 * Copyright 2026 The favano-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FAVANO_PARAM_VECTOR_HPP
#define FAVANO_PARAM_VECTOR_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace favano {

/// Dense vector of model parameters. Every model exchanged between the
/// server and the clients is a ParamVector of one fixed dimension.
///
/// Arithmetic between vectors of different dimension throws
/// ContractViolation. Constructors reject non-finite entries.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0);
  ParamVector(std::initializer_list<double> values);
  explicit ParamVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  ParamVector& operator+=(const ParamVector& other);
  ParamVector& operator-=(const ParamVector& other);
  ParamVector& operator*=(double scale);

  /// this += scale * other
  ParamVector& axpy(double scale, const ParamVector& other);

  bool all_finite() const noexcept;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::vector<double> values_;
};

ParamVector operator+(ParamVector lhs, const ParamVector& rhs);
ParamVector operator-(ParamVector lhs, const ParamVector& rhs);
ParamVector operator*(double scale, ParamVector v);

double dot(const ParamVector& a, const ParamVector& b);
double squared_norm(const ParamVector& v);
double norm(const ParamVector& v);
double squared_distance(const ParamVector& a, const ParamVector& b);

/// Throws ContractViolation unless a and b share a dimension.
void require_same_dim(const ParamVector& a, const ParamVector& b);
/// Throws ContractViolation if any entry is NaN or infinite.
void require_finite(const ParamVector& v, const char* what);

}  // namespace favano

#endif  // FAVANO_PARAM_VECTOR_HPP
