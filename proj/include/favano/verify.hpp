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

#ifndef FAVANO_VERIFY_HPP
#define FAVANO_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace favano {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string measured;
  std::string expected;
};

/// Names accepted by run_verify_suite.
std::vector<std::string> verify_suite_names();

/// Runs one property suite (estimators, potential, timing) or all of them.
/// Throws ConfigError("suite", ...) for unknown names.
std::vector<CheckResult> run_verify_suite(const std::string& suite, std::uint64_t seed);

}  // namespace favano

#endif  // FAVANO_VERIFY_HPP
