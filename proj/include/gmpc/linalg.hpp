// Copyright 2026 The gmpc Authors
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

#ifndef GMPC_LINALG_HPP_
#define GMPC_LINALG_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

namespace gmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Largest eigenvalue modulus.
double spectral_radius(const Mat& m);

// Row-major (de)serialization used by every config and export file.
nlohmann::json to_json(const Mat& m);
nlohmann::json to_json(const Vec& v);
Mat matrix_from_json(const nlohmann::json& j);
Vec vector_from_json(const nlohmann::json& j);

bool all_finite(const Mat& m);

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace gmpc

#endif  // GMPC_LINALG_HPP_
