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

#include "gmpc/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace gmpc {

double spectral_radius(const Mat& m) {
  require(m.rows() == m.cols(), "spectral_radius: matrix must be square");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

nlohmann::json to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json to_json(const Vec& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Mat matrix_from_json(const nlohmann::json& j) {
  require(j.is_array(), "matrix must be an array of rows");
  if (j.empty()) return Mat(0, 0);
  const auto rows = static_cast<Eigen::Index>(j.size());
  require(j[0].is_array(), "matrix rows must be arrays");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    require(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
            "matrix rows must have equal length");
    for (Eigen::Index k = 0; k < cols; ++k) {
      require(row[static_cast<size_t>(k)].is_number(), "matrix entries must be numbers");
      m(i, k) = row[static_cast<size_t>(k)].get<double>();
    }
  }
  return m;
}

Vec vector_from_json(const nlohmann::json& j) {
  require(j.is_array(), "vector must be an array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].is_number(), "vector entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace gmpc
