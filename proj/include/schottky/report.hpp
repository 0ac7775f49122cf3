#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "schottky/moebius.hpp"

namespace schottky {

using Json = nlohmann::json;

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kToolVersion = "1.0.0";

// Sorted keys, two-space indentation, doubles with 17 significant digits.
// Throws NonFiniteError naming the path of the first NaN or infinity.
std::string render_json(const Json& value);

Json complex_json(Complex z);
Json complex_matrix_json(const Eigen::MatrixXcd& m);
Json real_matrix_json(const Eigen::MatrixXd& m);

// CSV with header "i,j,s,t,re,im"; entries ordered by (i, j, s, t).
std::string render_matrix_csv(const Eigen::MatrixXcd& m, int i = 0, int j = 0);

std::string sha256_hex(const std::string& bytes);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  int truncation = 0;
  double rank_tol = 0;
  double quad_tol = 0;
  int threads = 1;
  double wall_seconds = 0;

  Json to_json() const;
};

}  // namespace schottky
