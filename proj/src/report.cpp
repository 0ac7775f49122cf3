#include "schottky/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace schottky {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep a marker that the value is floating point.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void render(const Json& v, std::ostringstream& os, int indent, const std::string& path) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << inner << Json(it.key()).dump() << ": ";
        render(it.value(), os, indent + 1, path + "." + it.key());
      }
      os << "\n" << pad << "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        os << "[]";
        return;
      }
      bool scalar = true;
      for (const auto& e : v) scalar = scalar && !e.is_structured();
      if (scalar) {
        os << "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) os << ", ";
          render(v[i], os, indent + 1, path + "[" + std::to_string(i) + "]");
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",\n";
        os << inner;
        render(v[i], os, indent + 1, path + "[" + std::to_string(i) + "]");
      }
      os << "\n" << pad << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw NonFiniteError("non-finite number at " + path);
      os << format_double(x);
      return;
    }
    default:
      os << v.dump();
  }
}

}  // namespace

std::string render_json(const Json& value) {
  std::ostringstream os;
  render(value, os, 0, "$");
  os << "\n";
  return os.str();
}

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json complex_matrix_json(const Eigen::MatrixXcd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json real_matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string render_matrix_csv(const Eigen::MatrixXcd& m, int i, int j) {
  std::ostringstream os;
  os << "i,j,s,t,re,im\n";
  for (Eigen::Index s = 0; s < m.rows(); ++s)
    for (Eigen::Index t = 0; t < m.cols(); ++t)
      os << i << "," << j << "," << s << "," << t << "," << format_double(m(s, t).real()) << ","
         << format_double(m(s, t).imag()) << "\n";
  return os.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int k = 0; k < len; ++k) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[k]);
  return os.str();
}

Json RunManifest::to_json() const {
  return Json{{"command", command},
              {"config_path", config_path},
              {"config_sha256", config_hash},
              {"truncation", truncation},
              {"rank_tol", rank_tol},
              {"quad_tol", quad_tol},
              {"threads", threads},
              {"tool_version", kToolVersion},
              {"wall_seconds", wall_seconds}};
}

}  // namespace schottky
