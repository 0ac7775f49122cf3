#include "schottky/config_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace schottky {

namespace {

[[noreturn]] void field_error(const std::string& source, const std::string& path, const std::string& what) {
  throw ConfigError(source + ": field '" + path + "': " + what);
}

const Json& require(const Json& obj, const char* key, const std::string& source, const std::string& path) {
  if (!obj.is_object()) field_error(source, path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(source, path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

double read_number(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_number()) field_error(source, path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(source, path, "value must be finite");
  return x;
}

Complex read_complex(const Json& v, const std::string& source, const std::string& path) {
  if (!v.is_array() || v.size() != 2) field_error(source, path, "expected [re, im]");
  return {read_number(v[0], source, path + "[0]"), read_number(v[1], source, path + "[1]")};
}

Disk read_disk(const Json& v, const std::string& source, const std::string& path) {
  const double cx = read_number(require(v, "cx", source, path), source, path + ".cx");
  const double cy = read_number(require(v, "cy", source, path), source, path + ".cy");
  const double r = read_number(require(v, "r", source, path), source, path + ".r");
  if (!(r > 0)) field_error(source, path + ".r", "radius must be positive");
  DiskSide side = DiskSide::Interior;
  if (auto it = v.find("side"); it != v.end()) {
    if (!it->is_string()) field_error(source, path + ".side", "expected a string");
    const std::string s = it->get<std::string>();
    if (s == "exterior")
      side = DiskSide::Exterior;
    else if (s != "interior")
      field_error(source, path + ".side", "expected \"interior\" or \"exterior\"");
  }
  return Disk({cx, cy}, r, side);
}

std::vector<Complex> read_points(const Json& obj, const char* key, const std::string& source,
                                 const std::string& path) {
  std::vector<Complex> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_array()) field_error(source, path + "." + key, "expected a list");
  for (std::size_t i = 0; i < it->size(); ++i)
    out.push_back(read_complex((*it)[i], source, path + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

RationalFunction read_cocycle_entry(const Json& v, const std::string& source, const std::string& path) {
  const Json& type = require(v, "type", source, path);
  if (!type.is_string()) field_error(source, path + ".type", "expected a string");
  const std::string t = type.get<std::string>();
  RationalFunction f;
  if (t == "constant") {
    f.scale = read_complex(require(v, "value", source, path), source, path + ".value");
  } else if (t == "rational") {
    f.scale = read_complex(require(v, "scale", source, path), source, path + ".scale");
    f.zeros = read_points(v, "zeros", source, path);
    f.poles = read_points(v, "poles", source, path);
  } else {
    field_error(source, path + ".type", "expected \"constant\" or \"rational\"");
  }
  if (!(std::abs(f.scale) > 0)) field_error(source, path, "cocycle scale must be nonzero");
  return f;
}

Json disk_json(const Disk& d) {
  return Json{{"cx", d.center.real()},
              {"cy", d.center.imag()},
              {"r", d.radius},
              {"side", d.is_exterior() ? "exterior" : "interior"}};
}

}  // namespace

SchottkyConfig parse_config(const std::string& text, const std::string& source) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");

  SchottkyConfig cfg;
  const Json& version = require(root, "version", source, "");
  if (!version.is_number_integer()) field_error(source, "version", "expected an integer");
  cfg.version = version.get<int>();
  if (cfg.version != 1) field_error(source, "version", "unknown version " + std::to_string(cfg.version));

  const Json& pairs = require(root, "pairs", source, "");
  if (!pairs.is_array()) field_error(source, "pairs", "expected a list");
  for (std::size_t j = 0; j < pairs.size(); ++j) {
    const std::string path = "pairs[" + std::to_string(j) + "]";
    const Json& p = pairs[j];
    DiskPair pair;
    const Json& label = require(p, "label", source, path);
    if (!label.is_string()) field_error(source, path + ".label", "expected a string");
    pair.label = label.get<std::string>();
    pair.K = read_disk(require(p, "K", source, path), source, path + ".K");
    pair.K_prime = read_disk(require(p, "K_prime", source, path), source, path + ".K_prime");
    const Json& phi = require(p, "phi", source, path);
    try {
      pair.phi = Moebius(read_complex(require(phi, "a", source, path + ".phi"), source, path + ".phi.a"),
                         read_complex(require(phi, "b", source, path + ".phi"), source, path + ".phi.b"),
                         read_complex(require(phi, "c", source, path + ".phi"), source, path + ".phi.c"),
                         read_complex(require(phi, "d", source, path + ".phi"), source, path + ".phi.d"));
    } catch (const GeometryError& e) {
      field_error(source, path + ".phi", e.what());
    }
    cfg.pairs.push_back(std::move(pair));
  }

  if (auto it = root.find("cocycle"); it != root.end() && !it->is_null()) {
    const Json& entries = require(*it, "pairs", source, "cocycle");
    if (!entries.is_array()) field_error(source, "cocycle.pairs", "expected a list");
    for (std::size_t j = 0; j < entries.size(); ++j)
      cfg.cocycle.push_back(read_cocycle_entry(entries[j], source, "cocycle.pairs[" + std::to_string(j) + "]"));
    if (cfg.cocycle.size() != cfg.pairs.size())
      field_error(source, "cocycle.pairs", "expected one entry per pair");
  }

  if (auto it = root.find("truncation"); it != root.end()) {
    if (!it->is_number_integer() || it->get<int>() < 1) field_error(source, "truncation", "expected a positive integer");
    cfg.truncation = it->get<int>();
  }

  if (auto it = root.find("tolerances"); it != root.end()) {
    if (!it->is_object()) field_error(source, "tolerances", "expected an object");
    auto read_opt = [&](const char* key, double& slot) {
      if (auto f = it->find(key); f != it->end()) slot = read_number(*f, source, std::string("tolerances.") + key);
    };
    read_opt("rank_tol", cfg.tolerances.rank_tol);
    read_opt("quad_tol", cfg.tolerances.quad_tol);
    read_opt("gluing_tol", cfg.tolerances.gluing_tol);
    read_opt("collar_eps", cfg.tolerances.collar_eps);
    read_opt("sum_budget", cfg.tolerances.sum_budget);
    read_opt("opnorm_budget", cfg.tolerances.opnorm_budget);
    read_opt("hs_budget", cfg.tolerances.hs_budget);
  }

  if (auto it = root.find("witness"); it != root.end() && !it->is_null())
    cfg.witness = read_complex(*it, source, "witness");
  return cfg;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SchottkyConfig load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

Json config_to_json(const SchottkyConfig& cfg) {
  Json root;
  root["version"] = cfg.version;
  root["truncation"] = cfg.truncation;
  Json pairs = Json::array();
  for (const auto& p : cfg.pairs) {
    pairs.push_back(Json{{"label", p.label},
                         {"K", disk_json(p.K)},
                         {"K_prime", disk_json(p.K_prime)},
                         {"phi", Json{{"a", complex_json(p.phi.a())},
                                      {"b", complex_json(p.phi.b())},
                                      {"c", complex_json(p.phi.c())},
                                      {"d", complex_json(p.phi.d())}}}});
  }
  root["pairs"] = pairs;
  if (!cfg.cocycle.empty()) {
    Json entries = Json::array();
    for (const auto& f : cfg.cocycle) {
      if (f.is_constant()) {
        entries.push_back(Json{{"type", "constant"}, {"value", complex_json(f.scale)}});
      } else {
        Json zeros = Json::array(), poles = Json::array();
        for (const auto& a : f.zeros) zeros.push_back(complex_json(a));
        for (const auto& b : f.poles) poles.push_back(complex_json(b));
        entries.push_back(Json{{"type", "rational"}, {"scale", complex_json(f.scale)}, {"zeros", zeros}, {"poles", poles}});
      }
    }
    root["cocycle"] = Json{{"pairs", entries}};
  }
  Json tol{{"rank_tol", cfg.tolerances.rank_tol},
           {"quad_tol", cfg.tolerances.quad_tol},
           {"gluing_tol", cfg.tolerances.gluing_tol},
           {"collar_eps", cfg.tolerances.collar_eps}};
  // Infinite budgets are the default and are omitted.
  if (std::isfinite(cfg.tolerances.sum_budget)) tol["sum_budget"] = cfg.tolerances.sum_budget;
  if (std::isfinite(cfg.tolerances.opnorm_budget)) tol["opnorm_budget"] = cfg.tolerances.opnorm_budget;
  if (std::isfinite(cfg.tolerances.hs_budget)) tol["hs_budget"] = cfg.tolerances.hs_budget;
  root["tolerances"] = tol;
  if (cfg.witness) root["witness"] = complex_json(*cfg.witness);
  return root;
}

std::string serialize_config(const SchottkyConfig& config) { return render_json(config_to_json(config)); }

void save_config(const SchottkyConfig& config, const std::string& path) {
  const std::string text = serialize_config(config);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot open for writing");
  out << text;
  if (!out) throw ConfigError(path + ": write failed");
}

}  // namespace schottky
