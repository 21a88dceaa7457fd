#include "quasieq/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "quasieq/error.hpp"

namespace quasieq::cli {

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::kConfig, what); }

Json node_to_json(const toml::node& node) {
  if (const auto* t = node.as_table()) {
    Json out = Json::object();
    for (const auto& [key, value] : *t) out[std::string(key.str())] = node_to_json(value);
    return out;
  }
  if (const auto* a = node.as_array()) {
    Json out = Json::array();
    for (const auto& value : *a) out.push_back(node_to_json(value));
    return out;
  }
  if (const auto* v = node.as_string()) return Json(v->get());
  if (const auto* v = node.as_integer()) return Json(v->get());
  if (const auto* v = node.as_floating_point()) return Json(v->get());
  if (const auto* v = node.as_boolean()) return Json(v->get());
  // Dates and times have no JSON counterpart; keep their TOML spelling.
  std::ostringstream text;
  if (const auto* v = node.as_date()) text << v->get();
  else if (const auto* v = node.as_time()) text << v->get();
  else if (const auto* v = node.as_date_time()) text << v->get();
  return Json(text.str());
}

double parse_double(std::string_view text, std::string_view spec) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    config_error("bad number '" + s + "' in grid '" + std::string(spec) + "'");
  }
  while (used < s.size() && (s[used] == ' ' || s[used] == '\t')) ++used;
  if (used != s.size() || !std::isfinite(v)) {
    config_error("bad number '" + s + "' in grid '" + std::string(spec) + "'");
  }
  return v;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

const char* type_name(const Json& j) { return j.type_name(); }

}  // namespace

Json toml_to_json(std::string_view text) {
  try {
    const toml::table table = toml::parse(text);
    return node_to_json(table);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    config_error("TOML syntax error at line " + std::to_string(where.line) + ", column " +
                 std::to_string(where.column) + ": " + std::string(e.description()));
  }
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (path.extension() == ".toml") return toml_to_json(text);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    config_error("JSON syntax error in " + path.string() + ": " + e.what());
  }
}

std::vector<double> parse_grid(std::string_view spec) {
  const std::string s = trim(spec);
  if (s.empty()) return {};
  const bool is_log = s.rfind("log:", 0) == 0;
  const bool is_lin = s.rfind("lin:", 0) == 0;
  if (is_log || is_lin) {
    const auto parts = split(std::string_view(s).substr(4), ':');
    if (parts.size() != 3) config_error("grid '" + s + "' needs the form kind:a:b:n");
    const double a = parse_double(parts[0], s);
    const double b = parse_double(parts[1], s);
    const double nd = parse_double(parts[2], s);
    if (nd < 0 || nd != std::floor(nd) || nd > 1e7) {
      config_error("grid '" + s + "' needs a nonnegative integer point count");
    }
    const auto n = static_cast<std::size_t>(nd);
    if (is_log && (!(a > 0) || !(b > 0))) {
      config_error("log grid '" + s + "' needs positive end points");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out[i] = is_log ? std::exp(std::log(a) + f * (std::log(b) - std::log(a))) : a + f * (b - a);
    }
    // Hit the end points exactly.
    if (n >= 1) out.front() = a;
    if (n >= 2) out.back() = b;
    return out;
  }
  std::vector<double> out;
  for (const auto& part : split(s, ',')) {
    if (part.empty()) config_error("empty entry in grid '" + s + "'");
    out.push_back(parse_double(part, s));
  }
  return out;
}

std::vector<double> grid_from_json(const Json& node, const std::string& where) {
  if (node.is_string()) return parse_grid(node.get<std::string>());
  if (!node.is_array()) config_error(where + " must be a grid string or an array of numbers");
  std::vector<double> out;
  for (const auto& v : node) {
    if (!v.is_number()) config_error(where + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

// ------------------------------------------------------------- Section ---

Section::Section(const Json& root, std::string path) : Section(&root, std::move(path)) {}

Section::Section(const Json* node, std::string path) : node_(node), path_(std::move(path)) {
  if (node_ != nullptr && !node_->is_object()) {
    config_error(path_ + " must be a table, found " + type_name(*node_));
  }
}

bool Section::has(const std::string& key) const { return raw(key) != nullptr; }

void Section::allow_only(std::initializer_list<std::string_view> allowed) const {
  if (node_ == nullptr) return;
  for (const auto& [key, value] : node_->items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || a == key;
    if (!ok) config_error("unknown key " + where(key));
  }
}

const Json* Section::raw(const std::string& key) const {
  if (node_ == nullptr) return nullptr;
  const auto it = node_->find(key);
  return it == node_->end() ? nullptr : &*it;
}

Section Section::child(const std::string& key) const { return Section(raw(key), where(key)); }

const Json& Section::require(const std::string& key) const {
  const Json* v = raw(key);
  if (v == nullptr) config_error("missing key " + where(key));
  return *v;
}

double Section::number(const std::string& key) const {
  const Json& v = require(key);
  if (!v.is_number()) config_error(where(key) + " must be a number, found " + type_name(v));
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(where(key) + " must be finite");
  return d;
}

double Section::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::optional<double> Section::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

std::int64_t Section::integer(const std::string& key) const {
  const Json& v = require(key);
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  config_error(where(key) + " must be an integer, found " + type_name(v));
}

std::int64_t Section::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::optional<std::int64_t> Section::optional_integer(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return integer(key);
}

std::string Section::string(const std::string& key) const {
  const Json& v = require(key);
  if (!v.is_string()) config_error(where(key) + " must be a string, found " + type_name(v));
  return v.get<std::string>();
}

std::string Section::string(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

bool Section::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = require(key);
  if (!v.is_boolean()) config_error(where(key) + " must be true or false");
  return v.get<bool>();
}

std::vector<double> Section::numbers(const std::string& key) const {
  const Json& v = require(key);
  if (!v.is_array()) config_error(where(key) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) config_error(where(key) + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::int64_t> Section::integers(const std::string& key) const {
  const Json& v = require(key);
  if (!v.is_array()) config_error(where(key) + " must be an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) config_error(where(key) + " must be an array of integers");
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

Json Overrides::to_json() const {
  Json j = Json::object();
  if (seed) j["seed"] = *seed;
  j["threads"] = threads;
  if (zeta_grid) j["zeta_grid"] = *zeta_grid;
  if (t_grid) j["t_grid"] = *t_grid;
  if (cap) j["cap"] = *cap;
  if (D) j["D"] = *D;
  if (radius) j["radius"] = *radius;
  return j;
}

}  // namespace quasieq::cli
