#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace quasieq::cli {

using Json = nlohmann::json;

/// Reads a config file. `.toml` files are converted to the equivalent JSON
/// document (tables become objects, arrays stay arrays, dates become
/// strings); anything else is parsed as JSON. Throws kConfig.
Json load_config_file(const std::filesystem::path& path);

/// TOML text to JSON. Throws kConfig with the line and column of a syntax
/// error.
Json toml_to_json(std::string_view text);

/// Grid syntax:
///   ""                      empty grid
///   "log:a:b:n"             n points log-spaced from a to b (a, b > 0)
///   "lin:a:b:n"             n points evenly spaced from a to b
///   "v1,v2,..."             explicit values
/// Throws kConfig.
std::vector<double> parse_grid(std::string_view spec);

/// A grid given in a config file, either as a spec string or an array of
/// numbers.
std::vector<double> grid_from_json(const Json& node, const std::string& where);

// Typed access to one config table with error messages that name the full
// key path. Missing tables behave like empty ones.
class Section {
 public:
  Section(const Json& root, std::string path);
  Section(const Json* node, std::string path);

  bool present() const { return node_ != nullptr; }
  const Json* node() const { return node_; }
  bool has(const std::string& key) const;
  const std::string& path() const { return path_; }

  /// Throws kConfig when the table has keys outside `allowed`.
  void allow_only(std::initializer_list<std::string_view> allowed) const;

  const Json* raw(const std::string& key) const;
  Section child(const std::string& key) const;

  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  std::optional<double> optional_number(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::optional<std::int64_t> optional_integer(const std::string& key) const;
  std::string string(const std::string& key) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::int64_t> integers(const std::string& key) const;

  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  const Json& require(const std::string& key) const;

  const Json* node_;
  std::string path_;
};

/// Values given on the command line; they take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::vector<double>> zeta_grid;
  std::optional<std::vector<double>> t_grid;
  std::optional<std::size_t> cap;
  std::optional<double> D;
  std::optional<double> radius;

  Json to_json() const;
};

}  // namespace quasieq::cli
