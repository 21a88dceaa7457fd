#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "quasieq/cli/config.hpp"
#include "quasieq/error.hpp"

namespace quasieq::cli {

std::string_view tool_version();

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Writes to a temporary file in the same directory, then renames it over
/// `target`. Throws kConfig when the directory is not writable.
void write_atomic(const std::filesystem::path& target, std::string_view content);

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string content;
};

/// Everything that determines a run's outputs.
struct RunInputs {
  std::string command;
  Json config;
  Overrides overrides;

  /// Hash over the version, command, config and overrides. Equal hashes give
  /// byte-identical outputs for the same thread count.
  std::string hash() const;
};

/// Writes every file atomically, then manifest.json listing the version,
/// the input hash, per-file hashes and the wall-clock timings (the only
/// nondeterministic content of a run).
void write_run(const std::filesystem::path& out_dir, const std::vector<OutputFile>& files,
               const RunInputs& inputs, const std::map<std::string, double>& timings_ms);

/// 0 ok, 2 config error, 3 numerical failure, 4 bound inapplicable.
int exit_code(ErrorKind kind);

}  // namespace quasieq::cli
