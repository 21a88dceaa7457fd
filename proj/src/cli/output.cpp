#include "quasieq/cli/output.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <system_error>

#include <openssl/evp.h>

namespace quasieq::cli {

namespace fs = std::filesystem;

std::string_view tool_version() { return QUASIEQ_VERSION; }

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    fail(ErrorKind::kNumericalFailure, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

void write_atomic(const fs::path& target, std::string_view content) {
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::kConfig, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorKind::kConfig, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::kConfig, "cannot move output into place at " + target.string());
  }
}

std::string RunInputs::hash() const {
  const Json j{{"version", tool_version()},
               {"command", command},
               {"config", config},
               {"overrides", overrides.to_json()}};
  return sha256_hex(j.dump());
}

void write_run(const fs::path& out_dir, const std::vector<OutputFile>& files,
               const RunInputs& inputs, const std::map<std::string, double>& timings_ms) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::kConfig, "cannot create output directory " + out_dir.string());

  Json listing = Json::array();
  for (const auto& f : files) {
    write_atomic(out_dir / f.name, f.content);
    listing.push_back({{"name", f.name}, {"bytes", f.content.size()}, {"sha256", sha256_hex(f.content)}});
  }
  Json timings = Json::object();
  for (const auto& [k, v] : timings_ms) timings[k] = v;
  const Json manifest{{"tool", "quasieq"},
                      {"version", tool_version()},
                      {"command", inputs.command},
                      {"input_sha256", inputs.hash()},
                      {"overrides", inputs.overrides.to_json()},
                      {"config", inputs.config},
                      {"files", listing},
                      {"timings_ms", timings}};
  write_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kParse:
    case ErrorKind::kModel:
    case ErrorKind::kInvalidInput:
    case ErrorKind::kInvalidDistribution:
    case ErrorKind::kInvalidTruncation:
    case ErrorKind::kTruncationTooLarge:
      return 2;
    case ErrorKind::kBoundInapplicable:
    case ErrorKind::kConditionB:
    case ErrorKind::kPrecondition:
      return 4;
    case ErrorKind::kIrreducibility:
    case ErrorKind::kNumericalFailure:
    case ErrorKind::kDomain:
    case ErrorKind::kDivergence:
    case ErrorKind::kNoEquilibrium:
    case ErrorKind::kStability:
    case ErrorKind::kEval:
      return 3;
  }
  return 3;
}

}  // namespace quasieq::cli
