#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "quasieq/cli/commands.hpp"
#include "quasieq/cli/config.hpp"
#include "quasieq/cli/output.hpp"
#include "quasieq/error.hpp"

namespace {

namespace cli = quasieq::cli;

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> zeta_grid;
  std::optional<std::string> t_grid;
  std::optional<std::size_t> cap;
  std::optional<double> D;
  std::optional<double> radius;
};

void add_flags(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "TOML or JSON model config")->required()->check(CLI::ExistingFile);
  sub.add_option("--out", f.out, "output directory")->capture_default_str();
  sub.add_option("--seed", f.seed, "random seed");
  sub.add_option("--threads", f.threads, "worker threads (0 = all cores)")->capture_default_str();
  sub.add_option("--zeta-grid", f.zeta_grid, "zeta grid: log:a:b:n, lin:a:b:n or v1,v2,...");
  sub.add_option("--t-grid", f.t_grid, "time grid, same syntax as --zeta-grid");
  sub.add_option("--cap", f.cap, "state cap (birth-death families) or lattice point cap (mpp)");
  sub.add_option("--D", f.D, "constant of the time-dependent bounds");
  sub.add_option("--radius", f.radius, "ellipsoid radius of the mpp truncation");
}

int run(cli::Command command, const Flags& f) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  try {
    const auto t0 = clock::now();
    cli::Overrides ov;
    ov.seed = f.seed;
    ov.threads = f.threads;
    if (f.zeta_grid) ov.zeta_grid = cli::parse_grid(*f.zeta_grid);
    if (f.t_grid) ov.t_grid = cli::parse_grid(*f.t_grid);
    ov.cap = f.cap;
    ov.D = f.D;
    ov.radius = f.radius;
    const fs::path config_path(f.config);
    const cli::Json config = cli::load_config_file(config_path);

    const auto t1 = clock::now();
    const auto result =
        cli::run_command(command, config, ov, fs::absolute(config_path).parent_path());
    const auto t2 = clock::now();
    auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
    cli::write_run(f.out, result.files, cli::RunInputs{cli::to_string(command), config, ov},
                   {{"load", ms(t0, t1)}, {"compute", ms(t1, t2)}});
    std::cout << result.summary << "\n";
    if (!result.ok) {
      std::cerr << "error: an inequality check failed; see report.json\n";
      return 3;
    }
    return 0;
  } catch (const quasieq::Error& e) {
    std::cerr << "error [" << quasieq::to_string(e.kind()) << "]: " << e.what() << "\n";
    return cli::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-equilibrium analysis of absorbing Markov chains"};
  app.set_version_flag("--version", std::string(cli::tool_version()));
  app.require_subcommand(1);

  Flags flags;
  std::optional<cli::Command> chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "stationary laws of the returned and accelerated processes"},
      {"bounds", "hitting statistics, zeta search and every bound with exact checks"},
      {"window", "distance to the quasi-equilibrium over a time grid"},
      {"sweep", "scaling study over A or N"},
      {"simulate", "trajectories and Monte Carlo estimates"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_flags(*sub, flags);
    sub->callback([&chosen, n = std::string(name)] { chosen = cli::parse_command(n); });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(*chosen, flags);
}
