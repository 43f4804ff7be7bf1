#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lipgan/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"Lipschitz-constrained discriminator experiments: optimal transport, objective family checks, "
               "particle flows, theorem checks and value surfaces."};
  cli.require_subcommand(1);
  cli.fallthrough();  // global flags may follow the subcommand

  std::uint64_t seed = 0;
  std::string out_dir;
  bool quiet = false;
  auto* seed_opt = cli.add_option("--seed", seed, "Seed overriding the manifest seed");
  auto* out_opt = cli.add_option("--out-dir", out_dir, "Output directory (overrides output.dir)");
  cli.add_flag("--quiet,-q", quiet, "Suppress progress messages");

  std::string real_path, fake_path;
  auto* ot = cli.add_subcommand("ot", "Exact W1 between two point-cloud CSV files, with plan and dual potentials");
  ot->add_option("real", real_path, "Real cloud CSV")->required()->check(CLI::ExistingFile);
  ot->add_option("fake", fake_path, "Fake cloud CSV")->required()->check(CLI::ExistingFile);

  std::string family_name;
  std::optional<double> family_param;
  auto* family = cli.add_subcommand("family", "Check whether a built-in objective belongs to the Lipschitz family");
  family->add_option("name", family_name, "Objective name")->required();
  family->add_option("param", family_param, "Objective parameter (e.g. linear weight)");

  std::vector<std::string> configs;
  auto* flow = cli.add_subcommand("flow", "Run particle flows; several configs run in parallel");
  flow->add_option("configs", configs, "Config files")->required()->check(CLI::ExistingFile);
  auto* verify = cli.add_subcommand("verify", "Run the theorem check suite on each config");
  verify->add_option("configs", configs, "Config files")->required()->check(CLI::ExistingFile);
  auto* surface = cli.add_subcommand("surface", "Value surfaces over an activation x lr x depth grid");
  surface->add_option("configs", configs, "Config files")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(cli, argc, argv);

  lipgan::app::Options opts;
  if (*seed_opt) opts.seed = seed;
  if (*out_opt) opts.out_dir = out_dir;
  opts.quiet = quiet;

  try {
    if (*ot) return lipgan::app::cmd_ot(real_path, fake_path, opts, std::cout);
    if (*family) return lipgan::app::cmd_family(family_name, family_param, std::cout);
    if (*flow) return lipgan::app::cmd_flow(configs, opts, std::cout, std::cerr);
    if (*verify) return lipgan::app::cmd_verify(configs, opts, std::cout, std::cerr);
    if (*surface) return lipgan::app::cmd_surface(configs, opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
