// Command-line front door; every operation goes through the C API in
// star_c.h, which the star shared library exports.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "star/star_c.h"

namespace {

std::string read_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open config file: " << path << "\n";
    std::exit(static_cast<int>(STAR_ERR_IO));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int finish(star_status status) {
  if (status != STAR_OK) std::cerr << "error: " << star_last_error() << "\n";
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "star: conjugate Bayesian regression for count and rounded data\n"
      "Data files are headered CSV with an integer response column named 'y';\n"
      "configs are JSON documents (see README for the schemas)."};
  app.require_subcommand(1);

  std::string data, newData, config, out = "star-output";
  std::uint64_t seed = 1;
  std::size_t draws = 1000;

  auto add_common = [&](CLI::App* cmd, bool needsData) {
    if (needsData)
      cmd->add_option("--data", data, "training data CSV")->required();
    cmd->add_option("--config", config, "JSON config file");
    cmd->add_option("--seed", seed, "random seed (default 1)");
    cmd->add_option("--out", out, "output directory (default star-output)");
  };

  auto* fit = app.add_subcommand("fit", "posterior draws and diagnostics for a linear model");
  add_common(fit, true);
  fit->add_option("--draws", draws, "number of posterior draws (default 1000)");

  auto* predict = app.add_subcommand("predict", "joint predictive draws (and optional pmf)");
  add_common(predict, true);
  predict->add_option("--new", newData, "prediction covariate CSV")->required();
  predict->add_option("--draws", draws, "number of predictive draws (default 1000)");

  auto* select = app.add_subcommand("select-model", "posterior weights over candidate models");
  add_common(select, true);

  auto* sparse = app.add_subcommand("sparse-means", "spike-and-slab inclusion probabilities");
  add_common(sparse, true);

  auto* simulate = app.add_subcommand("simulate", "synthetic dataset generators");
  add_common(simulate, false);

  auto* study = app.add_subcommand("study", "run a full simulation study");
  add_common(study, false);

  CLI11_PARSE(app, argc, argv);
  const std::string cfg = read_config(config);

  if (fit->parsed())
    return finish(star_cmd_fit(data.c_str(), cfg.c_str(), seed, draws, out.c_str()));
  if (predict->parsed())
    return finish(star_cmd_predict(data.c_str(), newData.c_str(), cfg.c_str(), seed, draws,
                                   out.c_str()));
  if (select->parsed())
    return finish(star_cmd_select_model(data.c_str(), cfg.c_str(), seed, out.c_str()));
  if (sparse->parsed())
    return finish(star_cmd_sparse_means(data.c_str(), cfg.c_str(), seed, out.c_str()));
  if (simulate->parsed()) return finish(star_cmd_simulate(cfg.c_str(), seed, out.c_str()));
  if (study->parsed()) return finish(star_cmd_study(cfg.c_str(), seed, out.c_str()));
  return 0;
}
