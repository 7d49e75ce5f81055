#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace star::harness {

/// Configuration for the three simulation studies. Defaults are desk scale;
/// every field can be overridden from JSON.
struct ExperimentConfig {
  std::string study;  // ess-benchmark | prediction-nl | sparse-means
  int replicates = 20;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  // ess-benchmark
  std::vector<int> nGrid{100, 200};
  std::vector<int> pGrid{10, 50};
  int draws = 1000;
  int gibbsBurnin = 1000;

  // prediction-nl
  std::string dgp = "mixture-cdf";  // mixture-cdf | neg-bin
  int nPoints = 250;
  int predictiveDraws = 1000;
  int marginalSamples = 20000;
  int basisKnots = 8;

  // shared
  double psi = 1000.0;

  // sparse-means
  int nSparse = 200;
  double mu = 2.0;
  double propSignal = 0.1;
  int sweeps = 1500;
  int sparseBurnin = 300;

  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct StudyRow {
  int replicate = 0;
  int n = 0;
  int p = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::string summaryJson;  // serialized summary document
};

/// Run the configured study: replicates execute in a worker pool with seeds
/// derived from the master seed, and rows come back in a deterministic
/// order regardless of scheduling.
StudyResult run_study(const ExperimentConfig& config);

/// Write results.csv and summary.json under the output directory.
void write_study(const StudyResult& result, const std::filesystem::path& outDir);

}  // namespace star::harness
