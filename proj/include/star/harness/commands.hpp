#pragma once

#include <cstdint>
#include <string>

namespace star::harness {

/// File-level command implementations behind the CLI subcommands. Each takes
/// a JSON config text (may be empty for defaults), reads/writes CSV and JSON
/// under outDir, and throws std exceptions on failure.

void cmd_fit(const std::string& dataPath, const std::string& configText, std::uint64_t seed,
             std::size_t draws, const std::string& outDir);

void cmd_predict(const std::string& dataPath, const std::string& newDataPath,
                 const std::string& configText, std::uint64_t seed, std::size_t draws,
                 const std::string& outDir);

void cmd_select_model(const std::string& dataPath, const std::string& configText,
                      std::uint64_t seed, const std::string& outDir);

void cmd_sparse_means(const std::string& dataPath, const std::string& configText,
                      std::uint64_t seed, const std::string& outDir);

void cmd_simulate(const std::string& configText, std::uint64_t seed, const std::string& outDir);

void cmd_study(const std::string& configText, std::uint64_t seed, const std::string& outDir);

}  // namespace star::harness
