#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mazerl/harness.hpp"

namespace mazerl {

// Writes results.csv (per-setting summary), results.json (full, including
// per-seed values and the config hash), and results.txt (aligned table).
void write_report(std::span<const ResultRow> rows,
                  const std::filesystem::path& out_dir,
                  const std::string& config_hash);

std::vector<ResultRow> load_results_json(const std::filesystem::path& path);

std::string format_results_table(std::span<const ResultRow> rows);

}  // namespace mazerl
