#pragma once

#include <string>
#include <vector>

#include "paramres/cli/config.hpp"
#include "paramres/cli/output.hpp"

namespace paramres::cli {

const std::vector<std::string>& subcommands();

/// Tables produced by a subcommand; no files are touched.
std::vector<Table> compute(const std::string& subcommand, const RunConfig& cfg, int threads);

struct RunOptions {
    std::string config_path;
    std::string out_dir = ".";
    int threads = 0;
    Format format = Format::csv;
};

/// Load, compute and write the tables plus manifest.json. Returns the exit code:
/// 0 success, 2 configuration error, 3 numerical failure (diagnostics.txt written).
int run(const std::string& subcommand, const RunOptions& opt);

}  // namespace paramres::cli
