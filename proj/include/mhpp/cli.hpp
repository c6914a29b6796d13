#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mhpp/config.hpp"

namespace mhpp {

/// gen, train-gsne, train-text, train-clip, fuse, fit, ablate, report
const std::vector<std::string>& subcommand_names();

/// "mhpp <version> config=<hash>"
std::string provenance_line(const RunConfig& config);

/// Runs one subcommand against the artifact directory `out`. Errors propagate
/// as exceptions; a missing input artifact raises DependencyError.
void run_subcommand(std::string_view name, const RunConfig& config, const std::filesystem::path& out,
                    std::ostream& log);

/// Command-line front end; returns the process exit status.
int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err);

}  // namespace mhpp
