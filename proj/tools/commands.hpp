#pragma once

// Batch commands behind the command-line front end. Each command writes its
// CSV/PGM artifacts plus config_resolved.toml into the output directory and
// returns a short human-readable summary.

#include "config.hpp"

#include "planesel/core.hpp"
#include "planesel/fields.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace planesel::cli {

struct CommandResult {
    std::vector<std::filesystem::path> files;
    std::string summary;
};

TrapParams trap_from(const RunConfig& cfg);
FieldConfig field_from(const RunConfig& cfg);

CommandResult cmd_spectrum(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult cmd_budget(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult cmd_crosstalk(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult cmd_hologram(const RunConfig& cfg, const std::filesystem::path& out);
CommandResult cmd_fit(const RunConfig& cfg, const std::filesystem::path& data,
                      const std::filesystem::path& out);

}  // namespace planesel::cli
