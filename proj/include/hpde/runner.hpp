#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hpde::runner {

// Executes one subcommand against a config file, writing artifacts and a
// manifest under the output directory ([run] output_dir, overridable by the
// HPDE_OUT_DIR environment variable; seed_override wins over [run] seed).
// Exit codes: 0 success, 2 config error, 3 solver/verification failure.
int run(const std::string& subcommand, const std::string& config_path,
        std::optional<std::uint64_t> seed_override = std::nullopt);

}  // namespace hpde::runner
