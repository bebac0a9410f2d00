// Copyright (c) 2026, The HTCInfoMax Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace htcim {

inline constexpr std::string_view kVersion = "0.1.0";

/// Stable exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Runs `htcim <subcommand> ...` in-process. args excludes the program
/// name. Machine-readable output goes to `out`, human-readable tables and
/// the run manifest line go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string sha256_file(const std::string& path);
std::string sha256_hex(std::string_view bytes);

/// Applies HTCIM_LOG (trace, debug, info, warn, error, off) to the stderr logger.
void configure_logging();

}  // namespace htcim
