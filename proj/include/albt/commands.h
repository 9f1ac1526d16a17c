#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "albt/run_config.h"

namespace albt {

// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Each command writes its artifacts and a <command>.manifest.json into
// paths.output_dir and reports progress on `out`.
void cmd_build_vocab(const RunConfig& config, std::ostream& out);
void cmd_pretrain(const RunConfig& config, std::ostream& out);
void cmd_finetune(const RunConfig& config, std::ostream& out);
void cmd_evaluate(const RunConfig& config, std::ostream& out);
void cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
void cmd_synth(const RunConfig& config, std::ostream& out);

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

// Full command line: global --config/--set/--seed and the subcommands.
// Never throws; errors are reported on `err` and mapped to an exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace albt
