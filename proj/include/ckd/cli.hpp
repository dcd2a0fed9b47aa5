#pragma once

#include "ckd/dataio.hpp"
#include "ckd/neuralnet.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ckd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one `ckdnet` invocation. `args` excludes the program name, so
/// args[0] is the subcommand (gen, train, eval, importance).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Sidecar written next to a model as `<model>.stats`.
std::filesystem::path stats_path_for(const std::filesystem::path& model);
void write_stats(const Standardizer& s, const std::filesystem::path& path);
Standardizer read_stats(const std::filesystem::path& path);

/// `epoch,train_loss,train_acc,val_loss,val_acc`; empty fields when there is
/// no validation set.
void write_curves(const TrainingLog& log, const std::filesystem::path& path);
TrainingLog read_curves(const std::filesystem::path& path);

/// Flat `key=value` config file turned into `--key=value` arguments. Blank
/// lines and lines starting with '#' are skipped.
std::vector<std::string> read_config_args(const std::filesystem::path& path);

} // namespace ckd::cli
