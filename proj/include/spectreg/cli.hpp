// cli.hpp - command-line surface: register, warp, exp, decode, encode, metrics, synth.
//
// Exit codes: 0 success, 2 argument or shape errors, 3 I/O errors, 4 divergence.

#pragma once

#include "spectreg/core.hpp"
#include "spectreg/optimize.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace spectreg::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_io = 3;
inline constexpr int exit_divergence = 4;

// Runs one command. args[0] is the program name.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// "16,24" -> {16, 24}
Extents parse_extents(const std::string &text);

// Flat-section key=value configuration ([model], [loss], [optim]).
OptimConfig load_config(const std::filesystem::path &path);
void save_config(const OptimConfig &config, const std::filesystem::path &path);

} // namespace spectreg::cli
