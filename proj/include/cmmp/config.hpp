#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "cmmp/trainer.hpp"

namespace cmmp {

/// Parses `key = value` lines with `#` comments on top of the defaults.
/// Unknown keys and malformed values throw ConfigError naming the line.
/// When total_iters is absent it is set to pretrain_iters + finetune_iters.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

std::string format_config(const TrainConfig& cfg);

}  // namespace cmmp
