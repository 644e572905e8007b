#pragma once

#include <spdlog/spdlog.h>

namespace fairvec {

// Shared stderr logger. Messages are `event key=value ...` lines so they
// can be grepped or split mechanically.
spdlog::logger& log();

}  // namespace fairvec
