#include "fairvec/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

namespace fairvec {

spdlog::logger& log() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = spdlog::stderr_logger_mt("fairvec");
    l->set_pattern("%Y-%m-%dT%H:%M:%S.%eZ %l %v", spdlog::pattern_time_type::utc);
    return l;
  }();
  return *logger;
}

}  // namespace fairvec
