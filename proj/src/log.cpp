#include "boxgraph/log.hpp"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace boxgraph::log {
namespace {

std::shared_ptr<spdlog::logger>& logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto l = spdlog::stderr_logger_st("boxgraph");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::warn);
        return l;
    }();
    return instance;
}

}  // namespace

void init_from_env() {
    const char* env = std::getenv("BOXGRAPH_LOG");
    if (env == nullptr) return;
    const std::string level = env;
    if (level == "error") logger()->set_level(spdlog::level::err);
    else if (level == "warn") logger()->set_level(spdlog::level::warn);
    else if (level == "info") logger()->set_level(spdlog::level::info);
    else if (level == "debug") logger()->set_level(spdlog::level::debug);
    else logger()->warn("ignoring unknown BOXGRAPH_LOG value '{}'", level);
}

void debug(std::string_view msg) { logger()->debug(msg); }
void info(std::string_view msg) { logger()->info(msg); }
void warn(std::string_view msg) { logger()->warn(msg); }
void error(std::string_view msg) { logger()->error(msg); }

}  // namespace boxgraph::log
