#pragma once

#include <string_view>

namespace boxgraph::log {

/// Reads BOXGRAPH_LOG (error|warn|info|debug); defaults to warn. Logs go to stderr.
void init_from_env();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace boxgraph::log
