#pragma once

#include <string>
#include <vector>

namespace qdyn {

// Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace qdyn
