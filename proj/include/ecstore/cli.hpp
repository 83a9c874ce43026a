#pragma once

#include <string>
#include <vector>

namespace ecstore {

// Runs the command-line tool on the given arguments (program name excluded).
// Exit codes: 0 success, 2 validation error, 3 infeasible workload,
// 4 non-convergence, 5 bound violation detected under --check-bound.
int run_cli(const std::vector<std::string>& args);

}  // namespace ecstore
