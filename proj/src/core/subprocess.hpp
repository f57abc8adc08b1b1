// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace kenforge {

struct CommandResult {
    int exit_code = -1;       // process exit status; -1 if killed by a signal
    int term_signal = 0;      // non-zero when terminated by a signal
    std::string stdout_text;  // captured standard output
};

// Runs argv[0] with the given arguments (no shell involved), capturing
// stdout. stderr is inherited. Throws an evaluator error if the process
// cannot be spawned.
CommandResult run_command_capture(const std::vector<std::string>& argv);

}  // namespace kenforge
