#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

namespace opsizer {

struct ProcessResult {
    int exit_code = -1;  // valid when exited normally
    bool launched = false;
    bool timed_out = false;
    bool signaled = false;
    std::string out;
    std::string err;

    bool ok() const { return launched && !timed_out && !signaled && exit_code == 0; }
};

/// Runs argv[0] (PATH lookup) with `input` on stdin, capturing stdout and stderr.
/// The child is killed once `timeout` elapses. Never throws on child failure.
ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout,
                          const std::filesystem::path& working_dir = {});

/// Convenience: run `command` through /bin/sh -c.
ProcessResult run_shell(const std::string& command, const std::string& input,
                        std::chrono::milliseconds timeout,
                        const std::filesystem::path& working_dir = {});

}  // namespace opsizer
