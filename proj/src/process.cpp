#include "opsizer/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <mutex>

namespace opsizer {

namespace {

void close_fd(int& fd) {
    if (fd >= 0) {
        ::close(fd);
        fd = -1;
    }
}

void ignore_sigpipe() {
    static std::once_flag once;
    std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& input,
                          std::chrono::milliseconds timeout,
                          const std::filesystem::path& working_dir) {
    ProcessResult result;
    if (argv.empty()) return result;
    ignore_sigpipe();

    int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
    if (::pipe(in_pipe) != 0) return result;
    if (::pipe(out_pipe) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        return result;
    }
    if (::pipe(err_pipe) != 0 || ::pipe2(exec_pipe, O_CLOEXEC) != 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
        return result;
    }

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    const std::string cwd = working_dir.string();

    const pid_t pid = ::fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1],
                       exec_pipe[0], exec_pipe[1]})
            ::close(fd);
        return result;
    }
    if (pid == 0) {
        ::dup2(in_pipe[0], STDIN_FILENO);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1],
                       exec_pipe[0]})
            ::close(fd);
        ::setpgid(0, 0);
        if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
            const int e = errno;
            (void)!::write(exec_pipe[1], &e, sizeof e);
            ::_exit(127);
        }
        ::execvp(args[0], args.data());
        const int e = errno;
        (void)!::write(exec_pipe[1], &e, sizeof e);
        ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);

    int exec_errno = 0;
    const bool exec_failed = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno;
    ::close(exec_pipe[0]);
    result.launched = !exec_failed;

    int in_fd = in_pipe[1], out_fd = out_pipe[0], err_fd = err_pipe[0];
    ::fcntl(in_fd, F_SETFL, O_NONBLOCK);
    if (exec_failed || input.empty()) close_fd(in_fd);

    std::size_t written = 0;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    while (out_fd >= 0 || err_fd >= 0) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            break;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);

        pollfd fds[3];
        int n = 0;
        int out_idx = -1, err_idx = -1, in_idx = -1;
        if (out_fd >= 0) { out_idx = n; fds[n++] = {out_fd, POLLIN, 0}; }
        if (err_fd >= 0) { err_idx = n; fds[n++] = {err_fd, POLLIN, 0}; }
        if (in_fd >= 0) { in_idx = n; fds[n++] = {in_fd, POLLOUT, 0}; }

        const int rc = ::poll(fds, n, static_cast<int>(std::max<long long>(1, left.count())));
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        auto drain = [&](int idx, int& fd, std::string& sink) {
            if (idx < 0 || !(fds[idx].revents & (POLLIN | POLLHUP | POLLERR))) return;
            const ssize_t got = ::read(fd, buf, sizeof buf);
            if (got > 0) {
                sink.append(buf, static_cast<std::size_t>(got));
            } else if (got == 0 || (errno != EINTR && errno != EAGAIN)) {
                close_fd(fd);
            }
        };
        drain(out_idx, out_fd, result.out);
        drain(err_idx, err_fd, result.err);
        if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t w = ::write(in_fd, input.data() + written, input.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 && errno != EAGAIN && errno != EINTR) close_fd(in_fd);
            if (written >= input.size()) close_fd(in_fd);
        }
    }
    close_fd(in_fd);
    close_fd(out_fd);
    close_fd(err_fd);

    int status = 0;
    for (;;) {
        const pid_t w = ::waitpid(pid, &status, result.timed_out ? 0 : WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) break;
        if (w == 0) {
            if (std::chrono::steady_clock::now() >= deadline) {
                result.timed_out = true;
                ::kill(-pid, SIGKILL);
                ::kill(pid, SIGKILL);
            } else {
                ::usleep(1000);
            }
        }
    }
    if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        result.signaled = !result.timed_out;
    }
    return result;
}

ProcessResult run_shell(const std::string& command, const std::string& input,
                        std::chrono::milliseconds timeout, const std::filesystem::path& working_dir) {
    return run_process({"/bin/sh", "-c", command}, input, timeout, working_dir);
}

}  // namespace opsizer
