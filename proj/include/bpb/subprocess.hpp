#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace bpb {

namespace detail {

inline void ignore_sigpipe_once()
{
    static std::once_flag flag;
    std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

} // namespace detail

/**
 * Child process running `/bin/sh -c command` with line-oriented pipes on its
 * stdin and stdout. Stderr is inherited.
 */
class LineProcess
{
public:
    explicit LineProcess(const std::string& command)
    {
        detail::ignore_sigpipe_once();
        int to_child[2];
        int from_child[2];
        if (::pipe2(to_child, O_CLOEXEC) != 0)
            throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
        if (::pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]})
                ::close(fd);
            throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
        }
        if (pid_ == 0) {
            // Own process group, so teardown also reaches whatever the shell started.
            ::setpgid(0, 0);
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::setpgid(pid_, pid_);
        ::close(to_child[0]);
        ::close(from_child[1]);
        write_fd_ = to_child[1];
        read_fd_ = from_child[0];
    }

    LineProcess(const LineProcess&) = delete;
    LineProcess& operator=(const LineProcess&) = delete;

    ~LineProcess()
    {
        if (write_fd_ >= 0)
            ::close(write_fd_);
        if (read_fd_ >= 0)
            ::close(read_fd_);
        if (pid_ > 0) {
            int status = 0;
            // Give the child a moment to exit on EOF, then kill it.
            for (int i = 0; i < 50; ++i) {
                if (::waitpid(pid_, &status, WNOHANG) == pid_)
                    return;
                ::usleep(2000);
            }
            ::kill(-pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
        }
    }

    /// Sends one line and waits for one reply line. nullopt on EOF, error or timeout.
    std::optional<std::string> exchange(const std::string& line, std::chrono::milliseconds timeout)
    {
        const std::string out = line + '\n';
        std::size_t sent = 0;
        while (sent < out.size()) {
            const ssize_t w = ::write(write_fd_, out.data() + sent, out.size() - sent);
            if (w < 0) {
                if (errno == EINTR)
                    continue;
                return std::nullopt;
            }
            sent += static_cast<std::size_t>(w);
        }

        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string reply = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                return reply;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0)
                return std::nullopt;
            pollfd pfd{read_fd_, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready < 0 && errno == EINTR)
                continue;
            if (ready <= 0)
                return std::nullopt;
            char chunk[4096];
            const ssize_t r = ::read(read_fd_, chunk, sizeof chunk);
            if (r < 0 && errno == EINTR)
                continue;
            if (r <= 0)
                return std::nullopt;
            buffer_.append(chunk, static_cast<std::size_t>(r));
        }
    }

private:
    pid_t pid_ = -1;
    int write_fd_ = -1;
    int read_fd_ = -1;
    std::string buffer_;
};

} // namespace bpb
