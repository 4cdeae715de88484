#include "tpt/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <thread>

#include "tpt/error.hpp"

namespace tpt {
namespace {

using Clock = std::chrono::steady_clock;

class Fd {
public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Fd() { reset(); }

    int get() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }
    void reset() noexcept {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

struct Pipe {
    Fd read;
    Fd write;
};

Pipe make_pipe() {
    int fds[2];
    if (::pipe2(fds, O_CLOEXEC) != 0) throw SandboxError(std::string("pipe2 failed: ") + std::strerror(errno));
    return {Fd(fds[0]), Fd(fds[1])};
}

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

[[noreturn]] void child_fail(int err_fd, int err) {
    [[maybe_unused]] auto n = ::write(err_fd, &err, sizeof err);
    ::_exit(127);
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

}  // namespace

std::optional<std::filesystem::path> find_executable(std::string_view name) {
    if (name.empty()) return std::nullopt;
    auto is_exec = [](const std::filesystem::path& p) {
        struct stat st {};
        return ::stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(p.c_str(), X_OK) == 0;
    };
    if (name.find('/') != std::string_view::npos) {
        std::filesystem::path p(name);
        return is_exec(p) ? std::optional(p) : std::nullopt;
    }
    const char* path_env = std::getenv("PATH");
    std::string_view dirs = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
    while (!dirs.empty()) {
        auto colon = dirs.find(':');
        auto dir = dirs.substr(0, colon);
        if (!dir.empty()) {
            auto candidate = std::filesystem::path(dir) / name;
            if (is_exec(candidate)) return candidate;
        }
        if (colon == std::string_view::npos) break;
        dirs.remove_prefix(colon + 1);
    }
    return std::nullopt;
}

ProcessResult run_process(const ProcessSpec& spec) {
    if (spec.argv.empty()) throw SandboxError("empty argv");
    ignore_sigpipe_once();

    // Everything the child touches is prepared before fork.
    std::vector<char*> argv;
    argv.reserve(spec.argv.size() + 1);
    for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    const std::string workdir = spec.working_dir.string();

    Pipe in = make_pipe();
    Pipe out = make_pipe();
    Pipe err = make_pipe();
    Fd log_fd;
    if (spec.log_file) {
        log_fd = Fd(::open(spec.log_file->c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
        if (!log_fd) throw IoError(*spec.log_file, std::string("cannot open log: ") + std::strerror(errno));
    }
    Fd devnull(::open("/dev/null", O_WRONLY | O_CLOEXEC));

    const auto start = Clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw SandboxError(std::string("fork failed: ") + std::strerror(errno));

    if (pid == 0) {
        ::setpgid(0, 0);
        const int efd = err.write.get();
        if (spec.isolate_network) ::unshare(CLONE_NEWNET);
        rlimit core{0, 0};
        ::setrlimit(RLIMIT_CORE, &core);
        if (spec.address_space_limit_bytes) {
            rlimit as{*spec.address_space_limit_bytes, *spec.address_space_limit_bytes};
            ::setrlimit(RLIMIT_AS, &as);
        }
        if (!workdir.empty() && ::chdir(workdir.c_str()) != 0) child_fail(efd, errno);
        if (::dup2(in.read.get(), STDIN_FILENO) < 0) child_fail(efd, errno);
        const int out_target = log_fd ? log_fd.get() : out.write.get();
        const int err_target = log_fd ? log_fd.get() : devnull.get();
        if (::dup2(out_target, STDOUT_FILENO) < 0) child_fail(efd, errno);
        if (::dup2(err_target, STDERR_FILENO) < 0) child_fail(efd, errno);
        ::signal(SIGPIPE, SIG_DFL);
        ::execvp(argv[0], argv.data());
        child_fail(efd, errno);
    }

    ::setpgid(pid, pid);
    in.read.reset();
    out.write.reset();
    err.write.reset();
    log_fd.reset();

    ProcessResult result;
    {
        int child_errno = 0;
        ssize_t n;
        do {
            n = ::read(err.read.get(), &child_errno, sizeof child_errno);
        } while (n < 0 && errno == EINTR);
        if (n == static_cast<ssize_t>(sizeof child_errno)) {
            int status = 0;
            ::waitpid(pid, &status, 0);
            result.launch_errno = child_errno;
            result.wall = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
            return result;
        }
    }
    result.launched = true;

    const auto deadline = spec.wall_limit ? std::optional(start + *spec.wall_limit) : std::nullopt;
    auto remaining_ms = [&]() -> int {
        if (!deadline) return -1;
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now()).count();
        return left < 0 ? 0 : static_cast<int>(left);
    };
    auto kill_group = [&] { ::kill(-pid, SIGKILL); };

    std::size_t stdin_off = 0;
    if (spec.stdin_data.empty()) in.write.reset();
    else set_nonblocking(in.write.get());
    bool out_open = !spec.log_file.has_value();
    if (!out_open) out.read.reset();
    else set_nonblocking(out.read.get());

    char buf[1 << 15];
    while (out_open || in.write) {
        pollfd fds[2];
        nfds_t nfds = 0;
        int out_idx = -1, in_idx = -1;
        if (out_open) {
            out_idx = static_cast<int>(nfds);
            fds[nfds++] = {out.read.get(), POLLIN, 0};
        }
        if (in.write) {
            in_idx = static_cast<int>(nfds);
            fds[nfds++] = {in.write.get(), POLLOUT, 0};
        }
        const int wait_ms = remaining_ms();
        if (deadline && wait_ms == 0) {
            result.timed_out = true;
            kill_group();
            break;
        }
        const int rc = ::poll(fds, nfds, wait_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            kill_group();
            break;
        }
        if (rc == 0) continue;
        if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const auto* data = spec.stdin_data.data() + stdin_off;
            const auto left = spec.stdin_data.size() - stdin_off;
            const ssize_t n = ::write(in.write.get(), data, left);
            if (n > 0) stdin_off += static_cast<std::size_t>(n);
            if ((n < 0 && errno != EAGAIN && errno != EINTR) || stdin_off == spec.stdin_data.size()) in.write.reset();
        }
        if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLERR | POLLHUP))) {
            const ssize_t n = ::read(out.read.get(), buf, sizeof buf);
            if (n > 0) {
                result.stdout_data.append(buf, static_cast<std::size_t>(n));
                if (spec.stdout_cap_bytes >= 0 &&
                    static_cast<std::int64_t>(result.stdout_data.size()) > spec.stdout_cap_bytes) {
                    result.output_overflow = true;
                    result.stdout_data.resize(static_cast<std::size_t>(spec.stdout_cap_bytes));
                    kill_group();
                    break;
                }
            } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
                out_open = false;
            }
        }
    }
    in.write.reset();

    int status = 0;
    for (;;) {
        const pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0 && errno != EINTR) break;
        if (!result.timed_out && !result.output_overflow && deadline && remaining_ms() == 0) {
            result.timed_out = true;
            kill_group();
            ::waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    // Reap stragglers left in the group.
    ::kill(-pid, SIGKILL);

    result.wall = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
    return result;
}

}  // namespace tpt
