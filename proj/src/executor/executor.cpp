#include "executor/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <thread>

#include "core/error.hpp"
#include "core/format.hpp"
#include "core/jsonl.hpp"

extern char** environ;

namespace tcshpt {
namespace {

double quadratic_2_3(double x, double y) {
    return (x - 2.0) * (x - 2.0) + (y - 3.0) * (y - 3.0);
}

SearchSpace quadratic_space() {
    SearchSpace space;
    space.params.push_back(
        {.name = "x", .kind = ParamKind::kFloat, .low = -10.0, .high = 10.0});
    space.params.push_back(
        {.name = "y", .kind = ParamKind::kFloat, .low = -10.0, .high = 10.0});
    return space;
}

double numeric_arg(const Configuration& config, const std::string& name) {
    const ParamValue* v = config.find(name);
    if (!v || !std::holds_alternative<double>(*v)) {
        throw Error(Errc::kInvalidExperiment,
                    "builtin objective needs numeric parameter: " + name);
    }
    return std::get<double>(*v);
}

TrialResult run_builtin(const std::string& name, const Configuration& config,
                        const Goal& goal) {
    auto start = std::chrono::steady_clock::now();
    double value = 0.0;
    if (name == "quadratic_2_3") {
        value = quadratic_2_3(numeric_arg(config, "x"),
                              numeric_arg(config, "y"));
    } else {
        throw Error(Errc::kObjectiveNotFound,
                    "unknown builtin objective: " + name);
    }
    TrialResult result;
    result.epochs = {{1, {{goal.metric_name, value}}}};
    result.final_metrics = {{goal.metric_name, value}};
    result.status = TrialStatus::kCompleted;
    result.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return result;
}

// The parent writes the config into a pipe the child may have already
// abandoned; a SIGPIPE would kill the whole process, so it is disabled once.
void ignore_sigpipe() {
    static std::once_flag flag;
    std::call_once(flag, [] { signal(SIGPIPE, SIG_IGN); });
}

std::string config_json(const Configuration& config) {
    Json j = Json::object();
    for (const auto& [name, value] : config.assignments) {
        j[name] = to_json(value);
    }
    return j.dump();
}

struct Pipe {
    int fds[2] = {-1, -1};

    Pipe() {
        if (pipe(fds) != 0) {
            throw Error(Errc::kIoError,
                        std::string("pipe: ") + strerror(errno));
        }
    }
    ~Pipe() {
        close_read();
        close_write();
    }
    int read_fd() const { return fds[0]; }
    int write_fd() const { return fds[1]; }
    void close_read() {
        if (fds[0] >= 0) close(fds[0]);
        fds[0] = -1;
    }
    void close_write() {
        if (fds[1] >= 0) close(fds[1]);
        fds[1] = -1;
    }
};

// Consumes complete lines from a growing buffer.
std::vector<std::string> drain_lines(std::string& buffer) {
    std::vector<std::string> lines;
    size_t start = 0;
    size_t nl;
    while ((nl = buffer.find('\n', start)) != std::string::npos) {
        lines.push_back(buffer.substr(start, nl - start));
        start = nl + 1;
    }
    buffer.erase(0, start);
    return lines;
}

struct ProtocolState {
    std::vector<EpochRecord> epochs;
    std::map<std::string, double> final_metrics;
    bool saw_final = false;
    std::string violation;

    void feed(const std::string& line) {
        if (!violation.empty()) return;
        std::string stripped(trim_line(line));
        if (stripped.empty()) return;
        Json j = Json::parse(stripped, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object() || !j.contains("metrics") ||
            !j["metrics"].is_object()) {
            violation = "unparseable output line: " + stripped.substr(0, 120);
            return;
        }
        std::map<std::string, double> metrics;
        for (const auto& [key, value] : j["metrics"].items()) {
            if (!value.is_number()) {
                violation = "non-numeric metric: " + key;
                return;
            }
            metrics[key] = value.get<double>();
        }
        if (j.value("final", false)) {
            final_metrics = std::move(metrics);
            saw_final = true;
        } else if (j.contains("epoch") &&
                   j["epoch"].is_number_integer()) {
            epochs.push_back({j["epoch"].get<int>(), std::move(metrics)});
        } else {
            violation = "line is neither an epoch nor a final record";
        }
    }

private:
    static std::string trim_line(const std::string& line) {
        std::string out = line;
        while (!out.empty() && (out.back() == '\r' || out.back() == ' ')) {
            out.pop_back();
        }
        return out;
    }
};

[[noreturn]] void exec_child(const CommandSpec& spec, const Pipe& in,
                             const Pipe& out, const Pipe& err) {
    dup2(in.read_fd(), STDIN_FILENO);
    dup2(out.write_fd(), STDOUT_FILENO);
    dup2(err.write_fd(), STDERR_FILENO);
    // Close every pipe end; the dup2 copies survive.
    for (int fd : {in.read_fd(), in.write_fd(), out.read_fd(), out.write_fd(),
                   err.read_fd(), err.write_fd()}) {
        if (fd >= 0) close(fd);
    }
    if (!spec.workdir.empty() && chdir(spec.workdir.c_str()) != 0) {
        _exit(126);
    }
    std::vector<std::string> env_storage;
    for (char** e = environ; *e; ++e) {
        std::string_view entry(*e);
        auto eq = entry.find('=');
        if (spec.env.count(std::string(entry.substr(0, eq)))) continue;
        env_storage.emplace_back(entry);
    }
    for (const auto& [key, value] : spec.env) {
        env_storage.push_back(key + "=" + value);
    }
    std::vector<char*> argv;
    for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    std::vector<char*> envp;
    for (const auto& e : env_storage) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);
    execvpe(argv[0], argv.data(), envp.data());
    _exit(127);
}

TrialResult run_command(const CommandSpec& spec, const Configuration& config,
                        const Goal& goal) {
    if (spec.argv.empty()) {
        throw Error(Errc::kInvalidExperiment, "command has an empty argv");
    }
    ignore_sigpipe();

    auto start = std::chrono::steady_clock::now();
    const double timeout_s = spec.timeout_s.value_or(3600.0);

    Pipe in, out, err;
    pid_t pid = fork();
    if (pid < 0) {
        throw Error(Errc::kIoError, std::string("fork: ") + strerror(errno));
    }
    if (pid == 0) exec_child(spec, in, out, err);

    in.close_read();
    out.close_write();
    err.close_write();

    // The config fits comfortably inside the pipe buffer, so one blocking
    // write cannot stall even if the child never reads it.
    std::string payload = config_json(config) + "\n";
    ssize_t ignored = write(in.write_fd(), payload.data(), payload.size());
    (void)ignored;
    in.close_write();

    ProtocolState protocol;
    std::string out_buffer, err_buffer, err_tail;
    bool timed_out = false;
    bool sent_kill = false;

    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             start)
            .count();
    };
    auto append_err = [&](const char* data, size_t n) {
        // Forwarded for live visibility; the tail doubles as diagnostics.
        ssize_t forwarded = write(STDERR_FILENO, data, n);
        (void)forwarded;
        err_tail.append(data, n);
        if (err_tail.size() > 2000) {
            err_tail.erase(0, err_tail.size() - 2000);
        }
    };

    while (out.read_fd() >= 0 || err.read_fd() >= 0) {
        double remaining = timeout_s - elapsed();
        if (remaining <= 0.0) {
            if (!timed_out) {
                timed_out = true;
                kill(pid, SIGTERM);
            } else if (!sent_kill && elapsed() >= timeout_s + 1.0) {
                // one second of grace for a clean exit, then no mercy
                sent_kill = true;
                kill(pid, SIGKILL);
            }
            remaining = 0.05;
        }

        struct pollfd fds[2];
        nfds_t n = 0;
        if (out.read_fd() >= 0) fds[n++] = {out.read_fd(), POLLIN, 0};
        if (err.read_fd() >= 0) fds[n++] = {err.read_fd(), POLLIN, 0};
        int rc = poll(fds, n, static_cast<int>(remaining * 1000) + 1);
        if (rc < 0 && errno != EINTR) break;

        char chunk[4096];
        for (nfds_t i = 0; i < n; ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP))) continue;
            ssize_t got = read(fds[i].fd, chunk, sizeof(chunk));
            bool is_out = fds[i].fd == out.read_fd();
            if (got > 0) {
                if (is_out) {
                    out_buffer.append(chunk, got);
                    for (const auto& line : drain_lines(out_buffer)) {
                        protocol.feed(line);
                    }
                } else {
                    append_err(chunk, got);
                }
            } else if (got == 0 || (got < 0 && errno != EINTR)) {
                if (is_out) {
                    out.close_read();
                } else {
                    err.close_read();
                }
            }
        }
    }
    if (!out_buffer.empty()) protocol.feed(out_buffer);

    // The child may outlive its pipes; reap it under the same deadline.
    int wait_status = 0;
    for (;;) {
        pid_t reaped = waitpid(pid, &wait_status, WNOHANG);
        if (reaped == pid || (reaped < 0 && errno != EINTR)) break;
        double over = elapsed() - timeout_s;
        if (over >= 0.0 && !timed_out) {
            timed_out = true;
            kill(pid, SIGTERM);
        }
        if (over >= 1.0 && !sent_kill) {
            sent_kill = true;
            kill(pid, SIGKILL);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }

    TrialResult result;
    result.epochs = std::move(protocol.epochs);
    result.final_metrics = std::move(protocol.final_metrics);
    result.wall_time_s = elapsed();

    std::string reason;
    if (timed_out) {
        reason = "timeout after " + fmt_shortest(timeout_s) + "s";
    } else if (!protocol.violation.empty()) {
        reason = protocol.violation;
    } else if (WIFSIGNALED(wait_status)) {
        reason = "killed by signal " + std::to_string(WTERMSIG(wait_status));
    } else if (WEXITSTATUS(wait_status) != 0) {
        reason = "exit code " + std::to_string(WEXITSTATUS(wait_status));
    } else if (!protocol.saw_final) {
        reason = "no terminal record on stdout";
    }

    if (reason.empty()) {
        result.status = TrialStatus::kCompleted;
    } else {
        result.status = TrialStatus::kFailed;
        if (!err_tail.empty()) {
            reason += "; stderr tail: " + err_tail;
        }
        result.failure_reason = std::move(reason);
        // a failed trial must not look measurable
        result.final_metrics.erase(goal.metric_name);
    }
    return result;
}

}  // namespace

std::vector<BuiltinInfo> list_builtins() {
    return {{"quadratic_2_3", quadratic_space()}};
}

TrialResult run_trial(const Objective& objective, const Configuration& config,
                      const Goal& goal) {
    if (objective.kind == Objective::Kind::kBuiltin) {
        return run_builtin(objective.builtin_name, config, goal);
    }
    if (!objective.command) {
        throw Error(Errc::kInvalidExperiment,
                    "command objective without a command spec");
    }
    return run_command(*objective.command, config, goal);
}

}  // namespace tcshpt
