#include "dialeval/adapter_client.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "dialeval/error.hpp"

namespace dialeval {

using nlohmann::json;

AdapterClient::AdapterClient(std::vector<std::string> argv, Options opts) : opts_(opts) {
    if (argv.empty()) throw AdapterError("adapter command is empty");
    std::signal(SIGPIPE, SIG_IGN); // a crashed adapter must surface as a write error
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) throw AdapterError(std::string("pipe: ") + std::strerror(errno));
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw AdapterError(std::string("pipe: ") + std::strerror(errno));
    }
    std::vector<char *> cargv;
    for (auto &a : argv) cargv.push_back(a.data());
    cargv.push_back(nullptr);

    pid_ = fork();
    if (pid_ < 0) throw AdapterError(std::string("fork: ") + std::strerror(errno));
    if (pid_ == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execvp(cargv[0], cargv.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);

    try {
        const auto hello = json::parse(read_line(opts_.startup_timeout));
        if (hello.value("op", "") != "hello") throw AdapterError("adapter's first line is not a hello");
        if (hello.value("version", -1) != kAdapterProtocolVersion)
            throw AdapterError("adapter protocol version " + std::to_string(hello.value("version", -1)) +
                               " != " + std::to_string(kAdapterProtocolVersion));
        if (hello.contains("error") && !hello.at("error").is_null())
            throw AdapterError("adapter failed to start: " + hello.at("error").dump());
        for (const auto &m : hello.value("metrics", json::array())) metrics_.insert(m.get<std::string>());
    } catch (const json::exception &e) {
        shutdown();
        throw AdapterError(std::string("malformed adapter hello: ") + e.what());
    } catch (...) {
        shutdown();
        throw;
    }
}

AdapterClient::~AdapterClient() { shutdown(); }

void AdapterClient::shutdown() {
    if (to_child_ >= 0) {
        close(to_child_); // EOF asks the adapter to exit
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        close(from_child_);
        from_child_ = -1;
    }
    if (pid_ > 0) {
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) != 0) {
                pid_ = -1;
                return;
            }
            usleep(20000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void AdapterClient::write_line(const std::string &line) {
    if (to_child_ < 0) throw AdapterError("adapter is closed");
    std::string data = line + "\n";
    const char *p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(to_child_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw AdapterError(std::string("adapter write failed: ") + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::string AdapterClient::read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            return line;
        }
        if (from_child_ < 0) throw AdapterError("adapter is closed");
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw AdapterError("adapter timed out");
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc < 0) throw AdapterError(std::string("poll: ") + std::strerror(errno));
        if (rc == 0) throw AdapterError("adapter timed out");
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) throw AdapterError("adapter exited unexpectedly");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

double AdapterClient::score(const std::string &metric, std::string_view candidate, std::string_view reference) {
    std::lock_guard lock(mu_);
    if (!supports(metric)) throw AdapterError("adapter does not advertise metric '" + metric + "'");
    const long id = next_id_++;
    write_line(json{{"id", id}, {"metric", metric}, {"candidate", candidate}, {"reference", reference}}.dump());

    while (true) {
        json reply;
        if (auto it = pending_.find(id); it != pending_.end()) {
            reply = json::parse(it->second);
            pending_.erase(it);
        } else {
            const std::string line = read_line(opts_.request_timeout);
            try {
                reply = json::parse(line);
            } catch (const json::exception &) {
                throw AdapterError("adapter wrote malformed reply: " + line);
            }
            const long rid = reply.value("id", -1L);
            if (rid != id) {
                if (rid > 0) pending_[rid] = line;
                continue;
            }
        }
        if (reply.contains("error") && !reply.at("error").is_null())
            throw AdapterError(metric + ": " + reply.at("error").get<std::string>());
        if (!reply.contains("score") || !reply.at("score").is_number())
            throw AdapterError("adapter reply for id " + std::to_string(id) + " lacks a score");
        return reply.at("score").get<double>();
    }
}

void AdapterClient::send_raw_line(const std::string &line) {
    std::lock_guard lock(mu_);
    write_line(line);
}

std::string AdapterClient::read_raw_line() {
    std::lock_guard lock(mu_);
    return read_line(opts_.request_timeout);
}

} // namespace dialeval
