#include "sentscore/external_scorer.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "sentscore/error.hpp"

namespace sentscore {

namespace {

using Clock = std::chrono::steady_clock;

std::string errno_text() { return std::strerror(errno); }

nlohmann::json score_to_json(double s) {
  return std::isfinite(s) ? nlohmann::json(s) : nlohmann::json(nullptr);
}

}  // namespace

std::unique_ptr<ExternalScorer> ExternalScorer::open(const std::string& endpoint,
                                                     std::chrono::milliseconds timeout) {
  constexpr std::string_view scheme = "exec:";
  if (endpoint.rfind(scheme, 0) != 0)
    throw ConfigError("scorer endpoint must start with 'exec:': '" + endpoint + "'");
  const std::string command = endpoint.substr(scheme.size());
  if (command.empty()) throw ConfigError("scorer endpoint has an empty command");

  int sv[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw TransportError("socketpair: " + errno_text());
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw TransportError("fork: " + errno_text());
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(sv[1]);
  return std::make_unique<ExternalScorer>(sv[0], sv[0], timeout, pid);
}

ExternalScorer::ExternalScorer(int read_fd, int write_fd, std::chrono::milliseconds timeout,
                               pid_t child)
    : read_fd_(read_fd), write_fd_(write_fd), timeout_(timeout), child_(child) {
  if (timeout_.count() <= 0) throw ConfigError("scorer timeout must be positive");
}

ExternalScorer::~ExternalScorer() {
  ::close(read_fd_);
  if (write_fd_ != read_fd_) ::close(write_fd_);
  if (child_ <= 0) return;
  // The peer sees end of input; give it a moment to exit on its own.
  const auto deadline = Clock::now() + std::chrono::seconds(2);
  while (Clock::now() < deadline) {
    if (::waitpid(child_, nullptr, WNOHANG) != 0) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ::kill(child_, SIGKILL);
  ::waitpid(child_, nullptr, 0);
}

void ExternalScorer::send_line(const std::string& line) const {
  std::size_t sent = 0;
  while (sent < line.size()) {
    ssize_t n = ::send(write_fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == ENOTSOCK) n = ::write(write_fd_, line.data() + sent, line.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError("scorer peer write failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string ExternalScorer::receive_line() const {
  const auto deadline = Clock::now() + timeout_;
  char chunk[65536];
  for (;;) {
    if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    const auto left =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw TransportError("scorer peer timed out");
    pollfd p{read_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(left));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportError("poll: " + errno_text());
    }
    if (ready == 0) throw TransportError("scorer peer timed out");
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw TransportError("scorer peer read failed: " + errno_text());
    }
    if (n == 0) throw TransportError("scorer peer closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

double ExternalScorer::score(std::string_view input, std::string_view candidate) const {
  const std::string c(candidate);
  return score_batch(input, std::span<const std::string>(&c, 1)).front();
}

std::vector<double> ExternalScorer::score_batch(std::string_view input,
                                                std::span<const std::string> candidates) const {
  std::lock_guard lock(mutex_);
  const std::uint64_t id = next_id_++;
  nlohmann::json request = {{"id", id},
                            {"input", std::string(input)},
                            {"candidates", std::vector<std::string>(candidates.begin(),
                                                                    candidates.end())}};
  send_line(request.dump() + '\n');
  const std::string line = receive_line();

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("scorer response is not JSON: '" + line.substr(0, 200) + "'");
  }
  if (!response.is_object()) throw ProtocolError("scorer response is not an object");
  const auto rid = response.find("id");
  if (rid == response.end() || !rid->is_number_integer() || rid->get<std::uint64_t>() != id)
    throw ProtocolError("scorer response id does not match request " + std::to_string(id));
  if (const auto err = response.find("error"); err != response.end())
    throw ProtocolError("scorer peer reported: " + err->dump());
  const auto scores = response.find("scores");
  if (scores == response.end() || !scores->is_array())
    throw ProtocolError("scorer response lacks a scores array");
  if (scores->size() != candidates.size())
    throw ProtocolError("scorer returned " + std::to_string(scores->size()) + " scores for " +
                        std::to_string(candidates.size()) + " candidates");
  std::vector<double> out;
  out.reserve(scores->size());
  for (const auto& s : *scores) {
    if (s.is_null())
      out.push_back(-std::numeric_limits<double>::infinity());
    else if (s.is_number())
      out.push_back(s.get<double>());
    else
      throw ProtocolError("scorer returned a non-numeric score: " + s.dump());
  }
  return out;
}

std::size_t serve_scorer(const Scorer& scorer, std::istream& in, std::ostream& out) {
  std::size_t answered = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json response = nlohmann::json::object();
    try {
      const auto request = nlohmann::json::parse(line);
      response["id"] = request.at("id");
      const auto input = request.at("input").get<std::string>();
      const auto candidates = request.at("candidates").get<std::vector<std::string>>();
      nlohmann::json scores = nlohmann::json::array();
      for (double s : scorer.score_batch(input, candidates)) scores.push_back(score_to_json(s));
      response["scores"] = std::move(scores);
      ++answered;
    } catch (const std::exception& e) {
      response.erase("scores");
      if (!response.contains("id")) response["id"] = nullptr;
      response["error"] = e.what();
    }
    out << response.dump() << '\n' << std::flush;
  }
  return answered;
}

TableScorer read_table_scorer(std::istream& in, double default_score) {
  TableScorer table(default_score);
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      table.set(j.at("input").get<std::string>(), j.at("candidate").get<std::string>(),
                j.at("score").get<double>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("table entry: ") + e.what(), line);
    }
  }
  return table;
}

}  // namespace sentscore
