#pragma once

// Scoring by another process over newline-delimited JSON.
//
//   request:  {"id": 7, "input": "...", "candidates": ["...", ...]}
//   response: {"id": 7, "scores": [-1.25, ...]}
//
// Non-finite scores travel as null and read back as -inf. A peer may answer
// {"id": 7, "error": "..."} instead of scores.

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>

#include "sentscore/scorer.hpp"

namespace sentscore {

class ExternalScorer final : public Scorer {
 public:
  static constexpr std::chrono::milliseconds kDefaultTimeout{30000};

  // Endpoint "exec:<shell command>" starts the command with its stdin and
  // stdout connected to this session. Throws ConfigError for other schemes
  // and TransportError when the process cannot be started.
  static std::unique_ptr<ExternalScorer> open(const std::string& endpoint,
                                              std::chrono::milliseconds timeout = kDefaultTimeout);

  // Adopts the descriptors (the same one may be passed twice).
  ExternalScorer(int read_fd, int write_fd, std::chrono::milliseconds timeout,
                 pid_t child = -1);
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;
  ~ExternalScorer() override;

  // Malformed or misaligned responses throw ProtocolError; timeouts, closed
  // peers and I/O failures throw TransportError.
  double score(std::string_view input, std::string_view candidate) const override;
  std::vector<double> score_batch(std::string_view input,
                                  std::span<const std::string> candidates) const override;
  bool in_process() const noexcept override { return false; }

 private:
  void send_line(const std::string& line) const;
  std::string receive_line() const;

  int read_fd_;
  int write_fd_;
  std::chrono::milliseconds timeout_;
  pid_t child_;
  mutable std::mutex mutex_;
  mutable std::uint64_t next_id_ = 1;
  mutable std::string buffer_;
};

// Reference peer: answers requests from `in` on `out` until end of input.
// Unparseable requests get an error response; returns the number of requests
// answered with scores.
std::size_t serve_scorer(const Scorer& scorer, std::istream& in, std::ostream& out);

// Table entries as JSON lines {"input": ..., "candidate": ..., "score": ...}.
TableScorer read_table_scorer(std::istream& in, double default_score);

}  // namespace sentscore
