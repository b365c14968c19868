#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace salman {

using Index = std::ptrdiff_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk input. Carries the 1-based row (line) when known, 0 otherwise.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Input graph is not connected where connectivity is required.
class DisconnectedGraphError : public Error {
 public:
  using Error::Error;
};

// Non-fatal diagnostics. The default sink writes "warning: ..." to stderr.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

/// Scoped replacement of the warning sink; restores the previous sink on exit.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(WarningSink sink);
  ~ScopedWarningSink();
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  WarningSink previous_;
};

// Worker count used by parallel loops. 0 means "hardware concurrency".
void set_num_threads(int threads);
int num_threads();

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write results by index so output never depends on the worker count.
void parallel_for(Index n, const std::function<void(Index)>& body);

/// Generator for one pipeline stage; distinct stages get decorrelated streams
/// from the same user seed.
std::mt19937_64 stage_rng(std::uint64_t seed, std::string_view stage);

}  // namespace salman
