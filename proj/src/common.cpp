#include "salman/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace salman {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink_ref() {
  static WarningSink sink = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return sink;
}

std::atomic<int> g_threads{0};

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  sink_ref() = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink_ref()) sink_ref()(message);
}

ScopedWarningSink::ScopedWarningSink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  previous_ = std::exchange(sink_ref(), std::move(sink));
}

ScopedWarningSink::~ScopedWarningSink() {
  std::lock_guard lock(sink_mutex());
  sink_ref() = std::move(previous_);
}

void set_num_threads(int threads) { g_threads.store(std::max(0, threads)); }

int num_threads() {
  int t = g_threads.load();
  if (t > 0) return t;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void parallel_for(Index n, const std::function<void(Index)>& body) {
  if (n <= 0) return;
  const Index workers = std::min<Index>(num_threads(), n);
  if (workers <= 1 || n < 64) {
    for (Index i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const Index chunk = std::max<Index>(16, n / (workers * 8));
  auto run = [&] {
    for (;;) {
      const Index begin = next.fetch_add(chunk);
      if (begin >= n) return;
      const Index end = std::min(n, begin + chunk);
      try {
        for (Index i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (Index w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::mt19937_64 stage_rng(std::uint64_t seed, std::string_view stage) {
  // FNV-1a over the stage tag, mixed into the user seed.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : stage) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace salman
