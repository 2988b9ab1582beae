#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>

namespace fincot::gateway {

// Spaces request starts at least 1/rate seconds apart. rate == 0 disables.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double requests_per_second = 0.0);

  // Blocks until this caller's slot.
  void acquire();

 private:
  Clock::duration interval_{};
  std::mutex mu_;
  Clock::time_point next_slot_{};
};

// Caps concurrent holders; records the high-water mark for tests.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int limit);

  void enter();
  void leave();
  int peak() const;
  int in_flight() const;

  class Hold {
   public:
    explicit Hold(ConcurrencyGate& g) : g_(g) { g_.enter(); }
    ~Hold() { g_.leave(); }
    Hold(const Hold&) = delete;
    Hold& operator=(const Hold&) = delete;

   private:
    ConcurrencyGate& g_;
  };

 private:
  int limit_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

}  // namespace fincot::gateway
