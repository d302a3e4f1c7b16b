#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <thread>

namespace hh {

inline void cpu_relax() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield");
#endif
}

// Spin briefly, then yield, then sleep. Oversubscribed machines need the
// later stages or the lock holder never gets scheduled.
class Backoff {
public:
    void pause() {
        if (n_ < 4) {
            for (int i = 0; i < (1 << n_); ++i)
                cpu_relax();
        } else if (n_ < 64) {
            std::this_thread::yield();
        } else {
            std::this_thread::sleep_for(std::chrono::microseconds(50));
        }
        if (n_ < 1000)
            ++n_;
    }
    void reset() { n_ = 0; }

private:
    int n_ = 0;
};

/// Writer-preferring readers-writer spin lock. Non-reentrant; the ownership
/// ledger that rejects reentry lives in HeapHierarchy.
class RwLock {
public:
    void lock_shared() {
        Backoff backoff;
        for (;;) {
            if (waiting_writers_.load(std::memory_order_acquire) == 0) {
                std::uint32_t s = state_.load(std::memory_order_relaxed);
                if (!(s & kWriter) &&
                    state_.compare_exchange_weak(s, s + 1, std::memory_order_acquire, std::memory_order_relaxed))
                    return;
            }
            backoff.pause();
        }
    }

    bool try_lock_shared() {
        if (waiting_writers_.load(std::memory_order_acquire) != 0)
            return false;
        std::uint32_t s = state_.load(std::memory_order_relaxed);
        return !(s & kWriter) &&
               state_.compare_exchange_strong(s, s + 1, std::memory_order_acquire, std::memory_order_relaxed);
    }

    void unlock_shared() { state_.fetch_sub(1, std::memory_order_release); }

    void lock() {
        waiting_writers_.fetch_add(1, std::memory_order_acq_rel);
        Backoff backoff;
        for (;;) {
            std::uint32_t expected = 0;
            if (state_.compare_exchange_weak(expected, kWriter, std::memory_order_acquire, std::memory_order_relaxed))
                break;
            backoff.pause();
        }
        waiting_writers_.fetch_sub(1, std::memory_order_acq_rel);
    }

    bool try_lock() {
        std::uint32_t expected = 0;
        return state_.compare_exchange_strong(expected, kWriter, std::memory_order_acquire, std::memory_order_relaxed);
    }

    void unlock() { state_.store(0, std::memory_order_release); }

    std::uint32_t readers() const { return state_.load(std::memory_order_acquire) & ~kWriter; }
    bool write_held() const { return (state_.load(std::memory_order_acquire) & kWriter) != 0; }
    bool idle() const { return state_.load(std::memory_order_acquire) == 0; }
    std::uint32_t waiting_writers() const { return waiting_writers_.load(std::memory_order_acquire); }

private:
    static constexpr std::uint32_t kWriter = 1u << 31;
    std::atomic<std::uint32_t> state_{0};
    std::atomic<std::uint32_t> waiting_writers_{0};
};

} // namespace hh
