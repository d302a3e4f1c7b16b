#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include "hh/context.hpp"

namespace hh {

// Cost taxonomy of memory operations: operation column x locality row.
enum class OpKind : std::uint8_t { ReadImmutable, ReadMutable, WriteScalar, WriteRefNonPromoting, WriteRefPromoting };
enum class Locality : std::uint8_t { Local, Distant, Promoted };

inline constexpr std::size_t kOpKinds = 5;
inline constexpr std::size_t kLocalities = 3;
inline constexpr std::size_t kOpClasses = kOpKinds * kLocalities;

struct OpClassKey {
    OpKind op;
    Locality locality;

    constexpr std::size_t index() const {
        return static_cast<std::size_t>(op) * kLocalities + static_cast<std::size_t>(locality);
    }
    static constexpr OpClassKey from_index(std::size_t i) {
        return {static_cast<OpKind>(i / kLocalities), static_cast<Locality>(i % kLocalities)};
    }
    // Local objects never take the promoting path.
    constexpr bool possible() const { return !(op == OpKind::WriteRefPromoting && locality == Locality::Local); }
    friend constexpr bool operator==(OpClassKey, OpClassKey) = default;
};

inline const char* to_string(OpKind op) {
    switch (op) {
    case OpKind::ReadImmutable: return "ReadImmutable";
    case OpKind::ReadMutable: return "ReadMutable";
    case OpKind::WriteScalar: return "WriteScalar";
    case OpKind::WriteRefNonPromoting: return "WriteRefNonPromoting";
    case OpKind::WriteRefPromoting: return "WriteRefPromoting";
    }
    return "?";
}

inline const char* to_string(Locality l) {
    switch (l) {
    case Locality::Local: return "Local";
    case Locality::Distant: return "Distant";
    case Locality::Promoted: return "Promoted";
    }
    return "?";
}

inline std::string to_string(OpClassKey k) { return std::string(to_string(k.op)) + "/" + to_string(k.locality); }

enum class TraceEventType : std::uint8_t {
    Alloc, ReadImm, ReadMut, WriteScalar, WriteRef, PromoteStart, PromoteEnd,
    Lock, Unlock, CollectStart, CollectEnd, Fork, Join, Steal,
};

inline const char* to_string(TraceEventType e) {
    static constexpr const char* names[] = {"alloc", "readImm", "readMut", "writeScalar", "writeRef",
                                            "promoteStart", "promoteEnd", "lock", "unlock", "collectStart",
                                            "collectEnd", "fork", "join", "steal"};
    return names[static_cast<std::size_t>(e)];
}

enum class SubjectKind : std::uint8_t { None, Object, Heap };

struct TraceEvent {
    std::uint64_t ts_ns = 0;
    TaskId task = 0;
    Word subject = 0;
    WorkerId worker = 0;
    TraceEventType type = TraceEventType::Alloc;
    SubjectKind subject_kind = SubjectKind::None;
    std::int8_t op_class = -1;
};

inline constexpr int kTraceSchemaVersion = 1;

/// Monotone counter written by exactly one thread; readers may observe it
/// concurrently.
class Counter {
public:
    void add(std::uint64_t n = 1) { v_.store(v_.load(std::memory_order_relaxed) + n, std::memory_order_relaxed); }
    std::uint64_t get() const { return v_.load(std::memory_order_relaxed); }

private:
    std::atomic<std::uint64_t> v_{0};
};

struct alignas(64) WorkerStats {
    WorkerId worker = 0;
    std::array<Counter, kOpClasses> ops;
    std::array<Counter, kOpClasses> op_locks;
    Counter allocs;
    Counter alloc_bytes;
    Counter alloc_locks;
    Counter other_locks;
    Counter promotions;
    Counter objects_promoted;
    Counter bytes_promoted;
    Counter collections;
    Counter bytes_collected;
    Counter bytes_copied;
    Counter duplicates_elided;
    Counter gc_nanos;
    Counter steals;
    Counter tasks;
    Counter forks;
    std::vector<TraceEvent> trace;
};

struct StatTotals {
    std::array<std::uint64_t, kOpClasses> ops{};
    std::array<std::uint64_t, kOpClasses> op_locks{};
    std::uint64_t allocs = 0;
    std::uint64_t alloc_bytes = 0;
    std::uint64_t alloc_locks = 0;
    std::uint64_t other_locks = 0;
    std::uint64_t promotions = 0;
    std::uint64_t objects_promoted = 0;
    std::uint64_t bytes_promoted = 0;
    std::uint64_t collections = 0;
    std::uint64_t bytes_collected = 0;
    std::uint64_t bytes_copied = 0;
    std::uint64_t duplicates_elided = 0;
    std::uint64_t gc_nanos = 0;
    std::uint64_t steals = 0;
    std::uint64_t tasks = 0;
    std::uint64_t forks = 0;

    std::uint64_t count(OpClassKey k) const { return ops[k.index()]; }
    std::uint64_t locks(OpClassKey k) const { return op_locks[k.index()]; }
    std::uint64_t total_ops() const {
        std::uint64_t s = 0;
        for (auto v : ops)
            s += v;
        return s;
    }
    std::uint64_t locks_for(OpKind op) const {
        std::uint64_t s = 0;
        for (std::size_t l = 0; l < kLocalities; ++l)
            s += op_locks[OpClassKey{op, static_cast<Locality>(l)}.index()];
        return s;
    }
    std::uint64_t total_locks() const {
        std::uint64_t s = alloc_locks + other_locks;
        for (auto v : op_locks)
            s += v;
        return s;
    }
};

/// Per-thread counters, trace buffers and the lock-order ledger.
class Instrumentation {
public:
    Instrumentation()
        : id_(next_id()), epoch_(std::chrono::steady_clock::now()) {}

    Instrumentation(const Instrumentation&) = delete;
    Instrumentation& operator=(const Instrumentation&) = delete;

    WorkerStats& register_block(WorkerId worker) {
        std::lock_guard lock(mutex_);
        blocks_.push_back(std::make_unique<WorkerStats>());
        blocks_.back()->worker = worker;
        return *blocks_.back();
    }

    /// Counters of the calling thread when it is not bound to a task.
    WorkerStats& thread_block() {
        struct Cache {
            std::uint64_t owner = 0;
            WorkerStats* block = nullptr;
        };
        thread_local Cache cache;
        if (cache.owner != id_) {
            cache.block = &register_block(kExternalWorker);
            cache.owner = id_;
        }
        return *cache.block;
    }

    WorkerStats& current_block() {
        TaskContext* cx = current_context_or_null();
        return cx && cx->stats ? *cx->stats : thread_block();
    }

    bool tracing() const { return tracing_.load(std::memory_order_relaxed); }
    void set_tracing(bool on) { tracing_.store(on, std::memory_order_relaxed); }

    std::uint64_t now_ns() const {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - epoch_).count());
    }

    void trace(TraceEventType type, SubjectKind kind, Word subject, int op_class = -1) {
        if (!tracing())
            return;
        TaskContext* cx = current_context_or_null();
        WorkerStats& b = current_block();
        b.trace.push_back(TraceEvent{now_ns(), cx ? cx->task : 0, subject, b.worker, type, kind,
                                     static_cast<std::int8_t>(op_class)});
    }

    void record_op(OpClassKey key, std::uint32_t locks) {
        WorkerStats& b = current_block();
        b.ops[key.index()].add();
        if (locks)
            b.op_locks[key.index()].add(locks);
    }

    void note_lock_order_violation() { lock_order_violations_.fetch_add(1, std::memory_order_relaxed); }
    std::uint64_t lock_order_violations() const { return lock_order_violations_.load(std::memory_order_relaxed); }

    StatTotals totals() const {
        StatTotals t;
        std::lock_guard lock(mutex_);
        for (const auto& b : blocks_) {
            for (std::size_t i = 0; i < kOpClasses; ++i) {
                t.ops[i] += b->ops[i].get();
                t.op_locks[i] += b->op_locks[i].get();
            }
            t.allocs += b->allocs.get();
            t.alloc_bytes += b->alloc_bytes.get();
            t.alloc_locks += b->alloc_locks.get();
            t.other_locks += b->other_locks.get();
            t.promotions += b->promotions.get();
            t.objects_promoted += b->objects_promoted.get();
            t.bytes_promoted += b->bytes_promoted.get();
            t.collections += b->collections.get();
            t.bytes_collected += b->bytes_collected.get();
            t.bytes_copied += b->bytes_copied.get();
            t.duplicates_elided += b->duplicates_elided.get();
            t.gc_nanos += b->gc_nanos.get();
            t.steals += b->steals.get();
            t.tasks += b->tasks.get();
            t.forks += b->forks.get();
        }
        return t;
    }

    /// All trace events, ordered by timestamp. Call at a quiescent point.
    std::vector<TraceEvent> trace_events() const {
        std::vector<TraceEvent> all;
        std::lock_guard lock(mutex_);
        for (const auto& b : blocks_)
            all.insert(all.end(), b->trace.begin(), b->trace.end());
        std::stable_sort(all.begin(), all.end(),
                         [](const TraceEvent& a, const TraceEvent& b) { return a.ts_ns < b.ts_ns; });
        return all;
    }

    static constexpr WorkerId kExternalWorker = 0xFFFFFFFFu;

private:
    static std::uint64_t next_id() {
        static std::atomic<std::uint64_t> counter{1};
        return counter.fetch_add(1);
    }

    std::uint64_t id_;
    std::chrono::steady_clock::time_point epoch_;
    std::atomic<bool> tracing_{false};
    std::atomic<std::uint64_t> lock_order_violations_{0};
    mutable std::mutex mutex_;
    std::deque<std::unique_ptr<WorkerStats>> blocks_;
};

/// Writes one JSON object per line. Field order is fixed:
/// v, ts, worker, task, event, subject, op_class.
inline void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
    for (const auto& e : events) {
        out << "{\"v\":" << kTraceSchemaVersion << ",\"ts\":" << e.ts_ns << ",\"worker\":";
        if (e.worker == Instrumentation::kExternalWorker)
            out << "null";
        else
            out << e.worker;
        out << ",\"task\":" << e.task << ",\"event\":\"" << to_string(e.type) << "\",\"subject\":";
        switch (e.subject_kind) {
        case SubjectKind::None: out << "null"; break;
        case SubjectKind::Object: {
            auto r = ObjRef::from_bits(e.subject);
            out << "\"obj:" << r.chunk() << ":" << r.slot() << "\"";
            break;
        }
        case SubjectKind::Heap: out << "\"heap:" << e.subject << "\""; break;
        }
        out << ",\"op_class\":";
        if (e.op_class < 0)
            out << "null";
        else
            out << "\"" << to_string(OpClassKey::from_index(static_cast<std::size_t>(e.op_class))) << "\"";
        out << "}\n";
    }
}

} // namespace hh
