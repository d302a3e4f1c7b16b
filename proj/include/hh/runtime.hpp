#pragma once

#include <atomic>
#include <bit>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "hh/collector.hpp"
#include "hh/memops.hpp"

namespace hh {

enum class AuditMode : std::uint8_t { Off, Joins, EveryOp };

inline const char* to_string(AuditMode m) {
    switch (m) {
    case AuditMode::Off: return "off";
    case AuditMode::Joins: return "joins";
    case AuditMode::EveryOp: return "every-op";
    }
    return "?";
}

struct RuntimeConfig {
    unsigned workers = 1;
    std::uint64_t seed = 1;
    bool deterministic = false;
    std::uint64_t gc_threshold = 64 * 4096;
    AuditMode audit = AuditMode::Off;
    bool trace = false;
    StoreConfig store{};
};

struct Unit {
    friend constexpr bool operator==(Unit, Unit) = default;
};

struct StealRecord {
    WorkerId thief;
    WorkerId victim;
    TaskId parent_task;
    friend bool operator==(const StealRecord&, const StealRecord&) = default;
};

namespace detail {

template <typename Fn>
using thunk_result_t = std::conditional_t<std::is_void_v<std::invoke_result_t<Fn&>>, Unit,
                                          std::decay_t<std::invoke_result_t<Fn&>>>;

template <typename Fn>
thunk_result_t<Fn> invoke_thunk(Fn& fn) {
    if constexpr (std::is_void_v<std::invoke_result_t<Fn&>>) {
        fn();
        return Unit{};
    } else {
        return fn();
    }
}

// Task results travel through a one-word join record.
template <typename T>
concept WordResult = std::is_trivially_copyable_v<T> && sizeof(T) <= sizeof(Word) && std::is_default_constructible_v<T>;

template <WordResult T>
Word encode_result(const T& v) {
    Word w = 0;
    std::memcpy(&w, &v, sizeof(T));
    return w;
}

template <WordResult T>
T decode_result(Word w) {
    T v{};
    std::memcpy(&v, &w, sizeof(T));
    return v;
}

// ObjRef results are rooted while the sibling thunk runs and may collect.
template <typename T>
class ResultSlot {
public:
    void set(T v) { v_ = v; }
    T get() const { return *v_; }

private:
    std::optional<T> v_;
};

template <>
class ResultSlot<ObjRef> {
public:
    void set(ObjRef v) { cell_ = v; }
    ObjRef get() const { return cell_.get(); }

private:
    Local cell_;
};

} // namespace detail

class Runtime {
public:
    explicit Runtime(RuntimeConfig config = {})
        : config_(config), store_(config.store), hierarchy_(store_, &instr_),
          memory_(hierarchy_, instr_, MemoryConfig{config.gc_threshold}), collector_(hierarchy_, &instr_),
          rng_(config.seed) {
        HH_CHECK(config_.workers >= 1, "runtime needs at least one worker");
        instr_.set_tracing(config_.trace);
        for (unsigned i = 0; i < config_.workers; ++i) {
            auto w = std::make_unique<Worker>();
            w->id = i;
            w->stats = &instr_.register_block(i);
            w->rng.seed(config_.seed * 0x9E3779B97F4A7C15ull + i);
            workers_.push_back(std::move(w));
        }
        memory_.set_collect_hook([this](TaskContext& cx, std::vector<ObjRef>& extra) { collect_leaf(cx, extra); });
        if (config_.audit != AuditMode::Off)
            memory_.set_world_lock(&world_);
    }

    Runtime(const Runtime&) = delete;
    Runtime& operator=(const Runtime&) = delete;

    const RuntimeConfig& config() const { return config_; }
    ObjectStore& store() { return store_; }
    HeapHierarchy& hierarchy() { return hierarchy_; }
    Instrumentation& instrumentation() { return instr_; }
    Memory& memory() { return memory_; }
    Collector& collector() { return collector_; }
    RootSet& roots() { return roots_; }
    RwLock& world_lock() { return world_; }

    /// Called after every join, outside any memory operation.
    void set_join_hook(std::function<void()> hook) { join_hook_ = std::move(hook); }
    void set_after_op(std::function<void()> fn) { memory_.set_after_op(std::move(fn)); }

    /// Runs fn as the root task on the calling thread plus workers-1 helpers.
    template <typename Fn>
    detail::thunk_result_t<Fn> run(Fn&& fn) {
        HH_CHECK(current_context_or_null() == nullptr, "runtime started from inside a task");
        done_.store(false);
        holder_ = 0;
        std::vector<std::thread> threads;
        for (unsigned i = 1; i < config_.workers; ++i)
            threads.emplace_back([this, i] { worker_loop(*workers_[i]); });

        Worker& w0 = *workers_[0];
        Superheap sh(hierarchy_, hierarchy_.root());
        TaskContext cx{&memory_, this, next_task_id(), hierarchy_.root(), 0, &w0.roots, w0.stats, &sh};
        w0.stats->tasks.add();
        std::exception_ptr error;
        std::optional<detail::thunk_result_t<Fn>> result;
        {
            ContextScope scope(cx);
            try {
                result = detail::invoke_thunk(fn);
            } catch (...) {
                error = std::current_exception();
            }
        }
        {
            std::lock_guard lock(baton_mutex_);
            done_.store(true);
        }
        baton_cv_.notify_all();
        for (auto& t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
        return *result;
    }

    template <typename F, typename G>
    std::pair<detail::thunk_result_t<F>, detail::thunk_result_t<G>> forkjoin(F&& f, G&& g) {
        using RF = detail::thunk_result_t<F>;
        using RG = detail::thunk_result_t<G>;
        static_assert(detail::WordResult<RF> && detail::WordResult<RG>,
                      "forkjoin results must be ObjRef or word-sized scalars");
        TaskContext& cx = current_context();
        HH_CHECK(cx.runtime == this && !cx.in_op, "forkjoin outside a task of this runtime");
        Worker& w = *workers_[cx.worker];
        const HeapId parent_heap = cx.heap;
        HeapId hc;
        {
            WorldShared ws(*this);
            hc = cx.superheap->push_child();
        }
        cx.stats->forks.add();
        instr_.trace(TraceEventType::Fork, SubjectKind::Heap, hc);

        detail::ResultSlot<RF> rf;
        detail::ResultSlot<RG> rg;
        std::exception_ptr ef;
        std::exception_ptr eg;

        Job job;
        job.parent_heap = parent_heap;
        job.parent_superheap = cx.superheap;
        job.parent_task = cx.task;
        job.invoke = [&g](Job& j) {
            Word bits = detail::encode_result(detail::invoke_thunk(g));
            j.result_bits = bits;
        };
        push(w, &job);
        yield_point(w);

        run_inline(cx, hc, [&] { rf.set(detail::invoke_thunk(f)); }, ef);
        const bool stolen = !try_pop(w, &job);
        if (!stolen)
            run_inline(cx, hc, [&] { rg.set(detail::invoke_thunk(g)); }, eg);
        else
            wait_for(w, job);

        {
            WorldShared ws(*this);
            if (stolen)
                hierarchy_.join_heap(parent_heap, job.heap);
            cx.superheap->pop_and_join();
        }
        if (stolen) {
            eg = job.error;
            if (!eg)
                rg.set(detail::decode_result<RG>(
                    store_.slot(job.record, kRecordResult).load(std::memory_order_acquire)));
        }
        instr_.trace(TraceEventType::Join, SubjectKind::Heap, parent_heap);
        if (join_hook_)
            join_hook_();
        if (ef)
            std::rethrow_exception(ef);
        if (eg)
            std::rethrow_exception(eg);
        return {rf.get(), rg.get()};
    }

    std::vector<StealRecord> steal_log() const {
        std::lock_guard lock(log_mutex_);
        return steal_log_;
    }

    std::uint64_t tasks_created() const { return next_task_.load() - 1; }

    /// Collects the subtree under top using every worker's roots and the
    /// registered root set. Only call while nothing runs in that subtree.
    CollectionReport collect_subtree(HeapId top) {
        return collector_.collect(top, [&](auto&& fn) {
            for (auto& w : workers_)
                w->roots.for_each(fn);
            roots_.for_each(fn);
        });
    }

    /// Runs fn with every memory operation excluded (audit modes only).
    template <typename Fn>
    void exclusive(Fn&& fn) {
        if (config_.audit == AuditMode::Off) {
            fn();
            return;
        }
        world_.lock();
        try {
            fn();
        } catch (...) {
            world_.unlock();
            throw;
        }
        world_.unlock();
    }

private:
    static constexpr std::size_t kRecordState = 0;
    static constexpr std::size_t kRecordResult = 1;

    struct Job {
        HeapId parent_heap = kNoHeap;
        Superheap* parent_superheap = nullptr;
        TaskId parent_task = 0;
        std::function<void(Job&)> invoke;
        HeapId heap = kNoHeap;
        ObjRef record;
        Word result_bits = 0;
        std::exception_ptr error;
        std::atomic<bool> done{false};
    };

    struct Worker {
        WorkerId id = 0;
        std::mutex mutex;
        std::deque<Job*> deque;
        RootStack roots;
        WorkerStats* stats = nullptr;
        std::mt19937_64 rng;
    };

    class WorldShared {
    public:
        explicit WorldShared(Runtime& rt)
            : rt_(rt) {
            if (rt_.config_.audit != AuditMode::Off)
                rt_.world_.lock_shared();
        }
        ~WorldShared() {
            if (rt_.config_.audit != AuditMode::Off)
                rt_.world_.unlock_shared();
        }

    private:
        Runtime& rt_;
    };

    TaskId next_task_id() { return next_task_.fetch_add(1); }

    template <typename Body>
    void run_inline(TaskContext& parent, HeapId heap, Body&& body, std::exception_ptr& error) {
        TaskContext child = parent;
        child.task = next_task_id();
        child.heap = heap;
        child.op_locks = 0;
        child.in_op = false;
        parent.stats->tasks.add();
        ContextScope scope(child);
        try {
            body();
        } catch (...) {
            error = std::current_exception();
        }
    }

    void push(Worker& w, Job* job) {
        std::lock_guard lock(w.mutex);
        w.deque.push_back(job);
    }

    bool try_pop(Worker& w, Job* job) {
        std::lock_guard lock(w.mutex);
        if (!w.deque.empty() && w.deque.back() == job) {
            w.deque.pop_back();
            return true;
        }
        return false;
    }

    Job* try_steal(Worker& thief) {
        const unsigned n = config_.workers;
        if (n < 2)
            return nullptr;
        std::mt19937_64& rng = config_.deterministic ? rng_ : thief.rng;
        WorkerId victim = static_cast<WorkerId>(rng() % (n - 1));
        if (victim >= thief.id)
            ++victim;
        Worker& v = *workers_[victim];
        Job* job = nullptr;
        {
            std::lock_guard lock(v.mutex);
            if (v.deque.empty())
                return nullptr;
            job = v.deque.front();
            v.deque.pop_front();
        }
        {
            std::lock_guard lock(log_mutex_);
            steal_log_.push_back({thief.id, victim, job->parent_task});
        }
        thief.stats->steals.add();
        return job;
    }

    /// Runs a stolen thunk in a fresh heap under the forking task's heap, on
    /// its own superheap.
    void execute_stolen(Worker& w, Job& job) {
        {
            WorldShared ws(*this);
            job.heap = hierarchy_.new_child_heap(job.parent_heap);
        }
        Superheap sh(hierarchy_, job.heap, job.parent_superheap);
        TaskContext cx{&memory_, this, next_task_id(), job.heap, w.id, &w.roots, w.stats, &sh};
        w.stats->tasks.add();
        {
            ContextScope scope(cx);
            instr_.trace(TraceEventType::Steal, SubjectKind::Heap, job.heap);
            try {
                job.invoke(job);
            } catch (...) {
                job.error = std::current_exception();
            }
        }
        {
            std::lock_guard lock(global_mutex_);
            Word init[2] = {1, job.result_bits};
            job.record = hierarchy_.fresh_words(
                hierarchy_.global(), ObjectLayout::array(fields::scalar_mut, 2), std::span<const Word>(init, 2));
        }
        (void)kRecordState;
        job.done.store(true, std::memory_order_release);
    }

    void wait_for(Worker& w, Job& job) {
        Backoff backoff;
        while (!job.done.load(std::memory_order_acquire)) {
            if (Job* j = try_steal(w)) {
                execute_stolen(w, *j);
                backoff.reset();
            } else if (config_.deterministic) {
                yield_point(w, true);
            } else {
                backoff.pause();
            }
        }
    }

    void worker_loop(Worker& w) {
        Backoff backoff;
        if (config_.deterministic)
            wait_baton(w);
        while (!done_.load(std::memory_order_acquire)) {
            if (Job* j = try_steal(w)) {
                execute_stolen(w, *j);
                backoff.reset();
            } else if (config_.deterministic) {
                yield_point(w, true);
            } else {
                backoff.pause();
            }
        }
    }

    // Deterministic mode runs one worker at a time; the seeded generator
    // decides who runs next at every yield point.
    void yield_point(Worker& w, bool idle = false) {
        if (!config_.deterministic || config_.workers < 2)
            return;
        std::unique_lock lock(baton_mutex_);
        WorkerId next = static_cast<WorkerId>(rng_() % config_.workers);
        if (next == w.id) {
            if (!idle)
                return;
            next = (w.id + 1) % config_.workers;
        }
        holder_ = next;
        baton_cv_.notify_all();
        baton_cv_.wait(lock, [&] { return holder_ == w.id || done_.load(); });
    }

    void wait_baton(Worker& w) {
        std::unique_lock lock(baton_mutex_);
        baton_cv_.wait(lock, [&] { return holder_ == w.id || done_.load(); });
    }

    void collect_leaf(TaskContext& cx, std::vector<ObjRef>& extra) {
        if (!hierarchy_.children(cx.heap).empty())
            return;
        collector_.collect(cx.heap, [&](auto&& fn) {
            cx.roots->for_each(fn);
            for (ObjRef& r : extra)
                fn(r);
            roots_.for_each(fn);
        });
    }

    RuntimeConfig config_;
    Instrumentation instr_;
    ObjectStore store_;
    HeapHierarchy hierarchy_;
    Memory memory_;
    Collector collector_;
    RootSet roots_;
    RwLock world_;
    std::function<void()> join_hook_;
    std::vector<std::unique_ptr<Worker>> workers_;
    std::atomic<TaskId> next_task_{1};
    std::atomic<bool> done_{false};
    std::mutex global_mutex_;
    mutable std::mutex log_mutex_;
    std::vector<StealRecord> steal_log_;
    std::mt19937_64 rng_;
    std::mutex baton_mutex_;
    std::condition_variable baton_cv_;
    WorkerId holder_ = 0;
};

inline Memory& memory() { return *current_context().memory; }
inline Runtime& runtime() { return *current_context().runtime; }
inline TaskId current_task() { return current_context().task; }
inline HeapId current_heap() { return current_context().heap; }

template <typename F, typename G>
auto forkjoin(F&& f, G&& g) {
    return runtime().forkjoin(std::forward<F>(f), std::forward<G>(g));
}

} // namespace hh
