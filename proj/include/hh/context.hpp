#pragma once

#include <algorithm>
#include <vector>

#include "hh/object_store.hpp"

namespace hh {

class Memory;
class Runtime;
class Superheap;
struct WorkerStats;

/// Precise roots of one worker thread. Handles register in LIFO order, which
/// nested task execution on a single thread preserves.
class RootStack {
public:
    void push(ObjRef* cell) { cells_.push_back(cell); }
    void pop(ObjRef* cell) {
        HH_CHECK(!cells_.empty() && cells_.back() == cell, "root handles released out of order");
        cells_.pop_back();
    }
    void push(std::vector<ObjRef>* refs) { vectors_.push_back(refs); }
    void pop(std::vector<ObjRef>* refs) {
        HH_CHECK(!vectors_.empty() && vectors_.back() == refs, "root vectors released out of order");
        vectors_.pop_back();
    }

    template <typename Fn>
    void for_each(Fn&& fn) {
        for (ObjRef* cell : cells_)
            fn(*cell);
        for (auto* v : vectors_)
            for (ObjRef& r : *v)
                fn(r);
    }

    std::size_t size() const { return cells_.size() + vectors_.size(); }

private:
    std::vector<ObjRef*> cells_;
    std::vector<std::vector<ObjRef>*> vectors_;
};

/// What the executing thread is currently doing on behalf of the runtime:
/// the task, its allocation heap and the worker it runs on.
struct TaskContext {
    Memory* memory = nullptr;
    Runtime* runtime = nullptr;
    TaskId task = 0;
    HeapId heap = kNoHeap;
    WorkerId worker = 0;
    RootStack* roots = nullptr;
    WorkerStats* stats = nullptr;
    Superheap* superheap = nullptr;
    std::uint32_t op_locks = 0;
    bool in_op = false;
};

namespace detail {
inline TaskContext*& context_slot() {
    thread_local TaskContext* current = nullptr;
    return current;
}
} // namespace detail

inline TaskContext* current_context_or_null() { return detail::context_slot(); }

inline TaskContext& current_context() {
    TaskContext* cx = detail::context_slot();
    HH_CHECK(cx != nullptr, "memory operation outside of any task");
    return *cx;
}

/// Binds the calling thread to a task context for the scope's lifetime.
class ContextScope {
public:
    explicit ContextScope(TaskContext& cx)
        : prev_(detail::context_slot()) {
        detail::context_slot() = &cx;
    }
    ~ContextScope() { detail::context_slot() = prev_; }
    ContextScope(const ContextScope&) = delete;
    ContextScope& operator=(const ContextScope&) = delete;

private:
    TaskContext* prev_;
};

/// A rooted reference. Collections of the current leaf heap update it.
class Local {
public:
    explicit Local(ObjRef ref = ObjRef::null())
        : ref_(ref), roots_(current_context().roots) {
        HH_CHECK(roots_ != nullptr, "task context has no root stack");
        roots_->push(&ref_);
    }
    ~Local() { roots_->pop(&ref_); }
    Local(const Local&) = delete;
    Local& operator=(const Local&) = delete;

    ObjRef get() const { return ref_; }
    void set(ObjRef ref) { ref_ = ref; }
    operator ObjRef() const { return ref_; }
    Local& operator=(ObjRef ref) {
        ref_ = ref;
        return *this;
    }

private:
    ObjRef ref_;
    RootStack* roots_;
};

/// A rooted, growable list of references.
class LocalVector {
public:
    LocalVector()
        : roots_(current_context().roots) {
        HH_CHECK(roots_ != nullptr, "task context has no root stack");
        roots_->push(&refs_);
    }
    ~LocalVector() { roots_->pop(&refs_); }
    LocalVector(const LocalVector&) = delete;
    LocalVector& operator=(const LocalVector&) = delete;

    std::vector<ObjRef>& refs() { return refs_; }
    const std::vector<ObjRef>& refs() const { return refs_; }
    ObjRef operator[](std::size_t i) const { return refs_[i]; }
    std::size_t size() const { return refs_.size(); }
    void push_back(ObjRef r) { refs_.push_back(r); }

private:
    std::vector<ObjRef> refs_;
    RootStack* roots_;
};

} // namespace hh
