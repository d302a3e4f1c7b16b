#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <unordered_set>
#include <vector>

#include "hh/heap_hierarchy.hpp"

namespace hh {

using RootId = std::uint64_t;

/// Explicitly registered root cells. Collections covering a cell's referent
/// rewrite the cell in place.
class RootSet {
public:
    RootId register_root(TaskId task, ObjRef* cell) {
        HH_CHECK(cell != nullptr, "root cell is null");
        std::lock_guard lock(mutex_);
        RootId id = next_++;
        roots_.emplace(id, Entry{task, cell});
        return id;
    }

    void unregister_root(RootId id) {
        std::lock_guard lock(mutex_);
        HH_CHECK(roots_.erase(id) == 1, "root unregistered twice or never registered");
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return roots_.size();
    }

    template <typename Fn>
    void for_each(Fn&& fn) {
        std::lock_guard lock(mutex_);
        for (auto& [id, e] : roots_)
            fn(*e.cell);
    }

private:
    struct Entry {
        TaskId task;
        ObjRef* cell;
    };
    mutable std::mutex mutex_;
    RootId next_ = 1;
    std::map<RootId, Entry> roots_;
};

struct CollectionReport {
    std::uint64_t objects_copied = 0;
    std::uint64_t bytes_copied = 0;
    std::uint64_t duplicates_elided = 0;
    std::uint64_t heaps_collected = 0;
    std::uint64_t objects_inspected = 0;
    std::uint64_t bytes_before = 0;
    std::uint64_t bytes_after = 0;
};

/// One semispace collection of the subtree under a top heap. Nothing in the
/// subtree may run while it is alive.
class Collection {
public:
    Collection(HeapHierarchy& hierarchy, HeapId top, Instrumentation* instr = nullptr)
        : hierarchy_(hierarchy), store_(hierarchy.store()), instr_(instr), top_(top),
          start_(std::chrono::steady_clock::now()) {
        heaps_ = hierarchy_.subtree(top);
        for (HeapId h : heaps_) {
            const Heap& x = hierarchy_.heap(h);
            HH_CHECK(x.rw().idle() && !hierarchy_.holds_lock(h), "collection of a non-quiescent subtree");
            report_.bytes_before += x.occupancy();
        }
        for (HeapId h : heaps_)
            hierarchy_.begin_collection(h);
        in_subtree_.insert(heaps_.begin(), heaps_.end());
        if (instr_)
            instr_->trace(TraceEventType::CollectStart, SubjectKind::Heap, top);
    }

    ~Collection() {
        if (!finished_)
            finish();
    }

    Collection(const Collection&) = delete;
    Collection& operator=(const Collection&) = delete;

    HeapId top() const { return top_; }
    const std::vector<HeapId>& heaps() const { return heaps_; }

    /// Returns obj's surviving copy; new copies are queued for scanning.
    ObjRef copy(ObjRef obj) {
        if (obj.is_null())
            return obj;
        ++report_.objects_inspected;
        for (;;) {
            HeapId h = store_.heap_of(obj);
            if (hierarchy_.is_to_space(h) || !in_subtree_.contains(h))
                return obj;
            ObjRef next = store_.fwd_or_null(obj);
            if (!next)
                break;
            // A promotion link rather than an evacuation link.
            if (!hierarchy_.is_to_space(store_.heap_of(next)) && elided_.insert(obj).second)
                ++report_.duplicates_elided;
            obj = next;
        }
        HeapId to = hierarchy_.to_space_of(store_.heap_of(obj));
        auto layout = store_.layout_of(obj);
        ObjRef dst = hierarchy_.fresh_blank(to, layout);
        for (std::size_t k = 0, n = layout.arity(); k < n; ++k)
            store_.slot(dst, k).store(store_.slot(obj, k).load(std::memory_order_relaxed), std::memory_order_relaxed);
        store_.set_fwd(obj, dst);
        ++report_.objects_copied;
        report_.bytes_copied += ObjectStore::record_bytes(layout);
        if (layout.has_ptr_fields())
            queue_.push_back(dst);
        return dst;
    }

    void root(ObjRef& cell) { cell = copy(cell); }

    /// Cheney scan of everything copied so far.
    void scan() {
        while (scanned_ < queue_.size()) {
            ObjRef dst = queue_[scanned_++];
            store_.layout_of(dst).for_each_ptr_field([&](std::size_t k) {
                auto& slot = store_.slot(dst, k);
                slot.store(copy(ObjRef::from_bits(slot.load(std::memory_order_relaxed))).bits(),
                           std::memory_order_relaxed);
            });
        }
    }

    CollectionReport finish() {
        HH_CHECK(!finished_, "collection finished twice");
        scan();
        for (HeapId h : heaps_) {
            hierarchy_.switch_semispaces(h);
            report_.bytes_after += hierarchy_.heap(h).occupancy();
        }
        report_.heaps_collected = heaps_.size();
        finished_ = true;
        if (instr_) {
            WorkerStats& s = instr_->current_block();
            s.collections.add();
            s.bytes_copied.add(report_.bytes_copied);
            s.bytes_collected.add(report_.bytes_before - std::min(report_.bytes_before, report_.bytes_after));
            s.duplicates_elided.add(report_.duplicates_elided);
            s.gc_nanos.add(static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_)
                    .count()));
            instr_->trace(TraceEventType::CollectEnd, SubjectKind::Heap, top_);
        }
        return report_;
    }

private:
    HeapHierarchy& hierarchy_;
    ObjectStore& store_;
    Instrumentation* instr_;
    HeapId top_;
    std::chrono::steady_clock::time_point start_;
    std::vector<HeapId> heaps_;
    std::unordered_set<HeapId> in_subtree_;
    std::unordered_set<ObjRef> elided_;
    std::vector<ObjRef> queue_;
    std::size_t scanned_ = 0;
    CollectionReport report_;
    bool finished_ = false;
};

class Collector {
public:
    explicit Collector(HeapHierarchy& hierarchy, Instrumentation* instr = nullptr)
        : hierarchy_(hierarchy), instr_(instr) {}

    /// roots(fn) must call fn(ObjRef&) on every root cell that may reach the
    /// subtree; cells pointing elsewhere are left alone.
    template <typename RootFn>
    CollectionReport collect(HeapId top, RootFn&& roots) {
        Collection c(hierarchy_, top, instr_);
        roots([&](ObjRef& cell) { c.root(cell); });
        return c.finish();
    }

    CollectionReport collect(HeapId top, RootSet& roots) {
        return collect(top, [&](auto&& fn) { roots.for_each(fn); });
    }

private:
    HeapHierarchy& hierarchy_;
    Instrumentation* instr_;
};

} // namespace hh
