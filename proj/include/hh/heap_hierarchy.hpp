#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hh/context.hpp"
#include "hh/instrumentation.hpp"
#include "hh/object_store.hpp"
#include "hh/rw_lock.hpp"

namespace hh {

enum class LockMode : std::uint8_t { Read, Write };
enum class HeapRole : std::uint8_t { FromSpace, ToSpace, Global, Retired };

inline const char* to_string(HeapRole r) {
    switch (r) {
    case HeapRole::FromSpace: return "from-space";
    case HeapRole::ToSpace: return "to-space";
    case HeapRole::Global: return "global";
    case HeapRole::Retired: return "retired";
    }
    return "?";
}

class HeapHierarchy;

class Heap {
public:
    HeapId id() const { return id_; }
    int depth() const { return depth_; }
    HeapId parent() const { return parent_; }
    HeapRole role() const { return role_.load(std::memory_order_acquire); }
    bool live() const { return role() != HeapRole::Retired; }

    HeapSpace& space() { return space_; }
    const HeapSpace& space() const { return space_; }
    std::uint64_t occupancy() const { return space_.occupancy.load(std::memory_order_relaxed); }
    std::size_t chunk_count() const { return space_.chunks.size(); }

    RwLock& rw() { return lock_; }
    const RwLock& rw() const { return lock_; }
    std::uint64_t lock_acquisitions() const { return lock_acquisitions_.load(std::memory_order_relaxed); }

    /// Bytes that survived the last collection of this heap; drives the
    /// allocation-time trigger.
    std::uint64_t live_after_gc = 0;

private:
    friend class HeapHierarchy;

    Heap(HeapId id, int depth, HeapId parent, HeapRole role)
        : id_(id), depth_(depth), parent_(parent), role_(role) {}

    HeapId id_;
    int depth_;
    HeapId parent_;
    std::atomic<HeapRole> role_;
    RwLock lock_;
    HeapSpace space_;
    std::vector<HeapId> children_;
    std::atomic<HeapId> to_space_{kNoHeap};
    HeapId from_space_ = kNoHeap;
    std::atomic<bool> collecting_{false};
    std::atomic<std::uint64_t> lock_acquisitions_{0};
    std::atomic<std::int32_t> debug_readers_{0};
    std::atomic<bool> debug_writer_{false};
};

namespace detail {

struct HeldLock {
    const void* owner;
    HeapId heap;
    int depth;
    LockMode mode;
};

inline std::vector<HeldLock>& held_locks() {
    thread_local std::vector<HeldLock> held;
    return held;
}

} // namespace detail

/// The tree of heaps plus the global heap that sits outside it.
class HeapHierarchy {
public:
    explicit HeapHierarchy(ObjectStore& store, Instrumentation* instr = nullptr)
        : store_(store), instr_(instr), segments_(new std::atomic<Segment*>[kMaxSegments]) {
        for (std::size_t i = 0; i < kMaxSegments; ++i)
            segments_[i].store(nullptr, std::memory_order_relaxed);
        std::lock_guard lock(registry_);
        root_ = insert(0, kNoHeap, HeapRole::FromSpace);
        global_ = insert(0, kNoHeap, HeapRole::Global);
    }

    ~HeapHierarchy() {
        for (std::size_t s = 0; s < kMaxSegments; ++s) {
            Segment* seg = segments_[s].load(std::memory_order_relaxed);
            if (!seg)
                continue;
            for (auto& entry : *seg)
                delete entry.load(std::memory_order_relaxed);
            delete seg;
        }
    }

    HeapHierarchy(const HeapHierarchy&) = delete;
    HeapHierarchy& operator=(const HeapHierarchy&) = delete;

    ObjectStore& store() { return store_; }
    const ObjectStore& store() const { return store_; }
    Instrumentation* instrumentation() const { return instr_; }

    HeapId root() const { return root_; }
    HeapId global() const { return global_; }

    Heap* find(HeapId id) const {
        if (id >= next_id_.load(std::memory_order_acquire))
            return nullptr;
        Segment* seg = segments_[id >> kSegmentBits].load(std::memory_order_acquire);
        return seg ? (*seg)[id & (kSegmentSize - 1)].load(std::memory_order_acquire) : nullptr;
    }

    Heap& heap(HeapId id) const {
        Heap* h = find(id);
        if (!h)
            throw StructuralError("unknown heap " + std::to_string(id));
        return *h;
    }

    bool exists(HeapId id) const { return find(id) != nullptr; }
    bool is_live(HeapId id) const {
        Heap* h = find(id);
        return h && h->live();
    }

    HeapId new_child_heap(HeapId parent) {
        Heap& p = heap(parent);
        HH_CHECK(p.role() == HeapRole::FromSpace, "new child of a heap that is not a live from-space");
        std::lock_guard lock(registry_);
        HeapId id = insert(p.depth_ + 1, parent, HeapRole::FromSpace);
        p.children_.push_back(id);
        return id;
    }

    /// Hands every chunk of child to parent and retires child. Objects do not
    /// move and their ObjRefs stay valid.
    void join_heap(HeapId parent, HeapId child) {
        Heap& p = heap(parent);
        Heap& c = heap(child);
        HH_CHECK(c.parent_ == parent && c.role() == HeapRole::FromSpace, "join of a heap that is not a live child");
        HH_CHECK(c.lock_.idle(), "join of a heap whose lock is held");
        std::lock_guard lock(registry_);
        HH_CHECK(c.children_.empty(), "join of a heap that still has live children");
        for (ChunkId id : c.space_.chunks)
            store_.set_chunk_owner(id, parent);
        p.space_.chunks.insert(p.space_.chunks.end(), c.space_.chunks.begin(), c.space_.chunks.end());
        p.space_.occupancy.fetch_add(c.space_.occupancy.exchange(0), std::memory_order_relaxed);
        p.live_after_gc += c.live_after_gc;
        c.space_.chunks = {};
        c.space_.current = nullptr;
        c.role_.store(HeapRole::Retired, std::memory_order_release);
        auto& kids = p.children_;
        kids.erase(std::find(kids.begin(), kids.end(), child));
    }

    int depth(HeapId h) const { return heap(h).depth_; }
    HeapId parent(HeapId h) const { return heap(h).parent_; }

    /// True iff a lies on b's parent chain, b included.
    bool ancestor_or_self(HeapId a, HeapId b) const {
        const Heap* ha = &heap(a);
        const Heap* hb = &heap(b);
        if (hb->role() == HeapRole::ToSpace)
            hb = &heap(hb->from_space_);
        if (ha->role() == HeapRole::ToSpace)
            ha = &heap(ha->from_space_);
        if (ha == hb)
            return true;
        if (ha->role() == HeapRole::Global || hb->role() == HeapRole::Global)
            return false;
        while (hb->depth_ > ha->depth_)
            hb = &heap(hb->parent_);
        return hb == ha;
    }

    std::vector<HeapId> children(HeapId h) const {
        Heap& x = heap(h);
        std::lock_guard lock(registry_);
        return x.children_;
    }

    /// top and all its live descendants, parents before children.
    std::vector<HeapId> subtree(HeapId top) const {
        std::vector<HeapId> out{top};
        std::lock_guard lock(registry_);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const Heap& h = heap(out[i]);
            out.insert(out.end(), h.children_.begin(), h.children_.end());
        }
        return out;
    }

    HeapId id_limit() const { return next_id_.load(std::memory_order_acquire); }

    template <typename Fn>
    void for_each_heap(Fn&& fn) const {
        HeapId end = id_limit();
        for (HeapId id = 0; id < end; ++id)
            if (Heap* h = find(id))
                fn(*h);
    }

    void lock(HeapId h, LockMode mode) {
        Heap& x = heap(h);
        auto& held = detail::held_locks();
        for (const auto& e : held) {
            if (e.owner == this && e.heap == h)
                detail::contract_failure("reentrant heap lock acquisition", __FILE__, __LINE__);
            // WRITE locks along a path must go deep to shallow.
            if (mode == LockMode::Write && e.owner == this && e.mode == LockMode::Write && x.depth_ >= e.depth &&
                instr_)
                instr_->note_lock_order_violation();
        }
        if (mode == LockMode::Write)
            x.lock_.lock();
        else
            x.lock_.lock_shared();
#if HH_DEBUG_CHECKS
        if (mode == LockMode::Write) {
            HH_CHECK(x.debug_readers_.load() == 0 && !x.debug_writer_.exchange(true),
                     "heap WRITE lock granted while held by another context");
        } else {
            HH_CHECK(!x.debug_writer_.load(), "heap READ lock granted while a writer holds it");
            x.debug_readers_.fetch_add(1);
        }
#endif
        held.push_back({this, h, x.depth_, mode});
        x.lock_acquisitions_.fetch_add(1, std::memory_order_relaxed);
        count_lock();
        if (instr_)
            instr_->trace(TraceEventType::Lock, SubjectKind::Heap, h);
    }

    void unlock(HeapId h) {
        auto& held = detail::held_locks();
        auto it = std::find_if(held.rbegin(), held.rend(), [&](const detail::HeldLock& e) {
            return e.owner == this && e.heap == h;
        });
        if (it == held.rend())
            detail::contract_failure("heap unlock without a matching lock", __FILE__, __LINE__);
        LockMode mode = it->mode;
        held.erase(std::next(it).base());
        Heap& x = heap(h);
#if HH_DEBUG_CHECKS
        if (mode == LockMode::Write)
            x.debug_writer_.store(false);
        else
            x.debug_readers_.fetch_sub(1);
#endif
        if (instr_)
            instr_->trace(TraceEventType::Unlock, SubjectKind::Heap, h);
        if (mode == LockMode::Write)
            x.lock_.unlock();
        else
            x.lock_.unlock_shared();
    }

    /// Whether the calling thread holds h's lock (in the given mode, if any).
    bool holds_lock(HeapId h) const {
        for (const auto& e : detail::held_locks())
            if (e.owner == this && e.heap == h)
                return true;
        return false;
    }
    bool holds_lock(HeapId h, LockMode mode) const {
        for (const auto& e : detail::held_locks())
            if (e.owner == this && e.heap == h && e.mode == mode)
                return true;
        return false;
    }
    std::size_t locks_held() const {
        std::size_t n = 0;
        for (const auto& e : detail::held_locks())
            n += e.owner == this;
        return n;
    }

    void begin_collection(HeapId h) {
        Heap& x = heap(h);
        HH_CHECK(x.role() == HeapRole::FromSpace, "collection of a heap that is not a live from-space");
        HH_CHECK(!x.collecting_.exchange(true), "heap is already being collected");
    }

    bool collecting(HeapId h) const { return heap(h).collecting_.load(std::memory_order_acquire); }

    /// Paired to-space of h, created on first use.
    HeapId to_space_of(HeapId h) {
        Heap& x = heap(h);
        HH_CHECK(x.collecting_.load(std::memory_order_acquire), "toSpaceOf outside a collection");
        HeapId t = x.to_space_.load(std::memory_order_acquire);
        if (t != kNoHeap)
            return t;
        std::lock_guard lock(registry_);
        t = insert(x.depth_, x.parent_, HeapRole::ToSpace);
        heap(t).from_space_ = h;
        x.to_space_.store(t, std::memory_order_release);
        return t;
    }

    bool is_to_space(HeapId h) const { return heap(h).role() == HeapRole::ToSpace; }
    HeapId from_space_of(HeapId to) const { return heap(to).from_space_; }

    /// The to-space's chunks become h's chunks; h's old chunks are retired.
    /// h keeps its id and position.
    void switch_semispaces(HeapId h) {
        Heap& x = heap(h);
        HH_CHECK(x.collecting_.load(std::memory_order_acquire), "switchSemispaces outside a collection");
        std::lock_guard lock(registry_);
        for (ChunkId id : x.space_.chunks)
            store_.retire_chunk(id);
        x.space_.chunks.clear();
        x.space_.current = nullptr;
        x.space_.next_chunk_words = 0;
        x.space_.occupancy.store(0);
        HeapId t = x.to_space_.exchange(kNoHeap);
        if (t != kNoHeap) {
            Heap& to = heap(t);
            for (ChunkId id : to.space_.chunks)
                store_.set_chunk_owner(id, h);
            x.space_.take_from(to.space_);
            to.role_.store(HeapRole::Retired, std::memory_order_release);
        }
        x.live_after_gc = x.occupancy();
        x.collecting_.store(false, std::memory_order_release);
    }

    ObjRef fresh_obj(HeapId h, const ObjectLayout& layout, std::span<const Value> init) {
        return store_.fresh_obj(alloc_space(h), h, layout, init);
    }
    ObjRef fresh_obj(HeapId h, const ObjectLayout& layout, std::initializer_list<Value> init) {
        return fresh_obj(h, layout, std::span<const Value>(init.begin(), init.size()));
    }
    ObjRef fresh_words(HeapId h, const ObjectLayout& layout, std::span<const Word> init) {
        return store_.fresh_words(alloc_space(h), h, layout, init);
    }
    ObjRef fresh_blank(HeapId h, const ObjectLayout& layout) { return store_.fresh_blank(alloc_space(h), h, layout); }

    std::mutex& registry_mutex() const { return registry_; }

private:
    static constexpr std::size_t kSegmentBits = 12;
    static constexpr std::size_t kSegmentSize = std::size_t{1} << kSegmentBits;
    static constexpr std::size_t kMaxSegments = std::size_t{1} << 16;
    using Segment = std::array<std::atomic<Heap*>, kSegmentSize>;

    HeapSpace& alloc_space(HeapId h) {
        Heap& x = heap(h);
        HH_CHECK(x.role() != HeapRole::Retired, "allocation into a retired heap");
        return x.space_;
    }

    // Caller holds registry_.
    HeapId insert(int depth, HeapId parent, HeapRole role) {
        HeapId id = next_id_.load(std::memory_order_relaxed);
        HH_CHECK((id >> kSegmentBits) < kMaxSegments, "heap table exhausted");
        Segment* seg = segments_[id >> kSegmentBits].load(std::memory_order_relaxed);
        if (!seg) {
            seg = new Segment();
            for (auto& e : *seg)
                e.store(nullptr, std::memory_order_relaxed);
            segments_[id >> kSegmentBits].store(seg, std::memory_order_release);
        }
        (*seg)[id & (kSegmentSize - 1)].store(new Heap(id, depth, parent, role), std::memory_order_release);
        next_id_.store(id + 1, std::memory_order_release);
        return id;
    }

    void count_lock() {
        TaskContext* cx = current_context_or_null();
        if (cx && cx->in_op) {
            ++cx->op_locks;
        } else if (instr_) {
            instr_->current_block().other_locks.add();
        }
    }

    ObjectStore& store_;
    Instrumentation* instr_;
    std::unique_ptr<std::atomic<Segment*>[]> segments_;
    std::atomic<HeapId> next_id_{0};
    mutable std::mutex registry_;
    HeapId root_ = kNoHeap;
    HeapId global_ = kNoHeap;
};

/// Stack of (depth, heap) pairs for one user-level thread. The top is the
/// thread's allocation heap.
class Superheap {
public:
    Superheap(HeapHierarchy& hierarchy, HeapId bottom, Superheap* parent = nullptr)
        : hierarchy_(hierarchy), parent_(parent) {
        stack_.push_back({hierarchy.depth(bottom), bottom});
    }

    HeapId top() const { return stack_.back().heap; }
    int top_depth() const { return stack_.back().depth; }
    std::size_t size() const { return stack_.size(); }
    Superheap* parent() const { return parent_; }

    HeapId push_child() {
        HeapId h = hierarchy_.new_child_heap(top());
        int d = hierarchy_.depth(h);
        HH_DCHECK(d == top_depth() + 1, "superheap depths must increase by one");
        stack_.push_back({d, h});
        return h;
    }

    /// Joins the top heap into the one below it.
    void pop_and_join() {
        HH_CHECK(stack_.size() > 1, "superheap pop below its bottom");
        HeapId child = top();
        stack_.pop_back();
        hierarchy_.join_heap(top(), child);
    }

private:
    struct Entry {
        int depth;
        HeapId heap;
    };

    HeapHierarchy& hierarchy_;
    Superheap* parent_;
    std::vector<Entry> stack_;
};

} // namespace hh
