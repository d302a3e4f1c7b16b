#pragma once

#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "hh/heap_hierarchy.hpp"

namespace hh {

/// The end of a forwarding chain, with its heap READ-locked. While held, the
/// object cannot be promoted.
class MasterHandle {
public:
    MasterHandle() = default;
    MasterHandle(HeapHierarchy& hierarchy, ObjRef obj, HeapId heap)
        : hierarchy_(&hierarchy), obj_(obj), heap_(heap) {}
    MasterHandle(MasterHandle&& o) noexcept
        : hierarchy_(std::exchange(o.hierarchy_, nullptr)), obj_(o.obj_), heap_(o.heap_) {}
    MasterHandle& operator=(MasterHandle&& o) noexcept {
        if (this != &o) {
            release();
            hierarchy_ = std::exchange(o.hierarchy_, nullptr);
            obj_ = o.obj_;
            heap_ = o.heap_;
        }
        return *this;
    }
    ~MasterHandle() { release(); }

    ObjRef obj() const { return obj_; }
    HeapId heap() const { return heap_; }
    bool held() const { return hierarchy_ != nullptr; }

    void release() {
        if (hierarchy_) {
            hierarchy_->unlock(heap_);
            hierarchy_ = nullptr;
        }
    }

private:
    HeapHierarchy* hierarchy_ = nullptr;
    ObjRef obj_;
    HeapId heap_ = kNoHeap;
};

struct MemoryConfig {
    // Leaf-heap occupancy that triggers a collection at allocation; 0 disables.
    std::uint64_t gc_threshold = 64 * 4096;
};

/// High-level memory operations. Every call must come from a task context.
class Memory {
public:
    using CollectHook = std::function<void(TaskContext&, std::vector<ObjRef>&)>;

    Memory(HeapHierarchy& hierarchy, Instrumentation& instr, MemoryConfig config = {})
        : store_(hierarchy.store()), hierarchy_(hierarchy), instr_(instr), config_(config) {}

    HeapHierarchy& hierarchy() { return hierarchy_; }
    ObjectStore& store() { return store_; }
    Instrumentation& instrumentation() { return instr_; }
    MemoryConfig& config() { return config_; }

    /// Called with the allocating context and the pending initial references
    /// (updated in place) when the current heap crosses its trigger.
    void set_collect_hook(CollectHook hook) { collect_hook_ = std::move(hook); }
    /// Shared-held by every operation; an auditor takes it exclusively.
    void set_world_lock(RwLock* world) { world_ = world; }
    void set_after_op(std::function<void()> fn) { after_op_ = std::move(fn); }

    ObjRef alloc(const ObjectLayout& layout, std::span<const Value> init) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        std::vector<Value> moved;
        if (should_collect(cx)) {
            std::vector<ObjRef> refs;
            for (const Value& v : init)
                if (v.is_ref())
                    refs.push_back(v.as_ref());
            collect_hook_(cx, refs);
            moved.assign(init.begin(), init.end());
            std::size_t k = 0;
            for (Value& v : moved)
                if (v.is_ref())
                    v = Value::ref(refs[k++]);
            init = moved;
        }
        ObjRef r = hierarchy_.fresh_obj(cx.heap, layout, init);
        note_alloc(r, layout);
        return r;
    }

    ObjRef alloc(const ObjectLayout& layout, std::initializer_list<Value> init) {
        return alloc(layout, std::span<const Value>(init.begin(), init.size()));
    }

    /// Scalar-only layouts initialised from raw words.
    ObjRef alloc_words(const ObjectLayout& layout, std::span<const Word> init) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        if (should_collect(cx)) {
            std::vector<ObjRef> none;
            collect_hook_(cx, none);
        }
        ObjRef r = hierarchy_.fresh_words(cx.heap, layout, init);
        note_alloc(r, layout);
        return r;
    }

    /// An array of n fields of one descriptor, every field set to fill.
    ObjRef alloc_array(FieldDescriptor desc, std::size_t n, Value fill) {
        HH_CHECK(fill.is_ref() == desc.is_ref(), "array fill value does not match the field kind");
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        if (should_collect(cx)) {
            std::vector<ObjRef> refs;
            if (fill.is_ref())
                refs.push_back(fill.as_ref());
            collect_hook_(cx, refs);
            if (fill.is_ref())
                fill = Value::ref(refs[0]);
        }
        auto layout = ObjectLayout::array(desc, n);
        ObjRef r = hierarchy_.fresh_blank(cx.heap, layout);
        if (fill.bits() != 0)
            for (std::size_t i = 0; i < n; ++i)
                store_.slot(r, i).store(fill.bits(), std::memory_order_relaxed);
        note_alloc(r, layout);
        return r;
    }

    Value read_immutable(ObjRef obj, std::size_t i) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        auto d = field_desc(obj, i);
        HH_DCHECK(!d.is_mutable(), "readImmutable of a mutable field");
        Locality loc = classify(obj, cx);
        Word bits = store_.slot(obj, i).load(std::memory_order_acquire);
        scope.finish({OpKind::ReadImmutable, loc}, TraceEventType::ReadImm, obj);
        return d.is_ref() ? Value::ref(ObjRef::from_bits(bits)) : Value::word(bits);
    }

    /// Chases obj's chain and returns its end with that heap READ-locked.
    MasterHandle find_master(ObjRef obj) {
        for (;;) {
            for (ObjRef next = store_.fwd_or_null(obj); next; next = store_.fwd_or_null(obj))
                obj = next;
            HeapId h = store_.heap_of(obj);
            hierarchy_.lock(h, LockMode::Read);
            if (!store_.has_fwd(obj))
                return MasterHandle(hierarchy_, obj, h);
            hierarchy_.unlock(h);
        }
    }

    Value read_mutable(ObjRef obj, std::size_t i) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        auto d = field_desc(obj, i);
        HH_DCHECK(d.is_mutable(), "readMutable of an immutable field");
        Locality loc = classify(obj, cx);
        Word bits = store_.slot(obj, i).load(std::memory_order_seq_cst);
        if (store_.has_fwd(obj)) {
            MasterHandle m = find_master(obj);
            bits = store_.slot(m.obj(), i).load(std::memory_order_seq_cst);
        }
        scope.finish({OpKind::ReadMutable, loc}, TraceEventType::ReadMut, obj);
        return d.is_ref() ? Value::ref(ObjRef::from_bits(bits)) : Value::word(bits);
    }

    void write_nonptr(ObjRef obj, std::size_t i, Word value) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        auto d = field_desc(obj, i);
        HH_DCHECK(!d.is_ref() && d.is_mutable(), "writeNonptr target is not a mutable scalar field");
        Locality loc = classify(obj, cx);
        store_.slot(obj, i).store(value, std::memory_order_seq_cst);
        if (store_.has_fwd(obj)) {
            MasterHandle m = find_master(obj);
            store_.slot(m.obj(), i).store(value, std::memory_order_seq_cst);
        }
        scope.finish({OpKind::WriteScalar, loc}, TraceEventType::WriteScalar, obj);
    }

    /// Atomic compare-and-swap on a mutable scalar field of the master copy.
    bool compare_and_swap(ObjRef obj, std::size_t i, Word expected, Word desired) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        auto d = field_desc(obj, i);
        HH_DCHECK(!d.is_ref() && d.is_mutable(), "compareAndSwap target is not a mutable scalar field");
        Locality loc = classify(obj, cx);
        bool ok;
        if (loc == Locality::Local) {
            // Only this task could promote its own leaf objects.
            ok = store_.slot(obj, i).compare_exchange_strong(expected, desired, std::memory_order_seq_cst);
        } else {
            MasterHandle m = find_master(obj);
            ok = store_.slot(m.obj(), i).compare_exchange_strong(expected, desired, std::memory_order_seq_cst);
        }
        scope.finish({OpKind::WriteScalar, loc}, TraceEventType::WriteScalar, obj);
        return ok;
    }

    void write_ptr(ObjRef obj, std::size_t i, ObjRef ptr) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        auto d = field_desc(obj, i);
        HH_DCHECK(d.is_ref() && d.is_mutable(), "writePtr target is not a mutable reference field");
        Locality loc = classify(obj, cx);
        HeapId ptr_heap = kNoHeap;
        if (!ptr.is_null()) {
            ptr_heap = store_.heap_of(ptr);
            if (!hierarchy_.ancestor_or_self(ptr_heap, cx.heap))
                throw EntanglementError("writePtr of a reference whose heap is not an ancestor of the writer");
        }
        if (store_.heap_of(obj) == cx.heap && !store_.has_fwd(obj)) {
            store_.slot(obj, i).store(ptr.bits(), std::memory_order_seq_cst);
            scope.finish({OpKind::WriteRefNonPromoting, loc}, TraceEventType::WriteRef, obj);
            return;
        }
        MasterHandle m = find_master(obj);
        if (ptr.is_null() || hierarchy_.depth(m.heap()) >= hierarchy_.depth(ptr_heap)) {
            store_.slot(m.obj(), i).store(ptr.bits(), std::memory_order_seq_cst);
            m.release();
            scope.finish({OpKind::WriteRefNonPromoting, loc}, TraceEventType::WriteRef, obj);
            return;
        }
        ObjRef master = m.obj();
        m.release();
        write_promote(master, i, ptr);
        scope.finish({OpKind::WriteRefPromoting, loc}, TraceEventType::WriteRef, obj);
    }

    /// Stores ptr (or its promoted copy) into field i of obj's master, with
    /// the heap path from heapOf(ptr) up to the master's heap WRITE-locked.
    void write_promote(ObjRef obj, std::size_t i, ObjRef ptr) {
        TaskContext& cx = current_context();
        OpScope scope(*this, cx);
        HeapId ptr_heap = store_.heap_of(ptr);
        HeapId obj_heap = store_.heap_of(obj);
        HH_CHECK(obj_heap != ptr_heap && hierarchy_.ancestor_or_self(obj_heap, ptr_heap),
                 "writePromote needs the object's heap strictly above the reference's");
        instr_.current_block().promotions.add();
        instr_.trace(TraceEventType::PromoteStart, SubjectKind::Object, ptr.bits());
        std::vector<HeapId> locked;
        ObjRef prev = ptr;
        locked.push_back(store_.heap_of(prev));
        hierarchy_.lock(locked.back(), LockMode::Write);
        for (;;) {
            HeapId from = store_.heap_of(prev);
            HeapId to = store_.heap_of(obj);
            std::size_t mark = locked.size();
            for (HeapId h = from; h != to;) {
                h = hierarchy_.parent(h);
                HH_CHECK(h != kNoHeap, "writePromote path left the hierarchy");
                locked.push_back(h);
            }
            for (std::size_t k = mark; k < locked.size(); ++k)
                hierarchy_.lock(locked[k], LockMode::Write);
            ObjRef next = store_.fwd_or_null(obj);
            if (!next)
                break;
            prev = obj;
            obj = next;
        }
        ObjRef promoted = promote_locked(store_.heap_of(obj), ptr);
        store_.slot(obj, i).store(promoted.bits(), std::memory_order_seq_cst);
        for (auto it = locked.rbegin(); it != locked.rend(); ++it)
            hierarchy_.unlock(*it);
        instr_.trace(TraceEventType::PromoteEnd, SubjectKind::Object, ptr.bits());
    }

    /// Copies obj and everything it reaches below heap into heap. The caller
    /// holds WRITE locks on every heap from heapOf(obj) up to heap.
    ObjRef promote(HeapId heap, ObjRef obj) { return promote_locked(heap, obj); }

    /// Accumulated stats of the calling thread's block.
    WorkerStats& stats() { return instr_.current_block(); }

private:
    class OpScope {
    public:
        OpScope(Memory& m, TaskContext& cx)
            : m_(m), cx_(cx), nested_(cx.in_op) {
            if (nested_)
                return;
            if (m_.world_)
                m_.world_->lock_shared();
            cx_.in_op = true;
            cx_.op_locks = 0;
        }
        ~OpScope() {
            if (nested_)
                return;
            cx_.in_op = false;
            if (m_.world_)
                m_.world_->unlock_shared();
            if (m_.after_op_)
                m_.after_op_();
        }
        OpScope(const OpScope&) = delete;
        OpScope& operator=(const OpScope&) = delete;

        void finish(OpClassKey key, TraceEventType type, ObjRef subject) {
            if (nested_)
                return;
            m_.instr_.record_op(key, cx_.op_locks);
            m_.instr_.trace(type, SubjectKind::Object, subject.bits(), static_cast<int>(key.index()));
        }

    private:
        Memory& m_;
        TaskContext& cx_;
        bool nested_;
    };

    FieldDescriptor field_desc(ObjRef obj, std::size_t i) const {
        auto layout = store_.layout_of(obj);
        HH_CHECK(i < layout.arity(), "field index out of range");
        return layout.descriptor(i);
    }

    Locality classify(ObjRef obj, const TaskContext& cx) const {
        if (store_.has_fwd(obj))
            return Locality::Promoted;
        return store_.heap_of(obj) == cx.heap ? Locality::Local : Locality::Distant;
    }

    bool should_collect(const TaskContext& cx) const {
        if (!collect_hook_ || config_.gc_threshold == 0)
            return false;
        const Heap& h = hierarchy_.heap(cx.heap);
        return h.occupancy() > std::max<std::uint64_t>(config_.gc_threshold, 2 * h.live_after_gc);
    }

    void note_alloc(ObjRef r, const ObjectLayout& layout) {
        WorkerStats& s = instr_.current_block();
        s.allocs.add();
        s.alloc_bytes.add(ObjectStore::record_bytes(layout));
        instr_.trace(TraceEventType::Alloc, SubjectKind::Object, r.bits());
    }

    ObjRef promote_locked(HeapId target, ObjRef root) {
        struct Pending {
            ObjRef src;
            ObjRef dst;
        };
        const int target_depth = hierarchy_.depth(target);
        std::vector<Pending> work;
        WorkerStats& s = instr_.current_block();

        auto resolve = [&](ObjRef o) -> ObjRef {
            if (o.is_null())
                return o;
            for (;;) {
                if (hierarchy_.depth(store_.heap_of(o)) <= target_depth)
                    return o;
                ObjRef next = store_.fwd_or_null(o);
                if (!next)
                    break;
                o = next;
            }
            HH_DCHECK(hierarchy_.holds_lock(store_.heap_of(o), LockMode::Write),
                      "promotion of an object whose heap is not WRITE-locked");
            auto layout = store_.layout_of(o);
            ObjRef copy = hierarchy_.fresh_blank(target, layout);
            layout.for_each_ptr_field(
                [&](std::size_t k) { store_.slot(copy, k).store(ObjRef::kNullBits, std::memory_order_relaxed); });
            // Forward first so that racing fast-path writes either see the
            // link or land before the field copy below.
            store_.set_fwd(o, copy);
            layout.for_each_nonptr_field([&](std::size_t k) {
                store_.slot(copy, k).store(store_.slot(o, k).load(std::memory_order_seq_cst),
                                           std::memory_order_relaxed);
            });
            s.objects_promoted.add();
            s.bytes_promoted.add(ObjectStore::record_bytes(layout));
            if (layout.has_ptr_fields())
                work.push_back({o, copy});
            return copy;
        };

        ObjRef result = resolve(root);
        while (!work.empty()) {
            Pending p = work.back();
            work.pop_back();
            store_.layout_of(p.src).for_each_ptr_field([&](std::size_t k) {
                ObjRef v = ObjRef::from_bits(store_.slot(p.src, k).load(std::memory_order_seq_cst));
                store_.slot(p.dst, k).store(resolve(v).bits(), std::memory_order_seq_cst);
            });
        }
        return result;
    }

    ObjectStore& store_;
    HeapHierarchy& hierarchy_;
    Instrumentation& instr_;
    MemoryConfig config_;
    CollectHook collect_hook_;
    RwLock* world_ = nullptr;
    std::function<void()> after_op_;
};

} // namespace hh
