#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include "hh/hh.hpp"

namespace hh::test {

/// Store, hierarchy and memory operations without a scheduler.
struct Env {
    ObjectStore store;
    Instrumentation instr;
    HeapHierarchy hier{store, &instr};
    Memory mem{hier, instr};

    explicit Env(MemoryConfig cfg = {}) : mem(hier, instr, cfg) {}

    HeapId root() const { return hier.root(); }

    /// A path root -> ... of `depth` new heaps; returns the deepest.
    HeapId chain(int depth, HeapId from = kNoHeap) {
        HeapId h = from == kNoHeap ? hier.root() : from;
        for (int i = 0; i < depth; ++i)
            h = hier.new_child_heap(h);
        return h;
    }
};

/// Binds the calling thread to a scripted task whose allocation heap is `heap`.
class TaskOn {
public:
    TaskOn(Env& env, HeapId heap, TaskId task = 1)
        : stats_(&env.instr.register_block(0)),
          cx_{&env.mem, nullptr, task, heap, 0, &roots_, stats_, nullptr},
          scope_(cx_) {}

    TaskContext& context() { return cx_; }
    WorkerStats& stats() { return *stats_; }
    void move_to(HeapId heap) { cx_.heap = heap; }

private:
    RootStack roots_;
    WorkerStats* stats_;
    TaskContext cx_;
    ContextScope scope_;
};

/// Locks taken and promotions performed by the current thread across a scope.
inline std::uint64_t total_locks(const Instrumentation& instr) { return instr.totals().total_locks(); }

inline ObjRef chain_end(const ObjectStore& store, ObjRef r) {
    while (!r.is_null() && store.has_fwd(r))
        r = store.read_fwd(r);
    return r;
}

/// Canonical form of the graph reachable from `roots`, with every reference
/// resolved to the end of its forwarding chain. Two graphs are isomorphic
/// (with duplicates identified) iff their canonical forms are equal.
struct CanonicalNode {
    Word header;
    std::vector<std::int64_t> fields; // scalar value, or node index (-1 for null)
    friend bool operator==(const CanonicalNode&, const CanonicalNode&) = default;
};

struct CanonicalGraph {
    std::vector<CanonicalNode> nodes;
    std::vector<std::int64_t> roots;
    friend bool operator==(const CanonicalGraph&, const CanonicalGraph&) = default;
};

inline CanonicalGraph canonical(const ObjectStore& store, const std::vector<ObjRef>& roots) {
    CanonicalGraph g;
    std::unordered_map<ObjRef, std::int64_t> index;
    std::vector<ObjRef> order;
    auto visit = [&](ObjRef r) -> std::int64_t {
        if (r.is_null())
            return -1;
        r = chain_end(store, r);
        auto [it, fresh] = index.emplace(r, static_cast<std::int64_t>(order.size()));
        if (fresh)
            order.push_back(r);
        return it->second;
    };
    for (ObjRef r : roots)
        g.roots.push_back(visit(r));
    for (std::size_t i = 0; i < order.size(); ++i) {
        ObjRef o = order[i];
        auto layout = store.layout_of(o);
        CanonicalNode n{layout.header(), {}};
        for (std::size_t k = 0; k < layout.arity(); ++k) {
            Value v = store.get_field(o, k);
            n.fields.push_back(v.is_ref() ? visit(v.as_ref()) : static_cast<std::int64_t>(v.as_word()));
        }
        g.nodes.push_back(std::move(n));
    }
    return g;
}

/// Objects reachable from roots (chains resolved), in discovery order.
inline std::vector<ObjRef> reachable(const ObjectStore& store, const std::vector<ObjRef>& roots) {
    std::vector<ObjRef> order;
    std::unordered_map<ObjRef, bool> seen;
    std::vector<ObjRef> stack;
    for (ObjRef r : roots)
        if (!r.is_null())
            stack.push_back(chain_end(store, r));
    while (!stack.empty()) {
        ObjRef o = stack.back();
        stack.pop_back();
        if (!seen.emplace(o, true).second)
            continue;
        order.push_back(o);
        store.layout_of(o).for_each_ptr_field([&](std::size_t k) {
            ObjRef t = store.get_field(o, k).as_ref();
            if (!t.is_null())
                stack.push_back(chain_end(store, t));
        });
    }
    return order;
}

/// FNV-1a over every word of every record in chunks owned by heaps in `keep`.
inline std::map<ObjRef, std::uint64_t> checksums(const ObjectStore& store,
                                                 const std::vector<HeapId>& keep) {
    std::map<ObjRef, std::uint64_t> out;
    store.for_each_object([&](ObjRef o, HeapId owner) {
        if (std::find(keep.begin(), keep.end(), owner) == keep.end())
            return;
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&](Word w) {
            for (int b = 0; b < 8; ++b) {
                h ^= (w >> (8 * b)) & 0xff;
                h *= 1099511628211ull;
            }
        };
        auto layout = store.layout_of(o);
        mix(layout.header());
        mix(store.fwd_or_null(o).bits());
        for (std::size_t k = 0; k < layout.arity(); ++k)
            mix(store.slot(o, k).load());
        out[o] = h;
    });
    return out;
}

/// Objects reachable from roots by following stored references verbatim
/// (no chain resolution).
inline std::vector<ObjRef> raw_reachable(const ObjectStore& store, const std::vector<ObjRef>& roots) {
    std::vector<ObjRef> order;
    std::unordered_map<ObjRef, bool> seen;
    std::vector<ObjRef> stack;
    for (ObjRef r : roots)
        if (!r.is_null())
            stack.push_back(r);
    while (!stack.empty()) {
        ObjRef o = stack.back();
        stack.pop_back();
        if (!seen.emplace(o, true).second)
            continue;
        order.push_back(o);
        store.layout_of(o).for_each_ptr_field([&](std::size_t k) {
            ObjRef t = store.get_field(o, k).as_ref();
            if (!t.is_null())
                stack.push_back(t);
        });
    }
    return order;
}

// [0] scalar_imm tag, [1] scalar_mut value, [2] ref_mut, [3] ref_mut
inline const ObjectLayout& graph_node() {
    static const ObjectLayout l =
        ObjectLayout::of({fields::scalar_imm, fields::scalar_mut, fields::ref_mut, fields::ref_mut});
    return l;
}

/// A disentangled random object graph over the hierarchy
///   root -> a -> {b -> d, c}
/// with sharing, cycles, Null fields and promotion chains built by real
/// promoting writes.
struct RandomGraph {
    HeapId root, a, b, c, d;
    std::vector<ObjRef> objects;
    std::vector<ObjRef> roots;
    std::size_t promotions = 0;

    std::vector<HeapId> heaps() const { return {root, a, b, c, d}; }
};

inline RandomGraph random_graph(Env& env, std::mt19937_64& rng, std::size_t max_objects) {
    RandomGraph g;
    g.root = env.root();
    g.a = env.hier.new_child_heap(g.root);
    g.b = env.hier.new_child_heap(g.a);
    g.c = env.hier.new_child_heap(g.a);
    g.d = env.hier.new_child_heap(g.b);
    const auto heaps = g.heaps();
    std::size_t n = 1 + rng() % max_objects;
    for (std::size_t i = 0; i < n; ++i) {
        HeapId h = heaps[rng() % heaps.size()];
        g.objects.push_back(env.hier.fresh_obj(
            h, graph_node(), {Value::word(i), Value::word(rng() % 1000), Value::null(), Value::null()}));
    }
    for (ObjRef o : g.objects)
        for (std::size_t f : {std::size_t{2}, std::size_t{3}}) {
            if (rng() % 10 < 3)
                continue;
            ObjRef t = g.objects[rng() % n];
            if (env.hier.ancestor_or_self(env.store.heap_of(t), env.store.heap_of(o)))
                env.store.set_field(o, f, Value::ref(t));
        }
    // Promote some objects out of the deeper heaps through real writes.
    std::size_t attempts = rng() % (n / 4 + 2);
    for (std::size_t k = 0; k < attempts; ++k) {
        ObjRef x = g.objects[rng() % n];
        HeapId hx = env.store.heap_of(chain_end(env.store, x));
        if (hx == g.root)
            continue;
        // a holder somewhere strictly above x's master
        std::vector<HeapId> above;
        for (HeapId h = env.hier.parent(hx); h != kNoHeap; h = env.hier.parent(h))
            above.push_back(h);
        HeapId at = above[rng() % above.size()];
        TaskOn task(env, env.store.heap_of(x));
        ObjRef up = env.hier.fresh_obj(at, graph_node(),
                                       {Value::word(n + k), Value::word(rng() % 1000), Value::null(), Value::null()});
        env.mem.write_ptr(up, 2, x);
        g.objects.push_back(up);
        ++g.promotions;
        // make the master's mutable value differ from the stale copy
        env.mem.write_nonptr(chain_end(env.store, x), 1, rng() % 1000 + 1000);
    }
    std::size_t nroots = 1 + rng() % 8;
    for (std::size_t k = 0; k < nroots; ++k)
        g.roots.push_back(rng() % 8 == 0 ? ObjRef::null() : g.objects[rng() % g.objects.size()]);
    return g;
}

} // namespace hh::test
