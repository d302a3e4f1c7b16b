#pragma once

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hh/harness/graph.hpp"
#include "hh/harness/seq.hpp"

namespace hh::bench {

struct BenchParams {
    std::uint64_t size = 0;
    std::uint64_t grain = 0;
    std::uint64_t seed = 1;
    // Graph benchmarks only.
    const graph::Csr* graph = nullptr;
};

struct BenchOutcome {
    bool verified = false;
    std::string detail;
    Word checksum = 0;
};

inline constexpr Word mix(Word x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline Word input_value(std::uint64_t seed, std::uint64_t i) { return mix(seed * 0x100000001B3ull + i) >> 24; }

// Raw readers for verification after the runtime has stopped.
namespace raw {

inline Word word(const ObjectStore& s, ObjRef o, std::size_t i) { return s.get_field(o, i).bits(); }
inline ObjRef ref(const ObjectStore& s, ObjRef o, std::size_t i) { return s.get_field(o, i).as_ref(); }

inline ObjRef master(const ObjectStore& s, ObjRef o) {
    while (ObjRef n = s.fwd_or_null(o))
        o = n;
    return o;
}

inline void rope_words(const ObjectStore& s, ObjRef r, std::vector<Word>& out) {
    auto layout = s.layout_of(r);
    if (layout.is_array()) {
        for (std::size_t i = 0; i < layout.arity(); ++i)
            out.push_back(s.get_field(r, i).bits());
        return;
    }
    rope_words(s, ref(s, r, seq::kLeft), out);
    rope_words(s, ref(s, r, seq::kRight), out);
}

inline std::vector<Word> rope_words(const ObjectStore& s, ObjRef r) {
    std::vector<Word> out;
    rope_words(s, r, out);
    return out;
}

} // namespace raw

inline std::vector<Word> input_oracle(std::uint64_t n, std::uint64_t seed) {
    std::vector<Word> v(n);
    for (std::uint64_t i = 0; i < n; ++i)
        v[i] = input_value(seed, i);
    return v;
}

inline Word fold_checksum(const std::vector<Word>& v) {
    Word h = 0;
    for (Word x : v)
        h = mix(h ^ x);
    return h;
}

inline BenchOutcome compare_words(const std::vector<Word>& got, const std::vector<Word>& want) {
    BenchOutcome o;
    o.checksum = fold_checksum(got);
    o.verified = got == want;
    o.detail = o.verified ? "output matches oracle (" + std::to_string(got.size()) + " elements)"
                          : "output differs from oracle (" + std::to_string(got.size()) + " vs " +
                                std::to_string(want.size()) + " elements)";
    return o;
}

// ---------------------------------------------------------------- fib

inline std::uint64_t fib_seq(std::uint64_t n) { return n < 2 ? n : fib_seq(n - 1) + fib_seq(n - 2); }

inline std::uint64_t fib_par(std::uint64_t n, std::uint64_t grain) {
    if (n <= grain || n < 2)
        return fib_seq(n);
    auto [a, b] = forkjoin([&] { return fib_par(n - 1, grain); }, [&] { return fib_par(n - 2, grain); });
    return a + b;
}

inline BenchOutcome fib(Runtime& rt, const BenchParams& p) {
    std::uint64_t got = rt.run([&] { return fib_par(p.size, p.grain); });
    std::uint64_t a = 0, b = 1;
    for (std::uint64_t i = 0; i < p.size; ++i)
        a = std::exchange(b, a + b);
    BenchOutcome o;
    o.checksum = got;
    o.verified = got == a;
    o.detail = "fib(" + std::to_string(p.size) + ") = " + std::to_string(got);
    return o;
}

// ---------------------------------------------------------------- pure sequence benchmarks

inline ObjRef tabulate_input(const BenchParams& p) {
    std::uint64_t seed = p.seed;
    return seq::tabulate(0, p.size, [seed](std::size_t i) { return input_value(seed, i); }, p.grain);
}

inline Word map_fn(Word x) { return mix(x) >> 1; }
inline bool filter_fn(Word x) { return (x & 3) == 0; }

inline BenchOutcome tabulate(Runtime& rt, const BenchParams& p) {
    ObjRef out = rt.run([&] { return tabulate_input(p); });
    return compare_words(raw::rope_words(rt.store(), out), input_oracle(p.size, p.seed));
}

inline BenchOutcome map(Runtime& rt, const BenchParams& p) {
    ObjRef out = rt.run([&] {
        Local in(tabulate_input(p));
        return seq::map(in, [](Word x) { return map_fn(x); });
    });
    auto want = input_oracle(p.size, p.seed);
    for (Word& x : want)
        x = map_fn(x);
    return compare_words(raw::rope_words(rt.store(), out), want);
}

inline BenchOutcome reduce(Runtime& rt, const BenchParams& p) {
    Word got = rt.run([&] {
        Local in(tabulate_input(p));
        return seq::reduce(in, 0, [](Word a, Word b) { return a + b; });
    });
    Word want = 0;
    for (Word x : input_oracle(p.size, p.seed))
        want += x;
    BenchOutcome o;
    o.checksum = got;
    o.verified = got == want;
    o.detail = "sum = " + std::to_string(got) + (o.verified ? " (matches sequential fold)" : " (oracle " +
                                                                                                 std::to_string(want) + ")");
    return o;
}

inline BenchOutcome filter(Runtime& rt, const BenchParams& p) {
    ObjRef out = rt.run([&] {
        Local in(tabulate_input(p));
        return seq::filter(in, [](Word x) { return filter_fn(x); });
    });
    std::vector<Word> want;
    for (Word x : input_oracle(p.size, p.seed))
        if (filter_fn(x))
            want.push_back(x);
    return compare_words(raw::rope_words(rt.store(), out), want);
}

// ---------------------------------------------------------------- sorting

/// Parallel merge of two sorted slices; with dedup, a set union of two
/// duplicate-free slices.
inline ObjRef merge(seq::Slice a, seq::Slice b, std::size_t grain, bool dedup) {
    if (a.len + b.len <= std::max<std::size_t>(grain, 2)) {
        auto va = seq::read(a);
        auto vb = seq::read(b);
        std::vector<Word> out;
        out.reserve(va.size() + vb.size());
        if (dedup)
            std::set_union(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(out));
        else
            std::merge(va.begin(), va.end(), vb.begin(), vb.end(), std::back_inserter(out));
        return seq::from_words(out);
    }
    if (a.len < b.len)
        std::swap(a, b);
    std::size_t mid = a.len / 2;
    Word pivot = a[mid];
    std::size_t lo = 0, hi = b.len;
    while (lo < hi) {
        std::size_t m = lo + (hi - lo) / 2;
        if (b[m] < pivot)
            lo = m + 1;
        else
            hi = m;
    }
    auto [l, r] = forkjoin([&] { return merge(a.sub(0, mid), b.sub(0, lo), grain, dedup); },
                           [&] { return merge(a.sub(mid, a.len), b.sub(lo, b.len), grain, dedup); });
    return seq::concat(l, r);
}

/// Functional quicksort: every partition is a fresh immutable array.
inline ObjRef pure_qsort(ObjRef leaf) {
    Memory& m = memory();
    std::size_t n = m.store().arity(leaf);
    if (n <= 1)
        return leaf;
    std::vector<Word> lt, eq, gt;
    Word pivot = m.read_immutable(leaf, n / 2).as_word();
    for (std::size_t i = 0; i < n; ++i) {
        Word x = m.read_immutable(leaf, i).as_word();
        (x < pivot ? lt : x == pivot ? eq : gt).push_back(x);
    }
    Local lo(seq::from_words(lt));
    Local hi(seq::from_words(gt));
    Local slo(pure_qsort(lo));
    Local shi(pure_qsort(hi));
    std::vector<Word> out;
    out.reserve(n);
    seq::append_to(slo, out);
    out.insert(out.end(), eq.begin(), eq.end());
    seq::append_to(shi, out);
    return seq::from_words(out);
}

/// In-place quicksort over a mutable scalar array, through memory operations.
inline void inplace_qsort(ObjRef a, std::size_t lo, std::size_t hi) {
    Memory& m = memory();
    auto rd = [&](std::size_t i) { return m.read_mutable(a, i).as_word(); };
    auto wr = [&](std::size_t i, Word v) { m.write_nonptr(a, i, v); };
    while (hi - lo > 16) {
        Word pivot = rd(lo + (hi - lo) / 2);
        std::size_t i = lo, j = hi - 1;
        for (;;) {
            while (rd(i) < pivot)
                ++i;
            while (rd(j) > pivot)
                --j;
            if (i >= j)
                break;
            Word t = rd(i);
            wr(i, rd(j));
            wr(j, t);
            ++i;
            --j;
        }
        // Recurse on the smaller side.
        if (j + 1 - lo < hi - (j + 1)) {
            inplace_qsort(a, lo, j + 1);
            lo = j + 1;
        } else {
            inplace_qsort(a, j + 1, hi);
            hi = j + 1;
        }
    }
    for (std::size_t i = lo + 1; i < hi; ++i) {
        Word x = rd(i);
        std::size_t k = i;
        for (; k > lo; --k) {
            Word y = rd(k - 1);
            if (y <= x)
                break;
            wr(k, y);
        }
        wr(k, x);
    }
}

inline ObjRef array_to_seq(ObjRef a, std::size_t n) {
    Memory& m = memory();
    std::vector<Word> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = m.read_mutable(a, i).as_word();
    return seq::from_words(v);
}

inline ObjRef imperative_sort_leaf(const std::vector<Word>& values) {
    Memory& m = memory();
    Local a(m.alloc_array(fields::scalar_mut, values.size(), Value::word(0)));
    for (std::size_t i = 0; i < values.size(); ++i)
        m.write_nonptr(a, i, values[i]);
    inplace_qsort(a, 0, values.size());
    return array_to_seq(a, values.size());
}

/// Hash-set insertion into a mutable table, then an in-place sort of the
/// distinct keys.
inline ObjRef dedup_leaf(const std::vector<Word>& values) {
    Memory& m = memory();
    constexpr Word kEmpty = ~Word{0};
    std::size_t cap = std::bit_ceil(std::max<std::size_t>(2 * values.size(), 4));
    Local table(m.alloc_array(fields::scalar_mut, cap, Value::word(kEmpty)));
    std::size_t distinct = 0;
    for (Word x : values) {
        for (std::size_t h = mix(x) & (cap - 1);; h = (h + 1) & (cap - 1)) {
            Word cur = m.read_mutable(table, h).as_word();
            if (cur == x)
                break;
            if (cur == kEmpty) {
                m.write_nonptr(table, h, x);
                ++distinct;
                break;
            }
        }
    }
    Local keys(m.alloc_array(fields::scalar_mut, distinct, Value::word(0)));
    std::size_t k = 0;
    for (std::size_t h = 0; h < cap; ++h) {
        Word cur = m.read_mutable(table, h).as_word();
        if (cur != kEmpty)
            m.write_nonptr(keys, k++, cur);
    }
    inplace_qsort(keys, 0, distinct);
    return array_to_seq(keys, distinct);
}

enum class SortKind { Pure, Imperative, Dedup };

/// Follows the rope structure of s: leaves are sorted sequentially, inner
/// nodes sort both halves in parallel and merge.
inline ObjRef msort_rope(ObjRef s, std::size_t grain, SortKind kind) {
    if (seq::is_leaf(s) || seq::length(s) <= grain) {
        if (kind == SortKind::Pure) {
            if (seq::is_leaf(s))
                return pure_qsort(s);
            Local flat(seq::from_words(seq::to_vector(s)));
            return pure_qsort(flat);
        }
        auto values = seq::to_vector(s);
        return kind == SortKind::Dedup ? dedup_leaf(values) : imperative_sort_leaf(values);
    }
    ObjRef l = seq::left(s);
    ObjRef r = seq::right(s);
    auto [sl, sr] = forkjoin([&] { return msort_rope(l, grain, kind); }, [&] { return msort_rope(r, grain, kind); });
    Local a(sl);
    Local b(sr);
    return merge(seq::Slice::of(a), seq::Slice::of(b), grain, kind == SortKind::Dedup);
}

inline BenchOutcome sort_bench(Runtime& rt, const BenchParams& p, SortKind kind) {
    std::uint64_t modulus = kind == SortKind::Dedup ? std::max<std::uint64_t>(p.size / 10, 1) : 0;
    std::uint64_t seed = p.seed;
    ObjRef out = rt.run([&] {
        Local in(seq::tabulate(0, p.size,
                               [=](std::size_t i) {
                                   Word x = input_value(seed, i);
                                   return modulus ? x % modulus : x;
                               },
                               p.grain));
        return msort_rope(in, p.grain, kind);
    });
    auto want = input_oracle(p.size, p.seed);
    if (modulus)
        for (Word& x : want)
            x %= modulus;
    std::sort(want.begin(), want.end());
    if (kind == SortKind::Dedup)
        want.erase(std::unique(want.begin(), want.end()), want.end());
    return compare_words(raw::rope_words(rt.store(), out), want);
}

inline BenchOutcome msort_pure(Runtime& rt, const BenchParams& p) { return sort_bench(rt, p, SortKind::Pure); }
inline BenchOutcome msort(Runtime& rt, const BenchParams& p) { return sort_bench(rt, p, SortKind::Imperative); }
inline BenchOutcome dedup(Runtime& rt, const BenchParams& p) { return sort_bench(rt, p, SortKind::Dedup); }

// ---------------------------------------------------------------- tourney

namespace tourney_detail {

inline const ObjectLayout& contestant_layout() {
    static const ObjectLayout l = ObjectLayout::of({fields::scalar_imm, fields::ref_mut});
    return l;
}
// {winner, contestants}: contestants is a rope whose leaves are arrays of
// contestant references.
inline const ObjectLayout& result_layout() {
    static const ObjectLayout l = ObjectLayout::of({fields::ref_imm, fields::ref_imm});
    return l;
}

inline constexpr std::size_t kFitness = 0;
inline constexpr std::size_t kParent = 1;

inline Word fitness(std::uint64_t seed, std::size_t i) { return input_value(seed ^ 0x70u, i); }

/// Links the loser of a and b under the winner and returns the winner.
inline ObjRef play(ObjRef a, ObjRef b) {
    Memory& m = memory();
    Word fa = m.read_immutable(a, kFitness).as_word();
    Word fb = m.read_immutable(b, kFitness).as_word();
    ObjRef winner = fa >= fb ? a : b;
    ObjRef loser = fa >= fb ? b : a;
    m.write_ptr(loser, kParent, winner);
    return winner;
}

inline ObjRef rounds(const LocalVector& cs, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1)
        return cs[lo];
    std::size_t mid = lo + (hi - lo) / 2;
    ObjRef a = rounds(cs, lo, mid);
    ObjRef b = rounds(cs, mid, hi);
    return play(a, b);
}

// Contestants are created inside the tournament's own leaf tasks, so every
// join-point link stays in the joining task's heap.
inline ObjRef run(std::size_t lo, std::size_t hi, std::size_t grain, std::uint64_t seed) {
    Memory& m = memory();
    if (hi - lo <= grain) {
        LocalVector cs;
        for (std::size_t i = lo; i < hi; ++i)
            cs.push_back(m.alloc(contestant_layout(), {Value::word(fitness(seed, i)), Value::null()}));
        Local winner(rounds(cs, 0, cs.size()));
        std::vector<Value> init;
        init.reserve(cs.size());
        for (ObjRef c : cs.refs())
            init.push_back(Value::ref(c));
        Local leaf(m.alloc(ObjectLayout::array(fields::ref_imm, init.size()), init));
        return m.alloc(result_layout(), {Value::ref(winner), Value::ref(leaf)});
    }
    std::size_t mid = lo + (hi - lo) / 2;
    auto [rl, rr] = forkjoin([&] { return run(lo, mid, grain, seed); }, [&] { return run(mid, hi, grain, seed); });
    Local l(rl);
    Local r(rr);
    Local winner(play(m.read_immutable(l, 0).as_ref(), m.read_immutable(r, 0).as_ref()));
    std::size_t n = hi - lo;
    Local node(m.alloc(seq::node_layout(), {m.read_immutable(l, 1), m.read_immutable(r, 1), Value::word(n)}));
    return m.alloc(result_layout(), {Value::ref(winner), Value::ref(node)});
}

inline void contestants(const ObjectStore& s, ObjRef rope, std::vector<ObjRef>& out) {
    auto layout = s.layout_of(rope);
    if (layout.is_array()) {
        for (std::size_t i = 0; i < layout.arity(); ++i)
            out.push_back(raw::ref(s, rope, i));
        return;
    }
    contestants(s, raw::ref(s, rope, seq::kLeft), out);
    contestants(s, raw::ref(s, rope, seq::kRight), out);
}

} // namespace tourney_detail

inline BenchOutcome tourney(Runtime& rt, const BenchParams& p) {
    using namespace tourney_detail;
    HH_CHECK(p.size >= 1, "tourney needs at least one contestant");
    ObjRef result = rt.run([&] { return run(0, p.size, std::max<std::uint64_t>(p.grain, 1), p.seed); });
    const ObjectStore& s = rt.store();
    ObjRef winner = raw::master(s, raw::ref(s, result, 0));
    std::vector<ObjRef> cs;
    contestants(s, raw::ref(s, result, 1), cs);
    BenchOutcome o;
    Word best = 0;
    for (std::size_t i = 0; i < p.size; ++i)
        best = std::max(best, fitness(p.seed, i));
    bool ok = cs.size() == p.size && raw::word(s, winner, kFitness) == best &&
              raw::ref(s, winner, kParent).is_null();
    for (std::size_t i = 0; ok && i < cs.size(); ++i) {
        ObjRef c = raw::master(s, cs[i]);
        ok = raw::word(s, c, kFitness) == fitness(p.seed, i);
        // Parents never lose to their children, and every chain ends at the winner.
        std::size_t hops = 0;
        while (ok) {
            ObjRef parent = raw::ref(s, c, kParent);
            if (parent.is_null())
                break;
            parent = raw::master(s, parent);
            ok = raw::word(s, parent, kFitness) >= raw::word(s, c, kFitness) && ++hops <= 64;
            c = parent;
        }
        ok = ok && c == winner;
    }
    o.verified = ok;
    o.checksum = best;
    o.detail = ok ? "winner chain of every contestant reaches the maximum " + std::to_string(best)
                  : "tournament tree is inconsistent";
    return o;
}

// ---------------------------------------------------------------- breadth-first search

enum class BfsKind { Reachability, Usp, UspTree };

namespace bfs_detail {

inline const ObjectLayout& cons_layout() {
    static const ObjectLayout l = ObjectLayout::of({fields::scalar_imm, fields::ref_imm});
    return l;
}

struct GraphRefs {
    Local offsets;
    Local targets;
    Local visited;
    Local dist;
    Local ancestors;
};

inline ObjRef copy_array(const std::vector<std::uint64_t>& v) {
    return memory().alloc_words(ObjectLayout::array(fields::scalar_imm, v.size()), v);
}

} // namespace bfs_detail

inline BenchOutcome bfs(Runtime& rt, const BenchParams& p, BfsKind kind) {
    using namespace bfs_detail;
    HH_CHECK(p.graph != nullptr, "graph benchmark without a graph");
    const graph::Csr& g = *p.graph;
    const std::uint64_t n = g.vertices;
    const std::uint64_t source = 0;
    const std::size_t grain = std::max<std::uint64_t>(p.grain, 1);
    ObjRef visited_out, dist_out, anc_out;

    rt.run([&] {
        Memory& m = memory();
        GraphRefs gr;
        gr.offsets = copy_array(g.offsets);
        gr.targets = copy_array(g.targets);
        gr.visited = m.alloc_array(fields::scalar_mut, n, Value::word(0));
        gr.dist = m.alloc_array(fields::scalar_mut, n, Value::word(graph::kUnreached));
        if (kind == BfsKind::UspTree)
            gr.ancestors = m.alloc_array(fields::ref_mut, n, Value::null());
        m.write_nonptr(gr.visited, source, 1);
        m.write_nonptr(gr.dist, source, 0);

        std::vector<Word> frontier{source};
        for (Word round = 1; !frontier.empty(); ++round) {
            auto visit = [&](std::size_t i, std::vector<Word>& next) {
                Memory& mm = memory();
                ObjRef offsets = gr.offsets, targets = gr.targets, visited = gr.visited, dist = gr.dist;
                Word u = frontier[i];
                Word b = mm.read_immutable(offsets, u).as_word();
                Word e = mm.read_immutable(offsets, u + 1).as_word();
                for (Word k = b; k < e; ++k) {
                    Word v = mm.read_immutable(targets, k).as_word();
                    if (kind == BfsKind::Reachability) {
                        // Racy check-then-set; a vertex may be expanded twice.
                        if (mm.read_mutable(visited, v).as_word() == 0) {
                            mm.write_nonptr(visited, v, 1);
                            next.push_back(v);
                        }
                        continue;
                    }
                    if (!mm.compare_and_swap(visited, v, 0, 1))
                        continue;
                    mm.write_nonptr(dist, v, round);
                    if (kind == BfsKind::UspTree) {
                        ObjRef anc = gr.ancestors;
                        ObjRef tail = mm.read_mutable(anc, u).as_ref();
                        ObjRef cell = mm.alloc(cons_layout(), {Value::word(u), Value::ref(tail)});
                        mm.write_ptr(gr.ancestors, v, cell);
                    }
                    next.push_back(v);
                }
            };
            Local next(seq::flatten_tabulate(0, frontier.size(), visit, grain));
            frontier = seq::to_vector(next);
        }
        visited_out = gr.visited;
        dist_out = gr.dist;
        anc_out = gr.ancestors;
    });

    const ObjectStore& s = rt.store();
    const auto want = graph::bfs_distances(g, source);
    visited_out = raw::master(s, visited_out);
    dist_out = raw::master(s, dist_out);
    BenchOutcome o;
    o.verified = true;
    std::uint64_t reached = 0;
    for (std::uint64_t v = 0; v < n && o.verified; ++v) {
        bool seen = raw::word(s, visited_out, v) != 0;
        reached += seen;
        o.verified = seen == (want[v] != graph::kUnreached);
        if (kind != BfsKind::Reachability)
            o.verified = o.verified && raw::word(s, dist_out, v) == want[v];
    }
    if (kind == BfsKind::UspTree) {
        anc_out = raw::master(s, anc_out);
        for (std::uint64_t v = 0; v < n && o.verified; ++v) {
            if (want[v] == graph::kUnreached)
                continue;
            // The ancestor list of v walks a shortest path back to the source.
            std::uint64_t at = v, len = 0;
            for (ObjRef c = raw::ref(s, anc_out, v); o.verified && !c.is_null(); ++len) {
                c = raw::master(s, c);
                std::uint64_t u = raw::word(s, c, 0);
                o.verified = u < n && graph::has_edge(g, u, at) && want[u] + 1 == want[at];
                at = u;
                c = raw::ref(s, c, 1);
            }
            o.verified = o.verified && at == source && len == want[v];
        }
    }
    std::vector<Word> dist(want.begin(), want.end());
    o.checksum = fold_checksum(dist);
    o.detail = std::to_string(reached) + " of " + std::to_string(n) + " vertices reached" +
               (o.verified ? ", matches sequential BFS" : ", MISMATCH against sequential BFS");
    return o;
}

inline BenchOutcome reachability(Runtime& rt, const BenchParams& p) { return bfs(rt, p, BfsKind::Reachability); }
inline BenchOutcome usp(Runtime& rt, const BenchParams& p) { return bfs(rt, p, BfsKind::Usp); }
inline BenchOutcome usp_tree(Runtime& rt, const BenchParams& p) { return bfs(rt, p, BfsKind::UspTree); }

struct BenchInfo {
    const char* name;
    BenchOutcome (*fn)(Runtime&, const BenchParams&);
    std::uint64_t default_size;
    std::uint64_t default_grain;
    bool pure;
    bool graph;
};

inline const std::vector<BenchInfo>& catalog() {
    static const std::vector<BenchInfo> all = {
        {"fib", fib, 27, 18, true, false},
        {"tabulate", tabulate, 1000000, 1000, true, false},
        {"map", map, 1000000, 1000, true, false},
        {"reduce", reduce, 1000000, 1000, true, false},
        {"filter", filter, 1000000, 1000, true, false},
        {"msort-pure", msort_pure, 200000, 1000, true, false},
        {"msort", msort, 1000000, 1000, false, false},
        {"dedup", dedup, 1000000, 1000, false, false},
        {"tourney", tourney, 1000000, 1000, false, false},
        {"reachability", reachability, 10000, 64, false, true},
        {"usp", usp, 10000, 64, false, true},
        {"usp-tree", usp_tree, 10000, 64, false, true},
    };
    return all;
}

inline const BenchInfo* find(const std::string& name) {
    for (const auto& b : catalog())
        if (name == b.name)
            return &b;
    return nullptr;
}

} // namespace hh::bench
