#pragma once

#include <algorithm>
#include <vector>

#include "hh/runtime.hpp"

// Immutable sequences as ropes: leaves are flat word arrays, inner nodes
// hold two children and the total length.
namespace hh::seq {

inline const ObjectLayout& node_layout() {
    static const ObjectLayout layout = ObjectLayout::of({fields::ref_imm, fields::ref_imm, fields::scalar_imm});
    return layout;
}

inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
inline constexpr std::size_t kLength = 2;

// Layouts are fixed at allocation, so this is metadata rather than a field read.
inline bool is_leaf(ObjRef s) { return memory().store().layout_of(s).is_array(); }

inline std::size_t length(ObjRef s) {
    Memory& m = memory();
    if (m.store().layout_of(s).is_array())
        return m.store().arity(s);
    return m.read_immutable(s, kLength).as_word();
}

inline ObjRef left(ObjRef node) { return memory().read_immutable(node, kLeft).as_ref(); }
inline ObjRef right(ObjRef node) { return memory().read_immutable(node, kRight).as_ref(); }

inline ObjRef from_words(std::span<const Word> values) {
    return memory().alloc_words(ObjectLayout::array(fields::scalar_imm, values.size()), values);
}

inline ObjRef empty() { return from_words({}); }

inline ObjRef concat(ObjRef a, ObjRef b) {
    std::size_t la = length(a);
    std::size_t lb = length(b);
    if (la == 0)
        return b;
    if (lb == 0)
        return a;
    return memory().alloc(node_layout(), {Value::ref(a), Value::ref(b), Value::word(la + lb)});
}

/// Appends every element of s, in order, to out.
inline void append_to(ObjRef s, std::vector<Word>& out) {
    Memory& m = memory();
    if (is_leaf(s)) {
        std::size_t n = m.store().arity(s);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(m.read_immutable(s, i).as_word());
        return;
    }
    append_to(left(s), out);
    append_to(right(s), out);
}

inline std::vector<Word> to_vector(ObjRef s) {
    std::vector<Word> out;
    out.reserve(length(s));
    append_to(s, out);
    return out;
}

inline Word get(ObjRef s, std::size_t i) {
    while (!is_leaf(s)) {
        ObjRef l = left(s);
        std::size_t ll = length(l);
        if (i < ll) {
            s = l;
        } else {
            i -= ll;
            s = right(s);
        }
    }
    return memory().read_immutable(s, i).as_word();
}

/// A window [off, off+len) onto a rope.
struct Slice {
    ObjRef rope;
    std::size_t off = 0;
    std::size_t len = 0;

    static Slice of(ObjRef s) { return {s, 0, length(s)}; }
    Word operator[](std::size_t i) const { return get(rope, off + i); }
    Slice sub(std::size_t from, std::size_t to) const { return {rope, off + from, to - from}; }
};

namespace detail {

inline void read_range(ObjRef s, std::size_t off, std::size_t len, std::vector<Word>& out) {
    if (len == 0)
        return;
    Memory& m = memory();
    if (is_leaf(s)) {
        for (std::size_t i = off; i < off + len; ++i)
            out.push_back(m.read_immutable(s, i).as_word());
        return;
    }
    ObjRef l = left(s);
    std::size_t ll = length(l);
    if (off < ll) {
        std::size_t take = std::min(len, ll - off);
        read_range(l, off, take, out);
        read_range(right(s), 0, len - take, out);
    } else {
        read_range(right(s), off - ll, len, out);
    }
}

} // namespace detail

inline std::vector<Word> read(const Slice& s) {
    std::vector<Word> out;
    out.reserve(s.len);
    detail::read_range(s.rope, s.off, s.len, out);
    return out;
}

template <typename F>
ObjRef tabulate(std::size_t lo, std::size_t hi, const F& f, std::size_t grain) {
    if (hi - lo <= grain) {
        std::vector<Word> v(hi - lo);
        for (std::size_t i = lo; i < hi; ++i)
            v[i - lo] = f(i);
        return from_words(v);
    }
    std::size_t mid = lo + (hi - lo) / 2;
    auto [l, r] = forkjoin([&] { return tabulate(lo, mid, f, grain); }, [&] { return tabulate(mid, hi, f, grain); });
    return concat(l, r);
}

template <typename F>
ObjRef map(ObjRef s, const F& f) {
    if (is_leaf(s)) {
        Memory& m = memory();
        std::size_t n = m.store().arity(s);
        std::vector<Word> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = f(m.read_immutable(s, i).as_word());
        return from_words(v);
    }
    ObjRef l = left(s);
    ObjRef r = right(s);
    auto [ml, mr] = forkjoin([&] { return map(l, f); }, [&] { return map(r, f); });
    return concat(ml, mr);
}

template <typename Op>
Word reduce(ObjRef s, Word identity, const Op& op) {
    if (is_leaf(s)) {
        Memory& m = memory();
        std::size_t n = m.store().arity(s);
        Word acc = identity;
        for (std::size_t i = 0; i < n; ++i)
            acc = op(acc, m.read_immutable(s, i).as_word());
        return acc;
    }
    ObjRef l = left(s);
    ObjRef r = right(s);
    auto [a, b] = forkjoin([&] { return reduce(l, identity, op); }, [&] { return reduce(r, identity, op); });
    return op(a, b);
}

template <typename P>
ObjRef filter(ObjRef s, const P& p) {
    if (is_leaf(s)) {
        Memory& m = memory();
        std::size_t n = m.store().arity(s);
        std::vector<Word> v;
        for (std::size_t i = 0; i < n; ++i) {
            Word x = m.read_immutable(s, i).as_word();
            if (p(x))
                v.push_back(x);
        }
        return from_words(v);
    }
    ObjRef l = left(s);
    ObjRef r = right(s);
    auto [fl, fr] = forkjoin([&] { return filter(l, p); }, [&] { return filter(r, p); });
    return concat(fl, fr);
}

/// Concatenation of per-index word lists produced in parallel over [lo, hi).
template <typename F>
ObjRef flatten_tabulate(std::size_t lo, std::size_t hi, const F& f, std::size_t grain) {
    if (hi - lo <= grain) {
        std::vector<Word> v;
        for (std::size_t i = lo; i < hi; ++i)
            f(i, v);
        return from_words(v);
    }
    std::size_t mid = lo + (hi - lo) / 2;
    auto [l, r] = forkjoin([&] { return flatten_tabulate(lo, mid, f, grain); },
                           [&] { return flatten_tabulate(mid, hi, f, grain); });
    return concat(l, r);
}

} // namespace hh::seq
