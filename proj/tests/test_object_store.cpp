#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "support.hpp"

using namespace hh;
using hh::test::Env;

namespace {

const ObjectLayout& mixed3() {
    static const ObjectLayout l = ObjectLayout::of({fields::scalar_imm, fields::ref_mut, fields::scalar_mut});
    return l;
}

} // namespace

TEST(ObjectStore, FreshObjReadsBackInit) {
    Env env;
    auto layout = ObjectLayout::of({fields::scalar_mut});
    ObjRef r = env.hier.fresh_obj(env.root(), layout, {Value::word(42)});
    EXPECT_EQ(env.store.heap_of(r), env.root());
    EXPECT_EQ(env.store.get_field(r, 0).as_word(), 42u);
    EXPECT_FALSE(env.store.has_fwd(r));
}

TEST(ObjectStore, EmptyLayoutIsValid) {
    Env env;
    ObjRef r = env.hier.fresh_obj(env.root(), ObjectLayout::of({}), {});
    EXPECT_TRUE(env.store.is_valid(r));
    EXPECT_EQ(env.store.arity(r), 0u);
    EXPECT_TRUE(env.store.ptr_fields(r).empty());
    EXPECT_TRUE(env.store.nonptr_fields(r).empty());
}

TEST(ObjectStore, TenThousandAllocationsAreDistinct) {
    Env env;
    std::set<Word> seen;
    auto layout = ObjectLayout::of({fields::scalar_imm});
    for (Word i = 0; i < 10'000; ++i)
        seen.insert(env.hier.fresh_obj(env.root(), layout, {Value::word(i)}).bits());
    EXPECT_EQ(seen.size(), 10'000u);
}

TEST(ObjectStore, OccupancyGrowsByRecordSize) {
    Env env;
    HeapId h = env.chain(1);
    auto before = env.hier.heap(h).occupancy();
    env.hier.fresh_obj(h, mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    EXPECT_EQ(env.hier.heap(h).occupancy() - before, ObjectStore::record_bytes(mixed3()));
    EXPECT_EQ(ObjectStore::record_bytes(mixed3()), (2 + 3) * sizeof(Word));
}

TEST(ObjectStore, InitMismatchIsContractViolation) {
    Env env;
    EXPECT_THROW(env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1)}), ContractViolation);
    EXPECT_THROW(env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::word(2), Value::word(3)}),
                 ContractViolation);
}

TEST(ObjectStore, UnknownHeapIsStructuralError) {
    Env env;
    EXPECT_THROW(env.hier.fresh_obj(9999, mixed3(), {Value::word(1), Value::null(), Value::word(2)}),
                 StructuralError);
}

TEST(ObjectStore, SetThenGet) {
    Env env;
    ObjRef r = env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    env.store.set_field(r, 0, Value::word(7));
    EXPECT_EQ(env.store.get_field(r, 0).as_word(), 7u);
    EXPECT_EQ(env.store.get_field(r, 2).as_word(), 2u);
    EXPECT_TRUE(env.store.get_field(r, 1).as_ref().is_null());
}

TEST(ObjectStore, FieldIndexOutOfRange) {
    Env env;
    ObjRef r = env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    EXPECT_THROW(env.store.get_field(r, 3), ContractViolation);
    EXPECT_THROW(env.store.set_field(r, 3, Value::word(0)), ContractViolation);
}

TEST(ObjectStore, KindSafetyOnRawWrites) {
    Env env;
    ObjRef r = env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    EXPECT_THROW(env.store.set_field(r, 0, Value::ref(r)), ContractViolation);
    EXPECT_THROW(env.store.set_field(r, 1, Value::word(5)), ContractViolation);
}

TEST(ObjectStore, RandomSetGetMatchesArrayModel) {
    Env env;
    std::mt19937_64 rng(7);
    constexpr std::size_t n = 64;
    std::vector<FieldDescriptor> descs(n);
    for (auto& d : descs)
        d = (rng() & 1) ? fields::ref_mut : fields::scalar_mut;
    auto layout = ObjectLayout::of(std::span<const FieldDescriptor>(descs));
    std::vector<Value> init;
    for (auto d : descs)
        init.push_back(d.is_ref() ? Value::null() : Value::word(0));
    ObjRef obj = env.hier.fresh_obj(env.root(), layout, init);
    std::vector<ObjRef> targets;
    for (int i = 0; i < 8; ++i)
        targets.push_back(env.hier.fresh_obj(env.root(), ObjectLayout::of({}), {}));

    std::vector<Word> model(n);
    for (std::size_t i = 0; i < n; ++i)
        model[i] = init[i].bits();
    for (int step = 0; step < 20'000; ++step) {
        std::size_t i = rng() % n;
        if (rng() % 3 == 0) {
            ASSERT_EQ(env.store.get_field(obj, i).bits(), model[i]) << "step " << step;
            continue;
        }
        Value v = descs[i].is_ref() ? (rng() % 4 == 0 ? Value::null() : Value::ref(targets[rng() % targets.size()]))
                                    : Value::word(rng());
        env.store.set_field(obj, i, v);
        model[i] = v.bits();
    }
    for (std::size_t i = 0; i < n; ++i)
        EXPECT_EQ(env.store.get_field(obj, i).bits(), model[i]);
}

TEST(ObjectStore, PtrFieldsPartitionExample) {
    Env env;
    auto layout = ObjectLayout::of({fields::scalar_imm, fields::ref_imm, fields::scalar_mut});
    ObjRef r = env.hier.fresh_obj(env.root(), layout, {Value::word(0), Value::null(), Value::word(0)});
    EXPECT_EQ(env.store.ptr_fields(r), (std::vector<std::size_t>{1}));
    EXPECT_EQ(env.store.nonptr_fields(r), (std::vector<std::size_t>{0, 2}));
}

TEST(ObjectStore, RandomLayoutsPartitionIndexRange) {
    std::mt19937_64 rng(11);
    const FieldDescriptor all[] = {fields::scalar_imm, fields::scalar_mut, fields::ref_imm, fields::ref_mut};
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = rng() % 40;
        std::vector<FieldDescriptor> descs(n);
        for (auto& d : descs)
            d = all[rng() % 4];
        ObjectLayout layout = (trial % 5 == 0 && n > 0) ? ObjectLayout::array(descs[0], n)
                                                        : ObjectLayout::of(std::span<const FieldDescriptor>(descs));
        auto p = layout.ptr_fields();
        auto q = layout.nonptr_fields();
        EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
        EXPECT_TRUE(std::is_sorted(q.begin(), q.end()));
        std::vector<std::size_t> both;
        std::set_intersection(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(both));
        EXPECT_TRUE(both.empty());
        std::vector<std::size_t> uni;
        std::set_union(p.begin(), p.end(), q.begin(), q.end(), std::back_inserter(uni));
        std::vector<std::size_t> range(layout.arity());
        std::iota(range.begin(), range.end(), std::size_t{0});
        EXPECT_EQ(uni, range);
        for (auto i : p)
            EXPECT_TRUE(layout.descriptor(i).is_ref());
    }
}

TEST(ObjectStore, LayoutHeaderRoundTrip) {
    auto a = ObjectLayout::of({fields::ref_imm, fields::scalar_mut});
    auto b = ObjectLayout::array(fields::ref_mut, 1000);
    EXPECT_EQ(ObjectLayout::from_header(a.header()), a);
    EXPECT_EQ(ObjectLayout::from_header(b.header()), b);
    EXPECT_EQ(ObjectLayout::from_header(b.header()).arity(), 1000u);
    EXPECT_EQ(ObjectLayout::of({fields::ref_imm, fields::scalar_mut}), a); // interned
}

TEST(ObjectStore, ForwardingSlot) {
    Env env;
    ObjRef a = env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    ObjRef b = env.hier.fresh_obj(env.root(), mixed3(), {Value::word(1), Value::null(), Value::word(2)});
    EXPECT_FALSE(env.store.has_fwd(a));
    EXPECT_THROW(env.store.read_fwd(a), ContractViolation);
    env.store.set_fwd(a, b);
    EXPECT_TRUE(env.store.has_fwd(a));
    EXPECT_EQ(env.store.read_fwd(a), b);
    EXPECT_THROW(env.store.set_fwd(a, b), ContractViolation);
    // Fields are untouched by the forwarding slot.
    EXPECT_EQ(env.store.get_field(a, 0).as_word(), 1u);
    EXPECT_EQ(env.store.get_field(a, 2).as_word(), 2u);
}

TEST(ObjectStore, HeapOfFollowsJoin) {
    Env env;
    HeapId c = env.chain(1);
    ObjRef r = env.hier.fresh_obj(c, mixed3(), {Value::word(3), Value::null(), Value::word(4)});
    Word bits = r.bits();
    EXPECT_EQ(env.store.heap_of(r), c);
    env.hier.join_heap(env.root(), c);
    EXPECT_EQ(env.store.heap_of(r), env.root());
    EXPECT_EQ(r.bits(), bits);
    EXPECT_EQ(env.store.get_field(r, 0).as_word(), 3u);
    EXPECT_EQ(env.store.get_field(r, 2).as_word(), 4u);
}

TEST(ObjectStore, HeapOfMatchesAllocationLogAcrossJoins) {
    Env env;
    std::mt19937_64 rng(5);
    // root -> a -> {b, c}, root -> d
    HeapId root = env.root();
    HeapId a = env.hier.new_child_heap(root);
    HeapId b = env.hier.new_child_heap(a);
    HeapId c = env.hier.new_child_heap(a);
    HeapId d = env.hier.new_child_heap(root);
    std::vector<HeapId> heaps{root, a, b, c, d};
    std::vector<std::pair<ObjRef, HeapId>> log;
    auto layout = ObjectLayout::of({fields::scalar_imm});
    for (int i = 0; i < 1000; ++i) {
        HeapId h = heaps[rng() % heaps.size()];
        log.emplace_back(env.hier.fresh_obj(h, layout, {Value::word(static_cast<Word>(i))}), h);
    }
    auto check = [&] {
        for (auto& [obj, h] : log)
            ASSERT_EQ(env.store.heap_of(obj), h);
    };
    check();
    // Replay joins on the log: everything owned by the child moves to the parent.
    auto join = [&](HeapId parent, HeapId child) {
        env.hier.join_heap(parent, child);
        for (auto& [obj, h] : log)
            if (h == child)
                h = parent;
        check();
    };
    join(a, c);
    join(a, b);
    join(root, d);
    join(root, a);
    for (std::size_t i = 0; i < log.size(); ++i)
        EXPECT_EQ(env.store.get_field(log[i].first, 0).as_word(), i);
}

TEST(ObjectStore, ChunksGrowAndLargeObjectsGetOwnChunk) {
    Env env;
    HeapId h = env.chain(1);
    auto small = ObjectLayout::array(fields::scalar_imm, 14); // 16 words
    for (int i = 0; i < 200; ++i)
        env.hier.fresh_blank(h, small);
    const auto& chunks = env.hier.heap(h).space().chunks;
    ASSERT_GE(chunks.size(), 2u);
    EXPECT_GE(env.store.chunk(chunks[1]).capacity(), env.store.chunk(chunks[0]).capacity());
    auto huge_words = env.store.config().max_chunk_words * 2;
    ObjRef big = env.hier.fresh_blank(h, ObjectLayout::array(fields::scalar_imm, huge_words));
    EXPECT_EQ(env.store.chunk(big.chunk()).capacity(), huge_words + ObjectStore::kHeaderWords);
    EXPECT_EQ(env.store.arity(big), huge_words);
}

TEST(ObjectStore, KindSafetyByFullScan) {
    Env env;
    std::mt19937_64 rng(3);
    std::vector<ObjRef> objs;
    for (int i = 0; i < 500; ++i) {
        Value ref = objs.empty() ? Value::null() : Value::ref(objs[rng() % objs.size()]);
        objs.push_back(env.hier.fresh_obj(env.root(), mixed3(), {Value::word(rng()), ref, Value::word(rng())}));
    }
    std::size_t scanned = 0;
    env.store.for_each_object([&](ObjRef o, HeapId) {
        ++scanned;
        env.store.layout_of(o).for_each_ptr_field([&](std::size_t k) {
            ObjRef t = env.store.get_field(o, k).as_ref();
            EXPECT_TRUE(t.is_null() || env.store.is_valid(t));
        });
    });
    EXPECT_EQ(scanned, objs.size());
}
