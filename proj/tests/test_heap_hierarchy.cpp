#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <random>
#include <thread>

#include "support.hpp"

using namespace hh;
using hh::test::Env;

TEST(HeapHierarchy, RootAtDepthZeroChildAtOne) {
    Env env;
    EXPECT_EQ(env.hier.depth(env.root()), 0);
    HeapId c = env.hier.new_child_heap(env.root());
    EXPECT_EQ(env.hier.depth(c), 1);
    EXPECT_EQ(env.hier.parent(c), env.root());
}

TEST(HeapHierarchy, ChainOfKHasLeafDepthK) {
    Env env;
    for (int k : {1, 2, 5, 17}) {
        HeapId leaf = env.chain(k);
        EXPECT_EQ(env.hier.depth(leaf), k);
        // parent links reach the root in exactly depth steps
        HeapId h = leaf;
        for (int i = 0; i < k; ++i)
            h = env.hier.parent(h);
        EXPECT_EQ(h, env.root());
    }
}

TEST(HeapHierarchy, SiblingsAreUnrelated) {
    Env env;
    HeapId a = env.hier.new_child_heap(env.root());
    HeapId b = env.hier.new_child_heap(env.root());
    EXPECT_FALSE(env.hier.ancestor_or_self(a, b));
    EXPECT_FALSE(env.hier.ancestor_or_self(b, a));
    EXPECT_TRUE(env.hier.ancestor_or_self(env.root(), a));
    EXPECT_FALSE(env.hier.ancestor_or_self(a, env.root()));
    EXPECT_TRUE(env.hier.ancestor_or_self(a, a));
}

TEST(HeapHierarchy, UnknownHeapIsStructuralError) {
    Env env;
    EXPECT_THROW(env.hier.new_child_heap(12345), StructuralError);
    EXPECT_THROW(env.hier.depth(12345), StructuralError);
    EXPECT_THROW(env.hier.ancestor_or_self(env.root(), 12345), StructuralError);
}

TEST(HeapHierarchy, GlobalHeapIsOutsideTheTree) {
    Env env;
    HeapId leaf = env.chain(3);
    EXPECT_FALSE(env.hier.ancestor_or_self(env.hier.global(), leaf));
    EXPECT_FALSE(env.hier.ancestor_or_self(env.root(), env.hier.global()));
    EXPECT_TRUE(env.hier.ancestor_or_self(env.hier.global(), env.hier.global()));
}

TEST(HeapHierarchy, AncestryMatchesTransitiveClosure) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        Env env;
        std::vector<HeapId> heaps{env.root()};
        std::vector<std::size_t> parent_index{0};
        std::size_t n = 2 + rng() % 60;
        for (std::size_t i = 1; i < n; ++i) {
            std::size_t p = rng() % heaps.size();
            heaps.push_back(env.hier.new_child_heap(heaps[p]));
            parent_index.push_back(p);
        }
        // closure[i][j]: heap i is an ancestor-or-self of heap j
        std::vector<std::vector<bool>> closure(n, std::vector<bool>(n, false));
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = j;
            closure[k][j] = true;
            while (k != 0) {
                k = parent_index[k];
                closure[k][j] = true;
            }
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                ASSERT_EQ(env.hier.ancestor_or_self(heaps[i], heaps[j]), closure[i][j]) << i << " " << j;
    }
}

TEST(HeapHierarchy, JoinMovesOwnershipWithoutMovingBytes) {
    Env env;
    HeapId c = env.hier.new_child_heap(env.root());
    auto layout = ObjectLayout::of({fields::scalar_mut, fields::ref_mut});
    ObjRef x = env.hier.fresh_obj(c, layout, {Value::word(9), Value::null()});
    ObjRef y = env.hier.fresh_obj(c, layout, {Value::word(8), Value::ref(x)});
    auto root_occ = env.hier.heap(env.root()).occupancy();
    auto child_occ = env.hier.heap(c).occupancy();
    auto bytes = env.store.bytes_in_use();
    env.hier.join_heap(env.root(), c);
    EXPECT_EQ(env.store.heap_of(x), env.root());
    EXPECT_EQ(env.store.heap_of(y), env.root());
    EXPECT_EQ(env.store.get_field(y, 1).as_ref(), x);
    EXPECT_EQ(env.store.get_field(x, 0).as_word(), 9u);
    EXPECT_EQ(env.hier.heap(env.root()).occupancy(), root_occ + child_occ);
    EXPECT_EQ(env.store.bytes_in_use(), bytes);
    EXPECT_FALSE(env.hier.is_live(c));
    EXPECT_TRUE(env.hier.children(env.root()).empty());
}

TEST(HeapHierarchy, JoinOfHundredChunksAddsExactlyHundred) {
    StoreConfig sc;
    sc.min_chunk_words = 64;
    sc.max_chunk_words = 64;
    ObjectStore store(sc);
    HeapHierarchy hier(store);
    HeapId c = hier.new_child_heap(hier.root());
    hier.fresh_blank(hier.root(), ObjectLayout::array(fields::scalar_imm, 10));
    auto one_chunk = ObjectLayout::array(fields::scalar_imm, 62); // exactly 64 words
    for (int i = 0; i < 100; ++i)
        hier.fresh_blank(c, one_chunk);
    ASSERT_EQ(hier.heap(c).chunk_count(), 100u);
    // independent count over the chunk table
    auto owned_by = [&](HeapId h) {
        std::size_t n = 0;
        for (ChunkId id = 0; id < store.chunk_id_limit(); ++id)
            if (Chunk* ch = store.find_chunk(id); ch && !ch->retired() && ch->owner() == h)
                ++n;
        return n;
    };
    std::size_t before = owned_by(hier.root());
    hier.join_heap(hier.root(), c);
    EXPECT_EQ(owned_by(hier.root()), before + 100);
    EXPECT_EQ(hier.heap(hier.root()).chunk_count(), before + 100);
}

TEST(HeapHierarchy, JoinPreservesContentMultiset) {
    Env env;
    std::mt19937_64 rng(2);
    HeapId c = env.hier.new_child_heap(env.root());
    auto layout = ObjectLayout::of({fields::scalar_mut, fields::scalar_imm});
    for (int i = 0; i < 300; ++i)
        env.hier.fresh_obj((rng() & 1) ? c : env.root(), layout, {Value::word(rng()), Value::word(rng())});
    auto snapshot = [&](std::vector<HeapId> heaps) {
        std::multiset<std::tuple<Word, Word, Word>> s;
        env.store.for_each_object([&](ObjRef o, HeapId owner) {
            if (std::find(heaps.begin(), heaps.end(), owner) != heaps.end())
                s.emplace(o.bits(), env.store.get_field(o, 0).as_word(), env.store.get_field(o, 1).as_word());
        });
        return s;
    };
    auto before = snapshot({env.root(), c});
    env.hier.join_heap(env.root(), c);
    EXPECT_EQ(snapshot({env.root()}), before);
}

TEST(HeapHierarchy, JoinRejectsNonChildAndLiveChildren) {
    Env env;
    HeapId a = env.hier.new_child_heap(env.root());
    HeapId b = env.hier.new_child_heap(a);
    HeapId s = env.hier.new_child_heap(env.root());
    EXPECT_THROW(env.hier.join_heap(env.root(), b), ContractViolation); // grandchild
    EXPECT_THROW(env.hier.join_heap(s, a), ContractViolation);         // sibling
    EXPECT_THROW(env.hier.join_heap(env.root(), a), ContractViolation); // a still has b
    env.hier.join_heap(a, b);
    env.hier.join_heap(env.root(), a);
    EXPECT_THROW(env.hier.join_heap(env.root(), a), ContractViolation); // already retired
}

TEST(HeapHierarchy, JoinRejectsLockedChild) {
    Env env;
    HeapId c = env.hier.new_child_heap(env.root());
    env.hier.lock(c, LockMode::Read);
    EXPECT_THROW(env.hier.join_heap(env.root(), c), ContractViolation);
    env.hier.unlock(c);
    env.hier.join_heap(env.root(), c);
}

TEST(HeapLocks, ReentryAndUnmatchedUnlockAreRejected) {
    Env env;
    HeapId h = env.root();
    env.hier.lock(h, LockMode::Read);
    EXPECT_THROW(env.hier.lock(h, LockMode::Read), ContractViolation);
    EXPECT_THROW(env.hier.lock(h, LockMode::Write), ContractViolation);
    env.hier.unlock(h);
    EXPECT_THROW(env.hier.unlock(h), ContractViolation);
    EXPECT_EQ(env.hier.locks_held(), 0u);
}

TEST(HeapLocks, ConcurrentReadersProceed) {
    Env env;
    HeapId h = env.root();
    env.hier.lock(h, LockMode::Read);
    std::atomic<bool> got{false};
    std::thread t([&] {
        env.hier.lock(h, LockMode::Read);
        got = true;
        env.hier.unlock(h);
    });
    t.join();
    EXPECT_TRUE(got);
    env.hier.unlock(h);
}

TEST(HeapLocks, WriterWaitsForReader) {
    Env env;
    HeapId h = env.root();
    env.hier.lock(h, LockMode::Read);
    std::atomic<bool> got{false};
    std::thread t([&] {
        env.hier.lock(h, LockMode::Write);
        got = true;
        env.hier.unlock(h);
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    EXPECT_FALSE(got);
    env.hier.unlock(h);
    t.join();
    EXPECT_TRUE(got);
}

TEST(HeapLocks, WaitingWriterBlocksNewReaders) {
    RwLock lock;
    lock.lock_shared();
    std::thread writer([&] {
        lock.lock();
        lock.unlock();
    });
    while (lock.waiting_writers() == 0)
        std::this_thread::yield();
    EXPECT_FALSE(lock.try_lock_shared());
    lock.unlock_shared();
    writer.join();
    EXPECT_TRUE(lock.try_lock_shared());
    lock.unlock_shared();
}

TEST(HeapLocks, WriterNeverOverlapsReaders) {
    Env env;
    HeapId h = env.root();
    struct Interval {
        std::uint64_t begin, end;
        bool writer;
    };
    std::mutex log_mutex;
    std::vector<Interval> log;
    std::atomic<std::uint64_t> clock{0};
    auto worker = [&](bool writer, int rounds) {
        for (int i = 0; i < rounds; ++i) {
            env.hier.lock(h, writer ? LockMode::Write : LockMode::Read);
            std::uint64_t b = clock.fetch_add(1);
            for (int spin = 0; spin < 50; ++spin)
                cpu_relax();
            std::uint64_t e = clock.fetch_add(1);
            env.hier.unlock(h);
            std::lock_guard g(log_mutex);
            log.push_back({b, e, writer});
        }
    };
    std::vector<std::thread> ts;
    for (int r = 0; r < 4; ++r)
        ts.emplace_back(worker, false, 2000);
    ts.emplace_back(worker, true, 500);
    for (auto& t : ts)
        t.join();
    std::size_t writers = 0;
    for (const auto& w : log) {
        if (!w.writer)
            continue;
        ++writers;
        for (const auto& o : log) {
            if (&o == &w)
                continue;
            bool overlap = o.begin < w.end && w.begin < o.end;
            ASSERT_FALSE(overlap) << "writer [" << w.begin << "," << w.end << "] overlaps [" << o.begin << ","
                                  << o.end << "]";
        }
    }
    EXPECT_EQ(writers, 500u);
    EXPECT_EQ(log.size(), 8500u);
}

TEST(HeapLocks, LedgerFlagsShallowToDeepWriteOrder) {
    Env env;
    HeapId leaf = env.chain(2);
    HeapId mid = env.hier.parent(leaf);
    // deep to shallow: fine
    env.hier.lock(leaf, LockMode::Write);
    env.hier.lock(mid, LockMode::Write);
    env.hier.unlock(mid);
    env.hier.unlock(leaf);
    EXPECT_EQ(env.instr.lock_order_violations(), 0u);
    // shallow then deep: recorded
    env.hier.lock(mid, LockMode::Write);
    env.hier.lock(leaf, LockMode::Write);
    env.hier.unlock(leaf);
    env.hier.unlock(mid);
    EXPECT_EQ(env.instr.lock_order_violations(), 1u);
}

TEST(HeapLocks, PerHeapAcquisitionCounter) {
    Env env;
    HeapId c = env.hier.new_child_heap(env.root());
    for (int i = 0; i < 3; ++i) {
        env.hier.lock(c, LockMode::Read);
        env.hier.unlock(c);
    }
    EXPECT_EQ(env.hier.heap(c).lock_acquisitions(), 3u);
    EXPECT_EQ(env.hier.heap(env.root()).lock_acquisitions(), 0u);
}

TEST(Semispaces, ToSpacePairing) {
    Env env;
    HeapId leaf = env.chain(2);
    EXPECT_THROW(env.hier.to_space_of(leaf), ContractViolation);
    env.hier.begin_collection(leaf);
    HeapId t = env.hier.to_space_of(leaf);
    EXPECT_TRUE(env.hier.is_to_space(t));
    EXPECT_FALSE(env.hier.is_to_space(leaf));
    EXPECT_EQ(env.hier.depth(t), env.hier.depth(leaf));
    EXPECT_EQ(env.hier.to_space_of(leaf), t);
    EXPECT_EQ(env.hier.from_space_of(t), leaf);
    // A to-space stands in for its from-space in ancestry queries.
    EXPECT_TRUE(env.hier.ancestor_or_self(env.root(), t));
    EXPECT_TRUE(env.hier.ancestor_or_self(t, leaf));
    env.hier.switch_semispaces(leaf);
    EXPECT_FALSE(env.hier.is_live(t));
    EXPECT_FALSE(env.hier.collecting(leaf));
}

TEST(Semispaces, SwitchAdoptsCopiesAndRetiresOldChunks) {
    Env env;
    HeapId leaf = env.chain(1);
    auto layout = ObjectLayout::of({fields::scalar_imm});
    ObjRef old = env.hier.fresh_obj(leaf, layout, {Value::word(5)});
    env.hier.begin_collection(leaf);
    HeapId t = env.hier.to_space_of(leaf);
    ObjRef copy = env.hier.fresh_obj(t, layout, {Value::word(5)});
    EXPECT_EQ(env.store.heap_of(copy), t);
    env.hier.switch_semispaces(leaf);
    EXPECT_EQ(env.store.heap_of(copy), leaf);
    EXPECT_FALSE(env.store.is_valid(old));
    EXPECT_EQ(env.hier.heap(leaf).occupancy(), ObjectStore::record_bytes(layout));
    EXPECT_EQ(env.hier.heap(leaf).live_after_gc, ObjectStore::record_bytes(layout));
}

TEST(Superheap, PushAndPopAreBalanced) {
    Env env;
    Superheap sh(env.hier, env.root());
    EXPECT_EQ(sh.top_depth(), 0);
    HeapId a = sh.push_child();
    HeapId b = sh.push_child();
    EXPECT_EQ(sh.top(), b);
    EXPECT_EQ(sh.top_depth(), 2);
    EXPECT_EQ(env.hier.parent(b), a);
    ObjRef r = env.hier.fresh_obj(b, ObjectLayout::of({}), {});
    sh.pop_and_join();
    EXPECT_EQ(sh.top(), a);
    EXPECT_EQ(env.store.heap_of(r), a);
    sh.pop_and_join();
    EXPECT_EQ(sh.top_depth(), 0);
    EXPECT_EQ(env.store.heap_of(r), env.root());
    EXPECT_THROW(sh.pop_and_join(), ContractViolation);
}
