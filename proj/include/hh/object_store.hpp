#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hh/common.hpp"

namespace hh {

enum class FieldKind : std::uint8_t { Scalar, Reference };
enum class Mutability : std::uint8_t { Immutable, Mutable };

struct FieldDescriptor {
    FieldKind kind = FieldKind::Scalar;
    Mutability mutability = Mutability::Immutable;

    constexpr bool is_ref() const { return kind == FieldKind::Reference; }
    constexpr bool is_mutable() const { return mutability == Mutability::Mutable; }
    constexpr std::uint8_t code() const {
        return static_cast<std::uint8_t>(static_cast<unsigned>(kind) | (static_cast<unsigned>(mutability) << 1));
    }
    static constexpr FieldDescriptor from_code(std::uint8_t c) {
        return {static_cast<FieldKind>(c & 1u), static_cast<Mutability>((c >> 1) & 1u)};
    }
    friend constexpr bool operator==(FieldDescriptor, FieldDescriptor) = default;
};

namespace fields {
inline constexpr FieldDescriptor scalar_imm{FieldKind::Scalar, Mutability::Immutable};
inline constexpr FieldDescriptor scalar_mut{FieldKind::Scalar, Mutability::Mutable};
inline constexpr FieldDescriptor ref_imm{FieldKind::Reference, Mutability::Immutable};
inline constexpr FieldDescriptor ref_mut{FieldKind::Reference, Mutability::Mutable};
} // namespace fields

/// Opaque object identity: a chunk id and the word offset of the record
/// inside that chunk. Joining heaps never changes it.
class ObjRef {
public:
    constexpr ObjRef() = default;
    constexpr ObjRef(ChunkId chunk, std::uint32_t slot)
        : bits_((static_cast<Word>(chunk) << 32) | slot) {}

    static constexpr ObjRef null() { return ObjRef(); }
    static constexpr ObjRef from_bits(Word bits) {
        ObjRef r;
        r.bits_ = bits;
        return r;
    }

    constexpr bool is_null() const { return bits_ == kNullBits; }
    constexpr explicit operator bool() const { return !is_null(); }
    constexpr ChunkId chunk() const { return static_cast<ChunkId>(bits_ >> 32); }
    constexpr std::uint32_t slot() const { return static_cast<std::uint32_t>(bits_); }
    constexpr Word bits() const { return bits_; }

    friend constexpr bool operator==(ObjRef, ObjRef) = default;
    friend constexpr auto operator<=>(ObjRef a, ObjRef b) { return a.bits_ <=> b.bits_; }

    static constexpr Word kNullBits = ~Word{0};

private:
    Word bits_ = kNullBits;
};

/// Content of one field: either a plain 64-bit word or a reference (possibly
/// null). The tag keeps scalar fields from ever receiving a reference.
class Value {
public:
    constexpr Value() = default;

    static constexpr Value word(Word w) { return Value(w, false); }
    static constexpr Value ref(ObjRef r) { return Value(r.bits(), true); }
    static constexpr Value null() { return Value(ObjRef::kNullBits, true); }

    constexpr bool is_ref() const { return ref_; }
    constexpr Word bits() const { return bits_; }
    Word as_word() const {
        HH_CHECK(!ref_, "value holds a reference, not a word");
        return bits_;
    }
    ObjRef as_ref() const {
        HH_CHECK(ref_, "value holds a word, not a reference");
        return ObjRef::from_bits(bits_);
    }

    friend constexpr bool operator==(Value, Value) = default;

private:
    constexpr Value(Word bits, bool ref)
        : bits_(bits), ref_(ref) {}

    Word bits_ = 0;
    bool ref_ = false;
};

namespace detail {

struct LayoutData {
    std::vector<FieldDescriptor> fields;
    std::vector<std::uint32_t> ptr_index;
    std::vector<std::uint32_t> nonptr_index;
};

// Layouts with explicit descriptor lists live for the whole process; the
// record header stores a pointer to the interned copy.
inline const LayoutData* intern_layout(std::span<const FieldDescriptor> descs) {
    static std::mutex mutex;
    static std::map<std::vector<std::uint8_t>, std::unique_ptr<LayoutData>> table;

    std::vector<std::uint8_t> key;
    key.reserve(descs.size());
    for (auto d : descs)
        key.push_back(d.code());

    std::lock_guard lock(mutex);
    auto& slot = table[key];
    if (!slot) {
        slot = std::make_unique<LayoutData>();
        slot->fields.assign(descs.begin(), descs.end());
        for (std::uint32_t i = 0; i < descs.size(); ++i)
            (descs[i].is_ref() ? slot->ptr_index : slot->nonptr_index).push_back(i);
    }
    return slot.get();
}

} // namespace detail

/// Ordered field descriptors of an object. Two representations share one
/// interface: an interned explicit list (records, tuples) and a homogeneous
/// array of N identical descriptors that costs O(1) space.
class ObjectLayout {
public:
    ObjectLayout()
        : ObjectLayout(std::span<const FieldDescriptor>{}) {}

    static ObjectLayout of(std::initializer_list<FieldDescriptor> descs) {
        return ObjectLayout(std::span<const FieldDescriptor>(descs.begin(), descs.size()));
    }
    static ObjectLayout of(std::span<const FieldDescriptor> descs) { return ObjectLayout(descs); }

    static ObjectLayout array(FieldDescriptor desc, std::size_t count) {
        HH_CHECK(count < (Word{1} << 60), "array too large");
        ObjectLayout l;
        l.explicit_ = nullptr;
        l.repeated_ = desc;
        l.count_ = count;
        return l;
    }

    std::size_t arity() const { return explicit_ ? explicit_->fields.size() : count_; }
    bool is_array() const { return explicit_ == nullptr; }

    FieldDescriptor descriptor(std::size_t i) const {
        HH_CHECK(i < arity(), "field index out of range");
        return explicit_ ? explicit_->fields[i] : repeated_;
    }

    bool has_ptr_fields() const {
        return explicit_ ? !explicit_->ptr_index.empty() : (count_ > 0 && repeated_.is_ref());
    }

    template <typename Fn>
    void for_each_ptr_field(Fn&& fn) const {
        if (explicit_) {
            for (auto i : explicit_->ptr_index)
                fn(std::size_t{i});
        } else if (repeated_.is_ref()) {
            for (std::size_t i = 0; i < count_; ++i)
                fn(i);
        }
    }

    template <typename Fn>
    void for_each_nonptr_field(Fn&& fn) const {
        if (explicit_) {
            for (auto i : explicit_->nonptr_index)
                fn(std::size_t{i});
        } else if (!repeated_.is_ref()) {
            for (std::size_t i = 0; i < count_; ++i)
                fn(i);
        }
    }

    std::vector<std::size_t> ptr_fields() const {
        std::vector<std::size_t> out;
        for_each_ptr_field([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    std::vector<std::size_t> nonptr_fields() const {
        std::vector<std::size_t> out;
        for_each_nonptr_field([&](std::size_t i) { out.push_back(i); });
        return out;
    }

    // Header word: the interned pointer, or (bit 63 | descriptor | count).
    Word header() const {
        if (explicit_)
            return reinterpret_cast<std::uintptr_t>(explicit_);
        return kArrayBit | (Word{repeated_.code()} << 60) | count_;
    }

    static ObjectLayout from_header(Word h) {
        ObjectLayout l;
        if (h & kArrayBit) {
            l.explicit_ = nullptr;
            l.repeated_ = FieldDescriptor::from_code(static_cast<std::uint8_t>((h >> 60) & 3u));
            l.count_ = h & ((Word{1} << 60) - 1);
        } else {
            l.explicit_ = reinterpret_cast<const detail::LayoutData*>(static_cast<std::uintptr_t>(h));
        }
        return l;
    }

    friend bool operator==(const ObjectLayout& a, const ObjectLayout& b) { return a.header() == b.header(); }

private:
    explicit ObjectLayout(std::span<const FieldDescriptor> descs)
        : explicit_(detail::intern_layout(descs)) {}

    static constexpr Word kArrayBit = Word{1} << 63;

    const detail::LayoutData* explicit_ = nullptr;
    FieldDescriptor repeated_{};
    std::uint64_t count_ = 0;
};

struct StoreConfig {
    std::size_t min_chunk_words = 512;      // 4 KiB
    std::size_t max_chunk_words = 1u << 17; // 1 MiB
};

class Chunk {
public:
    Chunk(ChunkId id, HeapId owner, std::size_t capacity, std::unique_ptr<std::atomic<Word>[]> words)
        : id_(id), owner_(owner), capacity_(capacity), words_(std::move(words)) {}

    ChunkId id() const { return id_; }
    HeapId owner() const { return owner_.load(std::memory_order_acquire); }
    std::size_t capacity() const { return capacity_; }
    std::size_t used() const { return used_.load(std::memory_order_acquire); }
    bool retired() const { return retired_.load(std::memory_order_acquire); }

private:
    friend class ObjectStore;

    ChunkId id_;
    std::atomic<HeapId> owner_;
    std::size_t capacity_;
    std::atomic<std::size_t> used_{0};
    std::unique_ptr<std::atomic<Word>[]> words_;
    std::atomic<bool> retired_{false};
};

/// Allocation state of one heap. Only the heap's current allocator touches it
/// (the owning task, or a promotion holding the heap's WRITE lock).
struct HeapSpace {
    std::vector<ChunkId> chunks;
    Chunk* current = nullptr;
    std::size_t next_chunk_words = 0;
    std::atomic<std::uint64_t> occupancy{0};

    HeapSpace() = default;
    HeapSpace(const HeapSpace&) = delete;
    HeapSpace& operator=(const HeapSpace&) = delete;

    void take_from(HeapSpace& other) {
        chunks = std::move(other.chunks);
        other.chunks.clear();
        current = other.current;
        other.current = nullptr;
        next_chunk_words = other.next_chunk_words;
        occupancy.store(other.occupancy.exchange(0));
    }
};

/// Chunks and object records. Records are laid out as
/// [header][forwarding slot][field 0]...[field n-1], one word each.
class ObjectStore {
public:
    explicit ObjectStore(StoreConfig config = {})
        : config_(config), segments_(new std::atomic<Segment*>[kMaxSegments]) {
        HH_CHECK(config_.min_chunk_words >= 4 && config_.min_chunk_words <= config_.max_chunk_words,
                 "invalid chunk sizing");
        for (std::size_t i = 0; i < kMaxSegments; ++i)
            segments_[i].store(nullptr, std::memory_order_relaxed);
    }

    ~ObjectStore() {
        for (std::size_t s = 0; s < kMaxSegments; ++s) {
            Segment* seg = segments_[s].load(std::memory_order_relaxed);
            if (!seg)
                continue;
            for (auto& entry : *seg)
                delete entry.load(std::memory_order_relaxed);
            delete seg;
        }
    }

    ObjectStore(const ObjectStore&) = delete;
    ObjectStore& operator=(const ObjectStore&) = delete;

    const StoreConfig& config() const { return config_; }

    static constexpr std::size_t kHeaderWords = 2;
    static std::size_t record_words(const ObjectLayout& layout) { return kHeaderWords + layout.arity(); }
    static std::size_t record_bytes(const ObjectLayout& layout) { return record_words(layout) * sizeof(Word); }

    /// Allocates with explicit initial values; kinds must match the layout.
    ObjRef fresh_obj(HeapSpace& space, HeapId owner, const ObjectLayout& layout, std::span<const Value> init) {
        HH_CHECK(init.size() == layout.arity(), "initializer length does not match layout arity");
        for (std::size_t i = 0; i < init.size(); ++i) {
            HH_CHECK(init[i].is_ref() == layout.descriptor(i).is_ref(), "initializer kind does not match field kind");
            if (init[i].is_ref() && !init[i].as_ref().is_null())
                HH_CHECK(is_valid(init[i].as_ref()), "initializer references a dead object");
        }
        auto [words, ref] = allocate(space, owner, layout);
        for (std::size_t i = 0; i < init.size(); ++i)
            words[kHeaderWords + i].store(init[i].bits(), std::memory_order_relaxed);
        publish(ref, layout);
        return ref;
    }

    /// Allocates a scalar-only object from raw words.
    ObjRef fresh_words(HeapSpace& space, HeapId owner, const ObjectLayout& layout, std::span<const Word> init) {
        HH_CHECK(init.size() == layout.arity(), "initializer length does not match layout arity");
        HH_CHECK(!layout.has_ptr_fields(), "fresh_words requires a scalar-only layout");
        auto [words, ref] = allocate(space, owner, layout);
        for (std::size_t i = 0; i < init.size(); ++i)
            words[kHeaderWords + i].store(init[i], std::memory_order_relaxed);
        publish(ref, layout);
        return ref;
    }

    /// Allocates with scalars zeroed and references null.
    ObjRef fresh_blank(HeapSpace& space, HeapId owner, const ObjectLayout& layout) {
        auto [words, ref] = allocate(space, owner, layout);
        for (std::size_t i = 0; i < layout.arity(); ++i)
            words[kHeaderWords + i].store(0, std::memory_order_relaxed);
        layout.for_each_ptr_field(
            [&](std::size_t i) { words[kHeaderWords + i].store(ObjRef::kNullBits, std::memory_order_relaxed); });
        publish(ref, layout);
        return ref;
    }

    ObjectLayout layout_of(ObjRef obj) const {
        return ObjectLayout::from_header(record(obj)[0].load(std::memory_order_acquire));
    }
    std::size_t arity(ObjRef obj) const { return layout_of(obj).arity(); }

    std::vector<std::size_t> ptr_fields(ObjRef obj) const { return layout_of(obj).ptr_fields(); }
    std::vector<std::size_t> nonptr_fields(ObjRef obj) const { return layout_of(obj).nonptr_fields(); }

    /// Raw field read; bypasses forwarding and mutability.
    Value get_field(ObjRef obj, std::size_t i) const {
        auto* rec = record(obj);
        auto desc = ObjectLayout::from_header(rec[0].load(std::memory_order_acquire)).descriptor(i);
        Word bits = rec[kHeaderWords + i].load(std::memory_order_acquire);
        return desc.is_ref() ? Value::ref(ObjRef::from_bits(bits)) : Value::word(bits);
    }

    /// Raw field write; bypasses forwarding, mutability and disentanglement.
    void set_field(ObjRef obj, std::size_t i, Value v) {
        auto* rec = record(obj);
        auto desc = ObjectLayout::from_header(rec[0].load(std::memory_order_acquire)).descriptor(i);
        HH_CHECK(desc.is_ref() == v.is_ref(), "value kind does not match field kind");
        rec[kHeaderWords + i].store(v.bits(), std::memory_order_release);
    }

    // Word-level access used by the memory operations. The caller has already
    // validated kind and index.
    std::atomic<Word>& slot(ObjRef obj, std::size_t i) const { return record(obj)[kHeaderWords + i]; }

    bool has_fwd(ObjRef obj) const {
        return record(obj)[1].load(std::memory_order_seq_cst) != ObjRef::kNullBits;
    }
    ObjRef fwd_or_null(ObjRef obj) const {
        return ObjRef::from_bits(record(obj)[1].load(std::memory_order_seq_cst));
    }
    ObjRef read_fwd(ObjRef obj) const {
        ObjRef target = fwd_or_null(obj);
        HH_CHECK(!target.is_null(), "readFwd on an empty forwarding slot");
        return target;
    }
    /// Publishes a forwarding target. Write-once: a second set is rejected.
    void set_fwd(ObjRef obj, ObjRef target) {
        HH_CHECK(!target.is_null(), "forwarding target must not be null");
        Word expected = ObjRef::kNullBits;
        bool ok = record(obj)[1].compare_exchange_strong(expected, target.bits(), std::memory_order_seq_cst);
        HH_CHECK(ok, "forwarding slot already set");
    }

    HeapId heap_of(ObjRef obj) const { return live_chunk(obj).owner(); }

    bool is_valid(ObjRef obj) const {
        if (obj.is_null())
            return false;
        const Chunk* c = find_chunk(obj.chunk());
        return c && !c->retired() && obj.slot() + kHeaderWords <= c->used();
    }

    Chunk* find_chunk(ChunkId id) const {
        if ((id >> kSegmentBits) >= kMaxSegments)
            return nullptr;
        Segment* seg = segments_[id >> kSegmentBits].load(std::memory_order_acquire);
        if (!seg)
            return nullptr;
        return (*seg)[id & (kSegmentSize - 1)].load(std::memory_order_acquire);
    }

    Chunk& chunk(ChunkId id) const {
        Chunk* c = find_chunk(id);
        if (!c)
            throw StructuralError("unknown chunk " + std::to_string(id));
        return *c;
    }

    void set_chunk_owner(ChunkId id, HeapId owner) { chunk(id).owner_.store(owner, std::memory_order_release); }

    /// Tombstones a chunk: its id is never reused, so stale references are
    /// always detected, and its buffer goes back to the pool.
    void retire_chunk(ChunkId id) {
        Chunk& c = chunk(id);
        HH_CHECK(!c.retired(), "chunk retired twice");
        c.retired_.store(true, std::memory_order_release);
        c.owner_.store(kRetiredHeap, std::memory_order_release);
        bytes_in_use_.fetch_sub(c.capacity_ * sizeof(Word), std::memory_order_relaxed);
        live_chunks_.fetch_sub(1, std::memory_order_relaxed);
        recycle(c.capacity_, std::move(c.words_));
    }

    /// Visits every record in every live chunk as fn(ObjRef, owner HeapId).
    /// Only meaningful at a quiescent point.
    template <typename Fn>
    void for_each_object(Fn&& fn) const {
        ChunkId end = next_chunk_.load(std::memory_order_acquire);
        for (ChunkId id = 0; id < end; ++id) {
            const Chunk* c = find_chunk(id);
            if (!c || c->retired())
                continue;
            for_each_in_chunk(*c, fn);
        }
    }

    template <typename Fn>
    void for_each_in_chunk(const Chunk& c, Fn&& fn) const {
        HeapId owner = c.owner();
        std::size_t used = c.used();
        std::size_t off = 0;
        while (off < used) {
            auto layout = ObjectLayout::from_header(c.words_[off].load(std::memory_order_acquire));
            fn(ObjRef(c.id_, static_cast<std::uint32_t>(off)), owner);
            off += record_words(layout);
        }
    }

    std::uint64_t bytes_in_use() const { return bytes_in_use_.load(std::memory_order_relaxed); }
    std::uint64_t max_bytes_in_use() const { return max_bytes_in_use_.load(std::memory_order_relaxed); }
    std::size_t live_chunks() const { return live_chunks_.load(std::memory_order_relaxed); }
    ChunkId chunk_id_limit() const { return next_chunk_.load(std::memory_order_acquire); }

private:
    static constexpr std::size_t kSegmentBits = 12;
    static constexpr std::size_t kSegmentSize = std::size_t{1} << kSegmentBits;
    static constexpr std::size_t kMaxSegments = std::size_t{1} << 16;
    using Segment = std::array<std::atomic<Chunk*>, kSegmentSize>;

    const Chunk& live_chunk(ObjRef obj) const {
        HH_CHECK(!obj.is_null(), "null reference dereferenced");
        const Chunk* c = find_chunk(obj.chunk());
        HH_CHECK(c != nullptr, "reference to an unknown chunk");
        HH_CHECK(!c->retired(), "dangling reference into a retired chunk");
        return *c;
    }

    std::atomic<Word>* record(ObjRef obj) const {
        const Chunk& c = live_chunk(obj);
        HH_CHECK(obj.slot() + kHeaderWords <= c.capacity_, "reference slot outside its chunk");
        return c.words_.get() + obj.slot();
    }

    struct Allocation {
        std::atomic<Word>* words;
        ObjRef ref;
    };

    Allocation allocate(HeapSpace& space, HeapId owner, const ObjectLayout& layout) {
        std::size_t need = record_words(layout);
        Chunk* c = space.current;
        if (!c || c->capacity_ - c->used_.load(std::memory_order_relaxed) < need)
            c = chunk_for(space, owner, need);
        std::size_t off = c->used_.load(std::memory_order_relaxed);
        HH_CHECK(off <= 0xFFFFFFFFu, "chunk offset overflow");
        auto* words = c->words_.get() + off;
        words[0].store(layout.header(), std::memory_order_relaxed);
        words[1].store(ObjRef::kNullBits, std::memory_order_relaxed);
        space.occupancy.fetch_add(need * sizeof(Word), std::memory_order_relaxed);
        return {words, ObjRef(c->id_, static_cast<std::uint32_t>(off))};
    }

    void publish(ObjRef ref, const ObjectLayout& layout) {
        Chunk& c = *find_chunk(ref.chunk());
        c.used_.store(ref.slot() + record_words(layout), std::memory_order_release);
    }

    Chunk* chunk_for(HeapSpace& space, HeapId owner, std::size_t need) {
        if (need > config_.max_chunk_words) {
            // Dedicated exact-size chunk; the current bump chunk stays current.
            return new_chunk(space, owner, need);
        }
        if (space.next_chunk_words == 0)
            space.next_chunk_words = config_.min_chunk_words;
        std::size_t size = std::max(space.next_chunk_words, std::bit_ceil(need));
        space.next_chunk_words = std::min(size * 2, config_.max_chunk_words);
        Chunk* c = new_chunk(space, owner, size);
        space.current = c;
        return c;
    }

    Chunk* new_chunk(HeapSpace& space, HeapId owner, std::size_t words) {
        ChunkId id = next_chunk_.fetch_add(1, std::memory_order_relaxed);
        HH_CHECK((id >> kSegmentBits) < kMaxSegments, "chunk table exhausted");
        auto* chunk = new Chunk(id, owner, words, obtain(words));
        Segment* seg = segments_[id >> kSegmentBits].load(std::memory_order_acquire);
        if (!seg) {
            std::lock_guard lock(segment_mutex_);
            seg = segments_[id >> kSegmentBits].load(std::memory_order_acquire);
            if (!seg) {
                seg = new Segment();
                for (auto& e : *seg)
                    e.store(nullptr, std::memory_order_relaxed);
                segments_[id >> kSegmentBits].store(seg, std::memory_order_release);
            }
        }
        (*seg)[id & (kSegmentSize - 1)].store(chunk, std::memory_order_release);
        space.chunks.push_back(id);
        live_chunks_.fetch_add(1, std::memory_order_relaxed);
        auto now = bytes_in_use_.fetch_add(words * sizeof(Word), std::memory_order_relaxed) + words * sizeof(Word);
        auto prev = max_bytes_in_use_.load(std::memory_order_relaxed);
        while (now > prev && !max_bytes_in_use_.compare_exchange_weak(prev, now, std::memory_order_relaxed)) {
        }
        return chunk;
    }

    std::unique_ptr<std::atomic<Word>[]> obtain(std::size_t words) {
        {
            std::lock_guard lock(pool_mutex_);
            auto it = pool_.find(words);
            if (it != pool_.end() && !it->second.empty()) {
                auto buf = std::move(it->second.back());
                it->second.pop_back();
                return buf;
            }
        }
        return std::unique_ptr<std::atomic<Word>[]>(new std::atomic<Word>[words]);
    }

    void recycle(std::size_t words, std::unique_ptr<std::atomic<Word>[]> buf) {
        if (words > config_.max_chunk_words)
            return;
        std::lock_guard lock(pool_mutex_);
        auto& list = pool_[words];
        if (list.size() < kPoolDepth)
            list.push_back(std::move(buf));
    }

    static constexpr std::size_t kPoolDepth = 64;

    StoreConfig config_;
    std::unique_ptr<std::atomic<Segment*>[]> segments_;
    std::mutex segment_mutex_;
    std::atomic<ChunkId> next_chunk_{0};
    std::atomic<std::uint64_t> bytes_in_use_{0};
    std::atomic<std::uint64_t> max_bytes_in_use_{0};
    std::atomic<std::size_t> live_chunks_{0};
    std::mutex pool_mutex_;
    std::map<std::size_t, std::vector<std::unique_ptr<std::atomic<Word>[]>>> pool_;
};

} // namespace hh

template <>
struct std::hash<hh::ObjRef> {
    std::size_t operator()(hh::ObjRef r) const noexcept { return std::hash<hh::Word>{}(r.bits()); }
};
