#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

// Contract checks that are cheap enough to keep in every build.
#define HH_CHECK(cond, msg)                                                   \
    do {                                                                      \
        if (!(cond)) [[unlikely]]                                             \
            ::hh::detail::contract_failure(msg, __FILE__, __LINE__);          \
    } while (0)

#ifndef HH_DEBUG_CHECKS
#ifdef NDEBUG
#define HH_DEBUG_CHECKS 0
#else
#define HH_DEBUG_CHECKS 1
#endif
#endif

// Checks that cost a ledger lookup or a walk; compiled out unless
// HH_DEBUG_CHECKS is set.
#if HH_DEBUG_CHECKS
#define HH_DCHECK(cond, msg) HH_CHECK(cond, msg)
#else
#define HH_DCHECK(cond, msg) ((void)0)
#endif

namespace hh {

using Word = std::uint64_t;
using ChunkId = std::uint32_t;
using HeapId = std::uint32_t;
using TaskId = std::uint64_t;
using WorkerId = std::uint32_t;

inline constexpr HeapId kNoHeap = std::numeric_limits<HeapId>::max();
inline constexpr HeapId kRetiredHeap = kNoHeap - 1;

/// A precondition of a library operation was violated by the caller.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A heap or chunk identifier does not name a live structure.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A pointer write would have created a down- or cross-pointer that promotion
/// cannot repair (the target is not on the writer's ancestor chain).
class EntanglementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void contract_failure(const char* msg, const char* file, int line) {
    throw ContractViolation(std::string(msg) + " (" + file + ":" + std::to_string(line) + ")");
}

} // namespace detail
} // namespace hh
