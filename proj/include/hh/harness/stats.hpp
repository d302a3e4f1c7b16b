#pragma once

#include <map>
#include <ostream>
#include <string>

#include <json.hpp>

#include "hh/instrumentation.hpp"

namespace hh {

inline constexpr int kStatsSchemaVersion = 1;

struct StatsReport {
    std::string bench;
    std::uint64_t size = 0;
    std::uint64_t grain = 0;
    unsigned workers = 1;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::string audit_mode = "off";
    std::uint64_t gc_threshold = 0;

    StatTotals totals;
    std::uint64_t max_occupancy = 0;
    double wall_seconds = 0;
    double collection_time_fraction = 0;
    std::uint64_t lock_order_violations = 0;
    std::uint64_t audits_run = 0;
    std::uint64_t audit_failures = 0;
    bool verified = false;
    std::string verify_detail;
    std::uint64_t checksum = 0;

    std::uint64_t count(OpKind op, Locality l) const { return totals.count({op, l}); }

    /// Per-operation lock acquisitions, plus allocation and non-memop locks.
    std::map<std::string, std::uint64_t> lock_acquisitions() const {
        std::map<std::string, std::uint64_t> m;
        for (std::size_t k = 0; k < kOpKinds; ++k)
            m[to_string(static_cast<OpKind>(k))] = totals.locks_for(static_cast<OpKind>(k));
        m["Alloc"] = totals.alloc_locks;
        m["Other"] = totals.other_locks;
        return m;
    }

    /// Write class (scalar or reference, any locality) with the most operations.
    OpClassKey dominant_write_class() const {
        OpClassKey best{OpKind::WriteScalar, Locality::Local};
        std::uint64_t most = 0;
        for (std::size_t i = 0; i < kOpClasses; ++i) {
            auto k = OpClassKey::from_index(i);
            bool write = k.op == OpKind::WriteScalar || k.op == OpKind::WriteRefNonPromoting ||
                         k.op == OpKind::WriteRefPromoting;
            if (write && k.possible() && totals.ops[i] > most) {
                most = totals.ops[i];
                best = k;
            }
        }
        return best;
    }

    OpClassKey dominant_mutable_class() const {
        OpClassKey best{OpKind::ReadMutable, Locality::Local};
        std::uint64_t most = 0;
        for (std::size_t i = 0; i < kOpClasses; ++i) {
            auto k = OpClassKey::from_index(i);
            if (k.op != OpKind::ReadImmutable && k.possible() && totals.ops[i] > most) {
                most = totals.ops[i];
                best = k;
            }
        }
        return best;
    }
};

inline void write_text(std::ostream& out, const StatsReport& r) {
    auto kv = [&](const std::string& k, const auto& v) { out << k << " = " << v << "\n"; };
    kv("schema", kStatsSchemaVersion);
    kv("bench", r.bench);
    kv("size", r.size);
    kv("grain", r.grain);
    kv("workers", r.workers);
    kv("seed", r.seed);
    kv("deterministic", r.deterministic ? "true" : "false");
    kv("audit_mode", r.audit_mode);
    kv("gc_threshold", r.gc_threshold);
    kv("verified", r.verified ? "true" : "false");
    kv("verify_detail", r.verify_detail);
    kv("checksum", r.checksum);
    kv("wall_time_s", r.wall_seconds);
    kv("collection_time_fraction", r.collection_time_fraction);
    kv("max_occupancy_bytes", r.max_occupancy);
    kv("total_ops", r.totals.total_ops());
    for (std::size_t i = 0; i < kOpClasses; ++i) {
        auto k = OpClassKey::from_index(i);
        if (k.possible())
            kv(std::string("ops.") + to_string(k.op) + "." + to_string(k.locality), r.totals.ops[i]);
    }
    for (const auto& [op, n] : r.lock_acquisitions())
        kv("locks." + op, n);
    kv("locks.total", r.totals.total_locks());
    kv("allocs", r.totals.allocs);
    kv("alloc_bytes", r.totals.alloc_bytes);
    kv("promotions", r.totals.promotions);
    kv("objects_promoted", r.totals.objects_promoted);
    kv("bytes_promoted", r.totals.bytes_promoted);
    kv("collections", r.totals.collections);
    kv("bytes_collected", r.totals.bytes_collected);
    kv("bytes_copied", r.totals.bytes_copied);
    kv("duplicates_elided", r.totals.duplicates_elided);
    kv("gc_time_s", static_cast<double>(r.totals.gc_nanos) * 1e-9);
    kv("tasks", r.totals.tasks);
    kv("forks", r.totals.forks);
    kv("steals", r.totals.steals);
    kv("lock_order_violations", r.lock_order_violations);
    kv("audits_run", r.audits_run);
    kv("audit_failures", r.audit_failures);
    kv("dominant_write_class", to_string(r.dominant_write_class()));
}

inline nlohmann::json to_json(const StatsReport& r) {
    nlohmann::json ops = nlohmann::json::object();
    for (std::size_t i = 0; i < kOpClasses; ++i) {
        auto k = OpClassKey::from_index(i);
        if (k.possible())
            ops[to_string(k.op)][to_string(k.locality)] = r.totals.ops[i];
    }
    nlohmann::json locks = nlohmann::json::object();
    for (const auto& [op, n] : r.lock_acquisitions())
        locks[op] = n;
    return {
        {"schema", kStatsSchemaVersion},
        {"config",
         {{"bench", r.bench},
          {"size", r.size},
          {"grain", r.grain},
          {"workers", r.workers},
          {"seed", r.seed},
          {"deterministic", r.deterministic},
          {"audit_mode", r.audit_mode},
          {"gc_threshold", r.gc_threshold}}},
        {"verified", r.verified},
        {"verify_detail", r.verify_detail},
        {"checksum", r.checksum},
        {"wall_time_s", r.wall_seconds},
        {"collection_time_fraction", r.collection_time_fraction},
        {"max_occupancy_bytes", r.max_occupancy},
        {"ops", ops},
        {"total_ops", r.totals.total_ops()},
        {"lock_acquisitions", locks},
        {"allocs", r.totals.allocs},
        {"alloc_bytes", r.totals.alloc_bytes},
        {"promotions", r.totals.promotions},
        {"objects_promoted", r.totals.objects_promoted},
        {"bytes_promoted", r.totals.bytes_promoted},
        {"collections", r.totals.collections},
        {"bytes_collected", r.totals.bytes_collected},
        {"bytes_copied", r.totals.bytes_copied},
        {"duplicates_elided", r.totals.duplicates_elided},
        {"gc_time_s", static_cast<double>(r.totals.gc_nanos) * 1e-9},
        {"tasks", r.totals.tasks},
        {"forks", r.totals.forks},
        {"steals", r.totals.steals},
        {"lock_order_violations", r.lock_order_violations},
        {"audits_run", r.audits_run},
        {"audit_failures", r.audit_failures},
        {"dominant_write_class", to_string(r.dominant_write_class())},
    };
}

} // namespace hh
