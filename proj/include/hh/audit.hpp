#pragma once

#include <algorithm>
#include <ostream>
#include <vector>

#include "hh/heap_hierarchy.hpp"

namespace hh {

struct AuditEdge {
    ObjRef source;
    std::size_t field = 0;
    ObjRef target;
    friend bool operator==(const AuditEdge&, const AuditEdge&) = default;
};

struct AuditReport {
    std::vector<AuditEdge> down_refs;
    std::vector<AuditEdge> cross_refs;
    // Edges into or out of the global heap.
    std::vector<AuditEdge> global_refs;
    std::vector<AuditEdge> dangling_refs;
    std::vector<ObjRef> broken_chains;
    std::uint64_t objects_scanned = 0;
    std::uint64_t refs_checked = 0;
    std::uint64_t chains_checked = 0;

    bool passed() const {
        return down_refs.empty() && cross_refs.empty() && global_refs.empty() && dangling_refs.empty() &&
               broken_chains.empty();
    }

    void merge(const AuditReport& o) {
        down_refs.insert(down_refs.end(), o.down_refs.begin(), o.down_refs.end());
        cross_refs.insert(cross_refs.end(), o.cross_refs.begin(), o.cross_refs.end());
        global_refs.insert(global_refs.end(), o.global_refs.begin(), o.global_refs.end());
        dangling_refs.insert(dangling_refs.end(), o.dangling_refs.begin(), o.dangling_refs.end());
        broken_chains.insert(broken_chains.end(), o.broken_chains.begin(), o.broken_chains.end());
        objects_scanned += o.objects_scanned;
        refs_checked += o.refs_checked;
        chains_checked += o.chains_checked;
    }
};

/// Every stored reference must target the source's heap or an ancestor of
/// it. Requires a quiescent hierarchy.
inline AuditReport audit_disentanglement(const HeapHierarchy& hierarchy) {
    const ObjectStore& store = hierarchy.store();
    const HeapId global = hierarchy.global();
    AuditReport report;
    store.for_each_object([&](ObjRef obj, HeapId owner) {
        ++report.objects_scanned;
        store.layout_of(obj).for_each_ptr_field([&](std::size_t i) {
            ObjRef t = ObjRef::from_bits(store.slot(obj, i).load(std::memory_order_acquire));
            if (t.is_null())
                return;
            ++report.refs_checked;
            AuditEdge e{obj, i, t};
            if (!store.is_valid(t)) {
                report.dangling_refs.push_back(e);
                return;
            }
            HeapId th = store.heap_of(t);
            if ((owner == global) != (th == global)) {
                report.global_refs.push_back(e);
            } else if (!hierarchy.ancestor_or_self(th, owner)) {
                if (hierarchy.ancestor_or_self(owner, th))
                    report.down_refs.push_back(e);
                else
                    report.cross_refs.push_back(e);
            }
        });
    });
    return report;
}

/// Forwarding chains must be finite, never descend and end at an object
/// whose slot is empty. A join can leave two links of a chain in one heap,
/// so equal depths are accepted. Requires a quiescent hierarchy with no
/// collection in progress.
inline AuditReport audit_forwarding_chains(const HeapHierarchy& hierarchy) {
    const ObjectStore& store = hierarchy.store();
    AuditReport report;
    std::vector<ObjRef> seen;
    store.for_each_object([&](ObjRef obj, HeapId owner) {
        ++report.objects_scanned;
        if (!store.has_fwd(obj))
            return;
        ++report.chains_checked;
        int depth = hierarchy.depth(owner);
        seen.assign(1, obj);
        ObjRef cur = obj;
        for (;;) {
            ObjRef next = store.fwd_or_null(cur);
            if (!next)
                break;
            if (!store.is_valid(next) || std::find(seen.begin(), seen.end(), next) != seen.end()) {
                report.broken_chains.push_back(obj);
                break;
            }
            int d = hierarchy.depth(store.heap_of(next));
            if (d > depth) {
                report.broken_chains.push_back(obj);
                break;
            }
            depth = d;
            seen.push_back(next);
            cur = next;
        }
    });
    return report;
}

inline AuditReport audit_all(const HeapHierarchy& hierarchy) {
    AuditReport r = audit_disentanglement(hierarchy);
    r.merge(audit_forwarding_chains(hierarchy));
    return r;
}

inline std::ostream& operator<<(std::ostream& out, const AuditReport& r) {
    auto edges = [&](const char* name, const std::vector<AuditEdge>& v) {
        for (const auto& e : v)
            out << name << " obj:" << e.source.chunk() << ":" << e.source.slot() << "[" << e.field << "] -> obj:"
                << e.target.chunk() << ":" << e.target.slot() << "\n";
    };
    out << (r.passed() ? "audit passed" : "audit FAILED") << " (" << r.objects_scanned << " objects, "
        << r.refs_checked << " refs, " << r.chains_checked << " chains)\n";
    edges("down", r.down_refs);
    edges("cross", r.cross_refs);
    edges("global", r.global_refs);
    edges("dangling", r.dangling_refs);
    for (ObjRef o : r.broken_chains)
        out << "broken chain from obj:" << o.chunk() << ":" << o.slot() << "\n";
    return out;
}

} // namespace hh
