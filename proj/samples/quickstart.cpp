// Parallel tasks sharing mutable state through the hierarchical heap.
//
// The root task allocates a counter and a list head. Leaf tasks bump the
// counter and push freshly allocated cells onto the shared list, which
// promotes each cell out of its leaf heap.

#include <iostream>

#include "hh/audit.hpp"
#include "hh/runtime.hpp"

namespace {

const hh::ObjectLayout& cell_layout() {
    static const hh::ObjectLayout layout = hh::ObjectLayout::of({hh::fields::scalar_imm, hh::fields::ref_mut});
    return layout;
}

void bump(hh::ObjRef counter) {
    hh::Memory& m = hh::memory();
    for (;;) {
        hh::Word old = m.read_mutable(counter, 0).as_word();
        if (m.compare_and_swap(counter, 0, old, old + 1))
            return;
    }
}

void push(hh::ObjRef head, hh::Word value) {
    hh::Memory& m = hh::memory();
    hh::Local cell(m.alloc(cell_layout(), {hh::Value::word(value), hh::Value::null()}));
    // Only one task per list at a time in this example, so no CAS on the head.
    m.write_ptr(cell, 1, m.read_mutable(head, 0).as_ref());
    m.write_ptr(head, 0, cell);
}

hh::Word sum(hh::ObjRef head) {
    hh::Memory& m = hh::memory();
    hh::Word total = 0;
    for (hh::ObjRef c = m.read_mutable(head, 0).as_ref(); !c.is_null(); c = m.read_mutable(c, 1).as_ref())
        total += m.read_immutable(c, 0).as_word();
    return total;
}

hh::Word work(hh::ObjRef counter, hh::ObjRef head, hh::Word lo, hh::Word hi) {
    if (hi - lo == 1) {
        bump(counter);
        return lo;
    }
    hh::Word mid = lo + (hi - lo) / 2;
    auto [a, b] = hh::forkjoin([&] { return work(counter, head, lo, mid); },
                               [&] { return work(counter, head, mid, hi); });
    return a + b;
}

} // namespace

int main() {
    hh::RuntimeConfig config;
    config.workers = 4;
    hh::Runtime rt(config);

    rt.run([&] {
        hh::Memory& m = hh::memory();
        hh::Local counter(m.alloc_array(hh::fields::scalar_mut, 1, hh::Value::word(0)));
        hh::Local head(m.alloc_array(hh::fields::ref_mut, 1, hh::Value::null()));

        hh::Word total = work(counter, head, 0, 64);

        // Each side of this fork pushes onto its own list, so the writes
        // from the child heaps are promoting writes into the root heap.
        hh::Local left(m.alloc_array(hh::fields::ref_mut, 1, hh::Value::null()));
        hh::forkjoin([&] { for (hh::Word i = 1; i <= 10; ++i) push(head, i); },
                     [&] { for (hh::Word i = 11; i <= 20; ++i) push(left, i); });

        std::cout << "sum of indices   " << total << "\n";
        std::cout << "counter          " << m.read_mutable(counter, 0).as_word() << "\n";
        std::cout << "list sums        " << sum(head) << " + " << sum(left) << "\n";
    });

    const auto totals = rt.instrumentation().totals();
    std::cout << "promotions       " << totals.promotions << "\n";
    std::cout << "steals           " << totals.steals << "\n";
    hh::AuditReport audit = hh::audit_all(rt.hierarchy());
    std::cout << "audit            " << (audit.passed() ? "passed" : "FAILED") << "\n";
    return audit.passed() ? 0 : 1;
}
