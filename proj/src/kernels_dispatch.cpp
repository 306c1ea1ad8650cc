#include "flowpat/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace flowpat::kernels {

// Defined in kernels_avx2.cpp; nullptr when that TU was built without AVX2.
const KernelTable* detail_avx2_table_if_compiled();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

const KernelTable* select_default() {
    const char* env = std::getenv("FLOWPAT_KERNELS");
    if (env != nullptr) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_table();
        if (std::strcmp(env, "avx2") == 0 && avx2_table() != nullptr) {
            return avx2_table();
        }
        // Unknown or unsupported request falls through to auto-selection.
    }
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{select_default()};
    return slot;
}

} // namespace

const KernelTable* avx2_table() {
    static const KernelTable* table =
        cpu_has_avx2() ? detail_avx2_table_if_compiled() : nullptr;
    return table;
}

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> tables{&scalar_table()};
    if (const KernelTable* t = avx2_table()) tables.push_back(t);
    return tables;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_relaxed); }

void set_active(const KernelTable& table) {
    active_slot().store(&table, std::memory_order_relaxed);
}

} // namespace flowpat::kernels
