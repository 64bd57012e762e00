#include "assocmem/kernels.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace assocmem::kernels {

namespace {

struct Table {
    Isa isa;
    double (*dot_f32)(const float*, const float*, std::size_t);
    double (*sum_squares_f32)(const float*, std::size_t);
    double (*l1_distance_f64)(const double*, const double*, std::size_t);
    double (*sum_f64)(const double*, std::size_t);
    void (*axpy_f64)(double, const double*, double*, std::size_t);
};

constexpr Table kScalar{Isa::Scalar,        scalar::dot_f32, scalar::sum_squares_f32,
                        scalar::l1_distance_f64, scalar::sum_f64, scalar::axpy_f64};

#ifdef ASSOCMEM_HAVE_AVX2_KERNELS
constexpr Table kAvx2{Isa::Avx2,          avx2::dot_f32, avx2::sum_squares_f32,
                      avx2::l1_distance_f64, avx2::sum_f64, avx2::axpy_f64};
#endif

bool cpu_has_avx2() {
#if defined(ASSOCMEM_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* table_for(Isa isa) {
#ifdef ASSOCMEM_HAVE_AVX2_KERNELS
    if (isa == Isa::Avx2) return &kAvx2;
#endif
    (void)isa;
    return &kScalar;
}

const Table* initial_table() {
    if (const char* env = std::getenv("ASSOCMEM_SIMD")) {
        const std::string want(env);
        if (want == "scalar") return &kScalar;
        if (want == "avx2" && cpu_has_avx2()) return table_for(Isa::Avx2);
    }
    return cpu_has_avx2() ? table_for(Isa::Avx2) : &kScalar;
}

std::atomic<const Table*>& active() {
    static std::atomic<const Table*> table{initial_table()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    if (isa == Isa::Scalar) return true;
    return cpu_has_avx2();
}

Isa active_isa() { return active().load(std::memory_order_acquire)->isa; }

bool set_active_isa(Isa isa) {
    if (!isa_available(isa)) return false;
    active().store(table_for(isa), std::memory_order_release);
    return true;
}

double dot(std::span<const float> a, std::span<const float> b) {
    assert(a.size() == b.size());
    return active().load(std::memory_order_acquire)->dot_f32(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const float> a) {
    return active().load(std::memory_order_acquire)->sum_squares_f32(a.data(), a.size());
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().load(std::memory_order_acquire)->l1_distance_f64(a.data(), b.data(), a.size());
}

double sum(std::span<const double> a) {
    return active().load(std::memory_order_acquire)->sum_f64(a.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().load(std::memory_order_acquire)->axpy_f64(alpha, x.data(), y.data(), x.size());
}

}  // namespace assocmem::kernels
