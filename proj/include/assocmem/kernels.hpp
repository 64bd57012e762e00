#pragma once
// Dense arithmetic kernels used by the vector index and the PPR solver.
//
// Every kernel has a portable scalar reference in `scalar::`. On x86-64 an
// AVX2+FMA variant lives in `avx2::`; the active variant is picked once at
// startup from CPUID and can be pinned with ASSOCMEM_SIMD=scalar|avx2.
// Float inputs are widened and accumulated in double on every path.

#include <cstddef>
#include <span>
#include <string_view>

namespace assocmem::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

namespace scalar {
double dot_f32(const float* a, const float* b, std::size_t n);
double sum_squares_f32(const float* a, std::size_t n);
double l1_distance_f64(const double* a, const double* b, std::size_t n);
double sum_f64(const double* a, std::size_t n);
// y[i] += alpha * x[i]
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

#ifdef ASSOCMEM_HAVE_AVX2_KERNELS
namespace avx2 {
double dot_f32(const float* a, const float* b, std::size_t n);
double sum_squares_f32(const float* a, std::size_t n);
double l1_distance_f64(const double* a, const double* b, std::size_t n);
double sum_f64(const double* a, std::size_t n);
void axpy_f64(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

// True when `isa` is compiled in and the running CPU supports it.
bool isa_available(Isa isa);
Isa active_isa();
// Pins the dispatch table. Returns false (and changes nothing) if unavailable.
bool set_active_isa(Isa isa);

double dot(std::span<const float> a, std::span<const float> b);
double sum_squares(std::span<const float> a);
double l1_distance(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace assocmem::kernels
