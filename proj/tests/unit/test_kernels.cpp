#include "doctest.h"

#include "assocmem/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace assocmem::kernels;

namespace {

std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<float> d(0.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

std::vector<double> random_doubles(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Naive loops in long double, independent of both kernel variants.
long double ref_dot(const std::vector<float>& a, const std::vector<float>& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return s;
}

}  // namespace

TEST_CASE("scalar kernels match long double references") {
    std::mt19937_64 rng(7);
    for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 15u, 16u, 17u, 255u, 1536u}) {
        auto a = random_floats(rng, n), b = random_floats(rng, n);
        CHECK(scalar::dot_f32(a.data(), b.data(), n) == doctest::Approx(static_cast<double>(ref_dot(a, b))).epsilon(1e-12));
        CHECK(scalar::sum_squares_f32(a.data(), n) ==
              doctest::Approx(static_cast<double>(ref_dot(a, a))).epsilon(1e-12));
    }
}

#ifdef ASSOCMEM_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!isa_available(Isa::Avx2)) {
        MESSAGE("CPU lacks AVX2/FMA; equivalence not exercised");
        return;
    }
    std::mt19937_64 rng(11);
    for (std::size_t n = 0; n < 300; ++n) {
        auto a = random_floats(rng, n), b = random_floats(rng, n);
        const double s = scalar::dot_f32(a.data(), b.data(), n);
        const double v = avx2::dot_f32(a.data(), b.data(), n);
        CHECK(std::abs(s - v) <= 1e-12 * (1.0 + std::abs(s)) + 1e-12 * n);
        const double ss = scalar::sum_squares_f32(a.data(), n);
        CHECK(std::abs(ss - avx2::sum_squares_f32(a.data(), n)) <= 1e-12 * (1.0 + ss));

        auto x = random_doubles(rng, n), y = random_doubles(rng, n);
        CHECK(std::abs(scalar::l1_distance_f64(x.data(), y.data(), n) - avx2::l1_distance_f64(x.data(), y.data(), n)) <=
              1e-12 * (1.0 + n));
        CHECK(std::abs(scalar::sum_f64(x.data(), n) - avx2::sum_f64(x.data(), n)) <= 1e-12 * (1.0 + n));

        auto y1 = y, y2 = y;
        scalar::axpy_f64(0.37, x.data(), y1.data(), n);
        avx2::axpy_f64(0.37, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-15));
    }
}
#endif

TEST_CASE("dispatch can be pinned to each available variant") {
    const Isa original = active_isa();
    CHECK(isa_available(Isa::Scalar));
    CHECK(set_active_isa(Isa::Scalar));
    CHECK(active_isa() == Isa::Scalar);
    std::vector<float> a{1, 2, 3}, b{4, 5, 6};
    CHECK(dot(a, b) == 32.0);
    if (isa_available(Isa::Avx2)) {
        CHECK(set_active_isa(Isa::Avx2));
        CHECK(dot(a, b) == 32.0);
    } else {
        CHECK_FALSE(set_active_isa(Isa::Avx2));
        CHECK(active_isa() == Isa::Scalar);
    }
    set_active_isa(original);
    CHECK(isa_name(Isa::Scalar) == "scalar");
}

TEST_CASE("span wrappers") {
    std::vector<double> x{1, -2, 3}, y{0.5, 0.5, 0.5};
    CHECK(l1_distance(x, y) == doctest::Approx(0.5 + 2.5 + 2.5));
    CHECK(sum(x) == 2.0);
    axpy(2.0, x, y);
    CHECK(y == std::vector<double>{2.5, -3.5, 6.5});
    std::vector<float> f{3, 4};
    CHECK(sum_squares(f) == 25.0);
}
