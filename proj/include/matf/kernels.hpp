#pragma once

#include <cstddef>
#include <string>

// Low-level dense kernels used by the tensor/autodiff layer. Scalar reference
// implementations always exist; an AVX2+FMA variant is selected at runtime
// when the CPU supports it. Override with MATF_KERNELS=scalar|avx2.

namespace matf::kernels {

struct Kernels {
    // sum_i x[i]*y[i]
    double (*dot)(const double* x, const double* y, std::size_t n);
    // y[i] += a*x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] += x[i]*y[i]
    void (*madd)(const double* x, const double* y, double* out, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    // out[i] = x[i] + y[i]
    void (*add)(const double* x, const double* y, double* out, std::size_t n);
    // out[i] = max(out[i], x[i])
    void (*emax)(const double* x, double* out, std::size_t n);

    const char* name;
};

namespace detail {
extern const Kernels scalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Kernels avx2;
#endif
}  // namespace detail

// Selected once at first use; thread-safe (static init).
const Kernels& active();

// Force a specific backend by name ("scalar", "avx2"); throws on unknown or
// unsupported. Intended for tests.
const Kernels& by_name(const std::string& name);

}  // namespace matf::kernels
