#include "matf/kernels.hpp"

#include <algorithm>
#include <cstdlib>

#include "matf/errors.hpp"

namespace matf::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void madd_scalar(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += x[i] * y[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void add_scalar(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

void emax_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(out[i], x[i]);
}

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Kernels& select() {
    if (const char* env = std::getenv("MATF_KERNELS")) {
        return by_name(env);
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (cpu_has_avx2()) return detail::avx2;
#endif
    return detail::scalar;
}

}  // namespace

namespace detail {
const Kernels scalar = {dot_scalar, axpy_scalar, madd_scalar,
                        scale_scalar, add_scalar, emax_scalar, "scalar"};
}  // namespace detail

const Kernels& active() {
    static const Kernels& k = select();
    return k;
}

const Kernels& by_name(const std::string& name) {
    if (name == "scalar") return detail::scalar;
#if defined(__x86_64__) || defined(_M_X64)
    if (name == "avx2") {
        if (!cpu_has_avx2()) throw ConfigError("avx2 kernels unsupported on this CPU");
        return detail::avx2;
    }
#endif
    throw ConfigError("unknown kernel backend: " + name);
}

}  // namespace matf::kernels
