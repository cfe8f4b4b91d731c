#include "fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <new>

namespace dysfluency::detail {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
T* fftw_buffer(std::size_t count) {
    void* p = fftw_malloc(sizeof(T) * count);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
}

}  // namespace

RealFft::RealFft(std::size_t n)
    : n_(n),
      real_(fftw_buffer<double>(n)),
      spectrum_(fftw_buffer<std::complex<double>>(n / 2 + 1)) {
    std::lock_guard lock(planner_mutex());
    auto* spec = reinterpret_cast<fftw_complex*>(spectrum_);
    forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
    inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
        fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
    }
    fftw_free(real_);
    fftw_free(spectrum_);
}

void RealFft::forward() { fftw_execute(static_cast<fftw_plan>(forward_plan_)); }
void RealFft::inverse() { fftw_execute(static_cast<fftw_plan>(inverse_plan_)); }

ComplexFft::ComplexFft(std::size_t n, bool inverse) : n_(n), data_(fftw_buffer<std::complex<double>>(n)) {
    std::lock_guard lock(planner_mutex());
    auto* d = reinterpret_cast<fftw_complex*>(data_);
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), d, d, inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
}

ComplexFft::~ComplexFft() {
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(plan_));
    }
    fftw_free(data_);
}

void ComplexFft::execute() { fftw_execute(static_cast<fftw_plan>(plan_)); }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace dysfluency::detail
