#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace dysfluency::detail {

/// Owns aligned buffers and FFTW plans for one transform size. Plan creation
/// is serialized internally; executing distinct instances concurrently is safe.
class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const noexcept { return n_; }
    std::span<double> real() noexcept { return {real_, n_}; }
    std::span<std::complex<double>> spectrum() noexcept { return {spectrum_, n_ / 2 + 1}; }

    /// real() -> spectrum()
    void forward();
    /// spectrum() -> real(), unnormalized (scaled by n). Clobbers spectrum().
    void inverse();

private:
    std::size_t n_;
    double* real_;
    std::complex<double>* spectrum_;
    void* forward_plan_;
    void* inverse_plan_;
};

/// In-place complex transform of one size.
class ComplexFft {
public:
    ComplexFft(std::size_t n, bool inverse);
    ~ComplexFft();
    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;

    std::span<std::complex<double>> data() noexcept { return {data_, n_}; }
    void execute();

private:
    std::size_t n_;
    std::complex<double>* data_;
    void* plan_;
};

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace dysfluency::detail
