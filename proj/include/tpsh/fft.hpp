/*
 * fft.hpp — thin RAII wrappers over FFTW real transforms.
 *
 * Each object owns aligned buffers and a plan for one length. FFTW planning
 * is not thread-safe, so plan creation and destruction go through a
 * process-wide mutex; execution is reentrant across objects.
 */
#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "tpsh/error.hpp"

namespace tpsh::fft {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

namespace detail {

class RealTransformBase {
public:
    explicit RealTransformBase(std::size_t n) : n_(n) {
        if (n < 2) throw Error(ErrorKind::invalid_argument, "fft", "transform length must be >= 2");
        real_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(n / 2 + 1);
        if (!real_ || !spec_) {
            release();
            throw std::bad_alloc();
        }
    }
    RealTransformBase(const RealTransformBase&) = delete;
    RealTransformBase& operator=(const RealTransformBase&) = delete;
    ~RealTransformBase() { release(); }

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    std::span<double> real() { return {real_, n_}; }
    std::span<std::complex<double>> spectrum() {
        return {reinterpret_cast<std::complex<double>*>(spec_), bins()};
    }

    void execute() { fftw_execute(plan_); }

protected:
    void set_plan(fftw_plan p) {
        if (!p) throw Error(ErrorKind::invalid_argument, "fft", "FFTW failed to create a plan");
        plan_ = p;
    }

    std::size_t n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan plan_ = nullptr;

private:
    void release() {
        std::lock_guard lock(planner_mutex());
        if (plan_) fftw_destroy_plan(plan_);
        if (real_) fftw_free(real_);
        if (spec_) fftw_free(spec_);
        plan_ = nullptr;
        real_ = nullptr;
        spec_ = nullptr;
    }
};

} // namespace detail

/// Unnormalized r2c: X_j = Σ_n x_n e^{−2πi jn/N}, j = 0..N/2.
class RealForward : public detail::RealTransformBase {
public:
    explicit RealForward(std::size_t n) : RealTransformBase(n) {
        std::lock_guard lock(planner_mutex());
        set_plan(fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec_, FFTW_ESTIMATE));
    }
};

/// Unnormalized c2r over the Hermitian extension of the half spectrum.
/// The input spectrum buffer is overwritten by FFTW.
class RealInverse : public detail::RealTransformBase {
public:
    explicit RealInverse(std::size_t n) : RealTransformBase(n) {
        std::lock_guard lock(planner_mutex());
        set_plan(fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_, real_, FFTW_ESTIMATE));
    }
};

} // namespace tpsh::fft
