#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>

#include <fftw3.h>

namespace hermvas::fft {

namespace detail {
// FFTW's planner is not re-entrant; execution of distinct plans is.
inline std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace detail

enum class Direction { forward, backward };

/// In-place complex DFT (unnormalized) on an FFTW-aligned buffer, planned with
/// FFTW_ESTIMATE so the chosen algorithm (and the result bits) depend only on n.
class InPlaceFft {
public:
    explicit InPlaceFft(std::size_t n, Direction dir = Direction::forward) : n_(n)
    {
        buf_ = fftw_alloc_complex(n);
        if (buf_ == nullptr) throw std::bad_alloc();
        std::scoped_lock lock(detail::planner_mutex());
        const int sign = dir == Direction::forward ? FFTW_FORWARD : FFTW_BACKWARD;
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_, buf_, sign, FFTW_ESTIMATE);
    }

    InPlaceFft(const InPlaceFft&) = delete;
    InPlaceFft& operator=(const InPlaceFft&) = delete;

    ~InPlaceFft()
    {
        {
            std::scoped_lock lock(detail::planner_mutex());
            fftw_destroy_plan(plan_);
        }
        fftw_free(buf_);
    }

    std::span<std::complex<double>> data() noexcept
    {
        return {reinterpret_cast<std::complex<double>*>(buf_), n_};
    }

    void execute() noexcept { fftw_execute(plan_); }
    std::size_t size() const noexcept { return n_; }

private:
    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan plan_ = nullptr;
};

} // namespace hermvas::fft
