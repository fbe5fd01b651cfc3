#pragma once

#include <cstdint>
#include <random>

namespace ppde {

// splitmix64 finalizer, used to derive substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// Inverse standard-normal CDF: Acklam's rational approximation followed by
// one Halley step against erfc, giving near machine precision. Deterministic
// (no libm dispatch beyond log/sqrt/exp/erfc).
double inverse_normal_cdf(double p);

// Seedable normal-variate stream: std::mt19937_64 for the uniform bits,
// u = ((x >> 11) + 0.5) * 2^-53 in (0,1), then the inverse CDF. Substream k
// of a seed is a stream seeded with splitmix64(seed + 1 + k); combining
// substream results in index order makes accumulation independent of the
// worker count.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : eng_(seed) {}

    static NormalStream substream(std::uint64_t seed, std::uint64_t index) {
        return NormalStream(splitmix64(seed + 1 + index));
    }

    double uniform01() {
        const std::uint64_t x = eng_();
        return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal() { return inverse_normal_cdf(uniform01()); }

private:
    std::mt19937_64 eng_;
};

// Neumaier compensated summation.
class NeumaierSum {
public:
    void add(double x) {
        const double t = s_ + x;
        if (std::abs(s_) >= std::abs(x)) {
            c_ += (s_ - t) + x;
        } else {
            c_ += (x - t) + s_;
        }
        s_ = t;
    }
    double value() const { return s_ + c_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Worker cap shared by parallel loops (PPDE_THREADS); 1 = sequential.
void set_max_threads(int n);
int max_threads();

}  // namespace ppde
