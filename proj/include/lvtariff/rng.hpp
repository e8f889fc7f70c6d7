#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace lvtariff {

// SplitMix64 finalizer; used to derive per-run/per-stream seeds from a master
// seed so that adding runs never perturbs earlier ones.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(a ^ mix_seed(b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seed(mix_seed(a, b), c);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
    return mix_seed(mix_seed(a, b, c), d);
}

// Seeded RNG with hand-rolled distribution transforms. The mt19937_64 engine
// is bit-exact by the standard; std::*_distribution is not, so every
// transform lives here to keep sampled artifacts reproducible across
// compilers.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), rejection-free enough for our n << 2^64
    std::uint64_t uniform_u64(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_u64: n must be positive");
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = eng_();
        while (v >= limit) v = eng_();
        return v % n;
    }

    double normal() {
        // Marsaglia polar method, one cached deviate
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    double exponential() {
        double u;
        do { u = uniform(); } while (u <= 0.0);
        return -std::log(u);
    }

    // Marsaglia-Tsang; shape boost for alpha < 1
    double gamma(double shape) {
        if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
        if (shape < 1.0) {
            double g = gamma(shape + 1.0);
            double u;
            do { u = uniform(); } while (u <= 0.0);
            return g * std::pow(u, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Knuth product method; mu values here are O(1)
    int poisson(double mu) {
        if (mu < 0.0) throw std::invalid_argument("poisson: mu must be nonnegative");
        if (mu == 0.0) return 0;
        if (mu > 60.0) {
            // split to keep the product away from underflow
            int half = poisson(mu / 2.0);
            return half + poisson(mu - mu / 2.0);
        }
        double limit = std::exp(-mu);
        double prod = uniform();
        int k = 0;
        while (prod > limit) {
            prod *= uniform();
            ++k;
        }
        return k;
    }

    // Inverse CDF; scale kappa, shape sigma
    double weibull(double scale, double shape) {
        if (scale <= 0.0 || shape <= 0.0) throw std::invalid_argument("weibull: parameters must be positive");
        double u;
        do { u = uniform(); } while (u >= 1.0);
        return scale * std::pow(-std::log(1.0 - u), 1.0 / shape);
    }

    std::vector<double> dirichlet(std::span<const double> alpha) {
        std::vector<double> g(alpha.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            g[i] = gamma(alpha[i]);
            sum += g[i];
        }
        if (sum <= 0.0) {
            // all-tiny alphas; fall back to uniform weights
            for (auto& v : g) v = 1.0 / static_cast<double>(g.size());
            return g;
        }
        for (auto& v : g) v /= sum;
        return g;
    }

    // Fisher-Yates; std::shuffle is implementation-defined, this is not
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lvtariff
