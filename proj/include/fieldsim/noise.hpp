#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>
#include <algorithm>
#include <numeric>

#include "fieldsim/rng.hpp"

// Multi-octave Perlin fields with deterministic seeding, drift/resample
// temporal coherence, optional toroidal wrapping, and the scalar mappings
// (unit normalization, quantile classes, hazard rates, cycle phases) shared by
// the simulation modules.

namespace fieldsim {

// Classic 3D gradient noise: 256-entry permutation table shuffled from the
// seed, quintic fade 6t^5-15t^4+10t^3, lattice gradients from the 12-edge set.
// Raw output is bounded by the cell-value supremum 1.036353811211803; we
// rescale by its reciprocal so [-1,1] is tight. Zero at integer lattice points.
class PerlinTable {
public:
    explicit PerlinTable(uint64_t seed) {
        std::array<int, 256> p;
        for (int i = 0; i < 256; ++i) p[i] = i;
        Rng rng(derive_substream(seed, "perlin_perm"));
        for (int i = 255; i > 0; --i) {
            int j = int(rng.next_below(uint64_t(i + 1)));
            std::swap(p[i], p[j]);
        }
        for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
    }

    // Unbounded lattice (indices folded mod 256).
    double noise(double x, double y, double z) const {
        int xi = fast_floor(x), yi = fast_floor(y), zi = fast_floor(z);
        return core(x - xi, y - yi, z - zi, xi & 255, (xi + 1) & 255, yi & 255, (yi + 1) & 255,
                    zi & 255, (zi + 1) & 255);
    }

    // Lattice wrapped modulo (wx, wy) in x/y so the field tiles seamlessly.
    double noise_wrapped(double x, double y, double z, int wx, int wy) const {
        int xi = fast_floor(x), yi = fast_floor(y), zi = fast_floor(z);
        int x0 = pmod(xi, wx), x1 = pmod(xi + 1, wx);
        int y0 = pmod(yi, wy), y1 = pmod(yi + 1, wy);
        return core(x - xi, y - yi, z - zi, x0 & 255, x1 & 255, y0 & 255, y1 & 255, zi & 255,
                    (zi + 1) & 255);
    }

private:
    static int fast_floor(double v) {
        int i = int(v);
        return v < i ? i - 1 : i;
    }
    static int pmod(int a, int m) {
        if (unsigned(a) < unsigned(m)) return a;  // in range already
        int r = a % m;
        return r < 0 ? r + m : r;
    }
    static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
    static double lerp(double t, double a, double b) { return a + t * (b - a); }
    // Edge-gradient dot product, table-driven (same values as the classic
    // branch form, minus the mispredictions).
    static double grad(int h, double x, double y, double z) {
        static constexpr double gx[16] = {1, -1, 1, -1, 1, -1, 1, -1, 0, 0, 0, 0, 1, 0, -1, 0};
        static constexpr double gy[16] = {1, 1, -1, -1, 0, 0, 0, 0, 1, -1, 1, -1, 1, -1, 1, -1};
        static constexpr double gz[16] = {0, 0, 0, 0, 1, 1, -1, -1, 1, 1, -1, -1, 0, 1, 0, -1};
        int g = h & 15;
        return gx[g] * x + gy[g] * y + gz[g] * z;
    }

    double core(double x, double y, double z, int x0, int x1, int y0, int y1, int z0,
                int z1) const {
        double u = fade(x), v = fade(y), w = fade(z);
        int a = perm_[x0], b = perm_[x1];
        int aa = perm_[a + y0] + z0, ab = perm_[a + y1] + z0;
        int ba = perm_[b + y0] + z0, bb = perm_[b + y1] + z0;
        int aa1 = perm_[a + y0] + z1, ab1 = perm_[a + y1] + z1;
        int ba1 = perm_[b + y0] + z1, bb1 = perm_[b + y1] + z1;

        double c00 = lerp(u, grad(perm_[aa], x, y, z), grad(perm_[ba], x - 1, y, z));
        double c10 = lerp(u, grad(perm_[ab], x, y - 1, z), grad(perm_[bb], x - 1, y - 1, z));
        double c01 = lerp(u, grad(perm_[aa1], x, y, z - 1), grad(perm_[ba1], x - 1, y, z - 1));
        double c11 =
            lerp(u, grad(perm_[ab1], x, y - 1, z - 1), grad(perm_[bb1], x - 1, y - 1, z - 1));
        double r = lerp(w, lerp(v, c00, c10), lerp(v, c01, c11));
        return r * kScale;
    }

    // Reciprocal of the cell-value supremum 1.036353811211803 for the 12-edge
    // gradient set (maximize sum over corners of weight * best gradient dot).
    static constexpr double kScale = 1.0 / 1.036353811211803;
    std::array<int, 512> perm_{};
};

// One-shot evaluation; builds the table, so prefer PerlinTable in loops.
inline double perlin3(double x, double y, double t, uint64_t seed) {
    return PerlinTable(seed).noise(x, y, t);
}

// Normalize [-1,1] -> [0,1], clamping out-of-range input.
inline double to_unit(double n) {
    double u = 0.5 * (n + 1.0);
    return u < 0.0 ? 0.0 : (u > 1.0 ? 1.0 : u);
}

// Parameters of one multi-octave field stack.
struct NoiseSpec {
    double base_frequency = 0.01;  // cycles per world unit
    int octaves = 4;
    double persistence = 0.5;   // in (0,1]
    double lacunarity = 2.0;    // > 1
    double offset_x = 0.0;      // lattice-space offsets, applied after frequency
    double offset_y = 0.0;
    double offset_t = 0.0;
    uint64_t seed = 0;
    double amplitude_norm = 0.0;  // geometric sum of persistence^k, cached

    NoiseSpec() { amplitude_norm = compute_norm(octaves, persistence); }
    NoiseSpec(double f, int K, double p, double l, uint64_t s)
        : base_frequency(f), octaves(K), persistence(p), lacunarity(l), seed(s) {
        validate(f, K, p, l);
        amplitude_norm = compute_norm(K, p);
    }

    static void validate(double f, int K, double p, double l) {
        if (K < 1) throw std::invalid_argument("NoiseSpec: octaves must be >= 1");
        if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("NoiseSpec: persistence in (0,1]");
        if (!(l > 1.0)) throw std::invalid_argument("NoiseSpec: lacunarity must be > 1");
        if (!(f > 0.0)) throw std::invalid_argument("NoiseSpec: base_frequency must be > 0");
    }
    static double compute_norm(int K, double p) {
        double a = 0.0, w = 1.0;
        for (int k = 0; k < K; ++k, w *= p) a += w;
        return a;
    }
    // Stable identity string; hashed into raster headers.
    std::string canonical() const {
        char buf[192];
        std::snprintf(buf, sizeof buf, "f=%.17g K=%d p=%.17g l=%.17g ox=%.17g oy=%.17g ot=%.17g seed=%llu",
                      base_frequency, octaves, persistence, lacunarity, offset_x, offset_y,
                      offset_t, (unsigned long long)seed);
        return buf;
    }
    uint64_t hash() const { return fnv1a64(canonical()); }
};

enum class TemporalMode { drift, resample };
enum class BoundaryMode { unbounded, toroidal };

// Evaluator for one field stack. Evaluation is a pure read; `advance` is the
// only mutation. Drift advances a global phase by v_drift per tick; resample
// redraws offsets at cycle boundaries so the field is piecewise stationary.
// Toroidal mode wraps lattice coordinates modulo round(period*f*l^k) per
// octave, which adjusts each octave frequency to the nearest seamless value.
class FieldSampler {
public:
    FieldSampler(const NoiseSpec& spec, TemporalMode mode, double mode_param,
                 BoundaryMode boundary = BoundaryMode::unbounded, double period = 0.0)
        : spec_(spec),
          table_(spec.seed),
          mode_(mode),
          boundary_(boundary),
          period_(period),
          drift_speed_(mode == TemporalMode::drift ? mode_param : 0.0),
          cycle_ticks_(mode == TemporalMode::resample ? (long long)mode_param : 0) {
        if (mode == TemporalMode::resample && cycle_ticks_ < 1)
            throw std::invalid_argument("FieldSampler: resample cycle must be >= 1 tick");
        if (boundary == BoundaryMode::toroidal && !(period > 0.0))
            throw std::invalid_argument("FieldSampler: toroidal mode needs a positive period");
        freqs_.resize(spec.octaves);
        wraps_.resize(spec.octaves, 0);
        double f = spec.base_frequency;
        for (int k = 0; k < spec.octaves; ++k) {
            if (boundary == BoundaryMode::toroidal) {
                long long cells = (long long)std::llround(period_ * f);
                if (cells < 1) cells = 1;
                wraps_[k] = int(cells);
                freqs_[k] = double(cells) / period_;
            } else {
                freqs_[k] = f;
            }
            f *= spec.lacunarity;
        }
        offs_ = {spec.offset_x, spec.offset_y, spec.offset_t};
        if (mode == TemporalMode::resample) draw_offsets(0);
    }

    // Normalized K-octave value at (x,y) under the sampler's current phase.
    double sample(double x, double y) const { return value_at(x, y, current_phase_); }
    double sample01(double x, double y) const { return to_unit(sample(x, y)); }

    // Explicit temporal coordinate (phase units), bypassing drift state.
    double value_at(double x, double y, double t) const {
        double sum = 0.0, amp = 1.0;
        double tt = t + offs_[2];
        for (int k = 0; k < spec_.octaves; ++k) {
            double fx = freqs_[k] * x + offs_[0];
            double fy = freqs_[k] * y + offs_[1];
            double n = wraps_[k] ? table_.noise_wrapped(fx, fy, tt, wraps_[k], wraps_[k])
                                 : table_.noise(fx, fy, tt);
            sum += amp * n;
            amp *= spec_.persistence;
        }
        return sum / spec_.amplitude_norm;
    }

    void advance(long long ticks) {
        if (ticks < 0) throw std::invalid_argument("FieldSampler::advance: ticks must be >= 0");
        tick_ += ticks;
        if (mode_ == TemporalMode::drift) {
            current_phase_ += drift_speed_ * double(ticks);
        } else {
            long long cycle = tick_ / cycle_ticks_;
            if (cycle != cycle_index_) draw_offsets(cycle);
        }
    }

    double current_phase() const { return current_phase_; }
    long long tick() const { return tick_; }
    const NoiseSpec& spec() const { return spec_; }
    TemporalMode temporal_mode() const { return mode_; }

private:
    void draw_offsets(long long cycle) {
        cycle_index_ = cycle;
        Rng rng(derive_substream(spec_.seed, "resample_offsets", uint64_t(cycle)));
        offs_[0] = spec_.offset_x + rng.uniform(0.0, 256.0);
        offs_[1] = spec_.offset_y + rng.uniform(0.0, 256.0);
        offs_[2] = spec_.offset_t + rng.uniform(0.0, 256.0);
    }

    NoiseSpec spec_;
    PerlinTable table_;
    TemporalMode mode_;
    BoundaryMode boundary_;
    double period_ = 0.0;
    double drift_speed_ = 0.0;
    long long cycle_ticks_ = 0;
    long long cycle_index_ = 0;
    long long tick_ = 0;
    double current_phase_ = 0.0;
    std::vector<double> freqs_;
    std::vector<int> wraps_;
    std::array<double, 3> offs_{};
};

// Rank-based class assignment: sort values (ties broken by original index),
// cut the ranks into bands matching the target fractions. Realized counts
// differ from fraction*n by at most one per class, and a higher value never
// maps to a lower class.
inline std::vector<int> quantile_map(std::span<const double> values,
                                     std::span<const double> fractions) {
    if (values.empty()) throw std::invalid_argument("quantile_map: empty values");
    if (fractions.empty()) throw std::invalid_argument("quantile_map: empty fractions");
    double sum = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw std::invalid_argument("quantile_map: fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("quantile_map: fractions must sum to 1");

    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });

    std::vector<int> classes(n, 0);
    double cum = 0.0;
    size_t lo = 0;
    for (size_t c = 0; c < fractions.size(); ++c) {
        cum += fractions[c];
        size_t hi = (c + 1 == fractions.size()) ? n : size_t(std::llround(cum * double(n)));
        if (hi > n) hi = n;
        for (size_t r = lo; r < hi; ++r) classes[order[r]] = int(c);
        lo = hi;
    }
    return classes;
}

// Activation probability for a unit field value: lambda = lambda0*(eps+(1-eps)u),
// p = 1-exp(-lambda*dt).
inline double hazard_map(double u, double lambda0, double eps, double dt = 1.0) {
    if (lambda0 < 0.0) throw std::invalid_argument("hazard_map: lambda0 must be >= 0");
    double lam = lambda0 * (eps + (1.0 - eps) * u);
    return 1.0 - std::exp(-lam * dt);
}

// Circular Gaussian kernel used by the phase-driven schedulers.
inline double phase_kernel(double delta, double sigma) {
    double z = delta / sigma;
    return std::exp(-0.5 * z * z);
}

// Cycle phase for a unit value; u = 1 clamps to the last tick.
inline int phase_map(double u, int cycle_ticks) {
    if (cycle_ticks < 1) throw std::invalid_argument("phase_map: cycle must be >= 1");
    int tau = int(std::floor(u * double(cycle_ticks)));
    if (tau < 0) tau = 0;
    if (tau >= cycle_ticks) tau = cycle_ticks - 1;
    return tau;
}

}  // namespace fieldsim
