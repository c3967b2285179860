#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fieldsim/geom.hpp"

// Evaluation statistics over simulation records: spatial structure, temporal
// smoothness, diversity, coverage, event timing, point-process summaries, and
// spatial balance. Everything here is a pure function of its inputs; values
// that are not identifiable from the data come back as nullopt rather than 0.

namespace fieldsim {

struct DistanceBins {
    std::vector<double> edges;

    DistanceBins() : edges{0, 10, 20, 30, 40, 60, 80, 100, 140, 180, 240, 320, 420, 520} {}
    explicit DistanceBins(std::vector<double> e) : edges(std::move(e)) {
        if (edges.size() < 2) throw std::invalid_argument("DistanceBins: need at least one bin");
        for (size_t i = 1; i < edges.size(); ++i)
            if (edges[i] <= edges[i - 1])
                throw std::invalid_argument("DistanceBins: edges must be strictly increasing");
    }
    size_t count() const { return edges.size() - 1; }
    double center(size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    // Bin index for distance d, or -1 when outside all bins.
    int index(double d) const {
        if (d < edges.front() || d >= edges.back()) return -1;
        auto it = std::upper_bound(edges.begin(), edges.end(), d);
        return int(it - edges.begin()) - 1;
    }
};

struct SpatialStats {
    std::vector<std::optional<double>> s_dir;        // mean cos of heading difference
    std::vector<std::optional<double>> c_v;          // Pearson correlation of speeds
    std::vector<std::optional<double>> gamma_theta;  // angular semivariogram
    std::vector<std::optional<double>> gamma_v;      // speed semivariogram
    std::vector<long long> pair_counts;
    std::optional<double> corr_length_dir;
    std::optional<double> corr_length_speed;
};

// Pairwise directional similarity, speed correlation and semivariograms in
// distance bins, torus metric. Angular differences are wrapped to [-pi, pi).
inline SpatialStats spatial_stats(std::span<const Vec2> pos, std::span<const double> heading,
                                  std::span<const double> speed, const DistanceBins& bins,
                                  double L, double decay_fraction = 0.5) {
    const size_t n = pos.size();
    if (n < 2) throw std::invalid_argument("spatial_stats: need at least 2 agents");
    const size_t nb = bins.count();
    std::vector<long long> cnt(nb, 0);
    std::vector<double> sum_cos(nb, 0), sum_dth2(nb, 0), sum_dv2(nb, 0);
    std::vector<double> sv(nb, 0), svv(nb, 0), svab(nb, 0);

    const double maxr = bins.edges.back();
    const double maxr2 = maxr * maxr;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            double dx = torus_delta(pos[i].x, pos[j].x, L);
            if (std::abs(dx) >= maxr) continue;
            double dy = torus_delta(pos[i].y, pos[j].y, L);
            double d2 = dx * dx + dy * dy;
            if (d2 >= maxr2) continue;
            int b = bins.index(std::sqrt(d2));
            if (b < 0) continue;
            double dth = angle_diff(heading[i], heading[j]);
            double dv = speed[i] - speed[j];
            cnt[b]++;
            sum_cos[b] += std::cos(dth);
            sum_dth2[b] += dth * dth;
            sum_dv2[b] += dv * dv;
            sv[b] += speed[i] + speed[j];
            svv[b] += speed[i] * speed[i] + speed[j] * speed[j];
            svab[b] += speed[i] * speed[j];
        }
    }

    SpatialStats out;
    out.pair_counts = cnt;
    out.s_dir.resize(nb);
    out.c_v.resize(nb);
    out.gamma_theta.resize(nb);
    out.gamma_v.resize(nb);
    for (size_t b = 0; b < nb; ++b) {
        if (cnt[b] == 0) continue;  // empty bin stays undefined
        double m = double(cnt[b]);
        out.s_dir[b] = sum_cos[b] / m;
        out.gamma_theta[b] = 0.5 * sum_dth2[b] / m;
        out.gamma_v[b] = 0.5 * sum_dv2[b] / m;
        // symmetrized Pearson over both pair orderings
        double mu = sv[b] / (2.0 * m);
        double var = svv[b] / (2.0 * m) - mu * mu;
        double cov = svab[b] / m - mu * mu;
        if (var > 1e-300) out.c_v[b] = cov / var;
    }

    auto corr_len = [&](const std::vector<std::optional<double>>& s) -> std::optional<double> {
        if (!s[0]) return std::nullopt;
        double target = decay_fraction * *s[0];
        for (size_t b = 0; b < nb; ++b)
            if (s[b] && *s[b] <= target) return bins.center(b);
        return std::nullopt;
    };
    out.corr_length_dir = corr_len(out.s_dir);
    out.corr_length_speed = corr_len(out.c_v);
    return out;
}

inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    size_t idx = size_t(std::ceil(q * double(v.size())));
    if (idx > 0) --idx;
    if (idx >= v.size()) idx = v.size() - 1;
    return v[idx];
}

struct JerkStats {
    double mean = 0.0;
    double p95 = 0.0;
    long long samples = 0;
};

// jerk(t) = ||v(t+1) - 2 v(t) + v(t-1)|| per agent; velocities are vectors, so
// torus wrap never enters.
inline JerkStats jerk_stats(const std::vector<std::vector<Vec2>>& velocity_by_agent) {
    JerkStats js;
    std::vector<double> all;
    double sum = 0.0;
    for (const auto& v : velocity_by_agent) {
        for (size_t t = 1; t + 1 < v.size(); ++t) {
            double jx = v[t + 1].x - 2.0 * v[t].x + v[t - 1].x;
            double jy = v[t + 1].y - 2.0 * v[t].y + v[t - 1].y;
            double j = std::sqrt(jx * jx + jy * jy);
            sum += j;
            all.push_back(j);
        }
    }
    js.samples = (long long)all.size();
    if (!all.empty()) {
        js.mean = sum / double(all.size());
        js.p95 = percentile(all, 0.95);
    }
    return js;
}

// Lag-1 autocorrelation of a scalar series.
inline std::optional<double> autocorr1(std::span<const double> s) {
    if (s.size() < 3) return std::nullopt;
    double mean = 0.0;
    for (double x : s) mean += x;
    mean /= double(s.size());
    double num = 0.0, den = 0.0;
    for (size_t t = 0; t < s.size(); ++t) {
        double d = s[t] - mean;
        den += d * d;
        if (t + 1 < s.size()) num += d * (s[t + 1] - mean);
    }
    if (den <= 1e-300) return std::nullopt;
    return num / den;
}

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = -kTwoPi / double(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline std::vector<double> periodogram(std::span<const double> x) {
    const size_t n = x.size();
    std::vector<double> power(n / 2 + 1, 0.0);
    if ((n & (n - 1)) == 0 && n > 1) {
        std::vector<std::complex<double>> a(x.begin(), x.end());
        fft_radix2(a);
        for (size_t k = 0; k <= n / 2; ++k) power[k] = std::norm(a[k]);
    } else {
        for (size_t k = 0; k <= n / 2; ++k) {  // short windows only; O(n^2) is fine
            std::complex<double> acc(0.0);
            for (size_t t = 0; t < n; ++t) {
                double ang = -kTwoPi * double(k) * double(t) / double(n);
                acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
            }
            power[k] = std::norm(acc);
        }
    }
    return power;
}

}  // namespace detail

struct SpectralRatio {
    std::optional<double> hf_lf;
    bool windowed = true;  // false when the series was shorter than one window
};

// High/low-frequency energy ratio of a scalar series over non-overlapping
// windows (default 256 ticks). DC excluded. With M = window/2 nonzero
// frequency bins, LF is the lowest quartile (k in [1, M/4]) and HF the top
// half (k in (M/2, M]). Series shorter than one window fall back to a single
// full-length periodogram and are flagged.
inline SpectralRatio hf_lf_ratio(std::span<const double> series, size_t window = 256) {
    SpectralRatio out;
    size_t n = series.size();
    if (n < 8) return out;
    std::vector<std::span<const double>> segments;
    if (n < window) {
        segments.push_back(series);
        out.windowed = false;
    } else {
        for (size_t s = 0; s + window <= n; s += window)
            segments.push_back(series.subspan(s, window));
    }
    double lf = 0.0, hf = 0.0;
    for (auto seg : segments) {
        auto p = detail::periodogram(seg);
        size_t m = p.size() - 1;  // nonzero bins 1..m
        size_t lf_hi = std::max<size_t>(1, m / 4);
        size_t hf_lo = m / 2 + 1;
        for (size_t k = 1; k <= lf_hi; ++k) lf += p[k];
        for (size_t k = hf_lo; k <= m; ++k) hf += p[k];
    }
    if (lf > 1e-300) out.hf_lf = hf / lf;
    return out;
}

// Mean squared second difference of a series.
inline std::optional<double> second_difference_energy(std::span<const double> s) {
    if (s.size() < 3) return std::nullopt;
    double acc = 0.0;
    for (size_t t = 1; t + 1 < s.size(); ++t) {
        double d = s[t + 1] - 2.0 * s[t] + s[t - 1];
        acc += d * d;
    }
    return acc / double(s.size() - 2);
}

struct DiversityStats {
    double polarization = 0.0;
    double heading_entropy = 0.0;  // nats, 36 bins
    double speed_mean = 0.0, speed_std = 0.0, speed_skew = 0.0;
};

inline DiversityStats diversity_stats(std::span<const double> heading,
                                      std::span<const double> speed) {
    if (heading.empty()) throw std::invalid_argument("diversity_stats: empty snapshot");
    const double n = double(heading.size());
    DiversityStats d;
    double cx = 0, cy = 0;
    int hist[36] = {};
    for (double th : heading) {
        cx += std::cos(th);
        cy += std::sin(th);
        int b = int(wrap_angle(th) / kTwoPi * 36.0);
        if (b > 35) b = 35;
        hist[b]++;
    }
    d.polarization = std::sqrt(cx * cx + cy * cy) / n;
    for (int b = 0; b < 36; ++b) {
        if (!hist[b]) continue;
        double p = hist[b] / n;
        d.heading_entropy -= p * std::log(p);
    }
    double m = 0, m2 = 0, m3 = 0;
    for (double v : speed) m += v;
    m /= n;
    for (double v : speed) {
        double x = v - m;
        m2 += x * x;
        m3 += x * x * x;
    }
    m2 /= n;
    m3 /= n;
    d.speed_mean = m;
    d.speed_std = std::sqrt(m2);
    d.speed_skew = m2 > 1e-300 ? m3 / std::pow(m2, 1.5) : 0.0;
    return d;
}

struct PathStats {
    double visited_fraction = 0.0;
    double tortuosity_mean = 0.0;
    double tortuosity_p95 = 0.0;
    bool capped = false;  // some chord was degenerate and hit the cap
};

// Visited fraction and tortuosity over the trailing `window` ticks of a full
// trajectory block pos[t][agent].
inline PathStats coverage_and_paths(const std::vector<std::vector<Vec2>>& pos_by_tick,
                                    double L, int grid_n = 50, size_t window = 60) {
    if (pos_by_tick.empty()) throw std::invalid_argument("coverage_and_paths: empty trajectory");
    PathStats out;
    const size_t T = pos_by_tick.size();
    const size_t n = pos_by_tick[0].size();
    const size_t t0 = T > window ? T - window : 0;
    std::vector<uint8_t> visited(size_t(grid_n) * grid_n, 0);
    for (size_t t = t0; t < T; ++t)
        for (size_t i = 0; i < n; ++i) {
            int ix = int(pos_by_tick[t][i].x / L * grid_n);
            int iy = int(pos_by_tick[t][i].y / L * grid_n);
            ix = std::clamp(ix, 0, grid_n - 1);
            iy = std::clamp(iy, 0, grid_n - 1);
            visited[size_t(iy) * grid_n + ix] = 1;
        }
    long long v = 0;
    for (auto c : visited) v += c;
    out.visited_fraction = double(v) / double(grid_n * grid_n);

    std::vector<double> tort(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
        double arc = 0.0;
        for (size_t t = t0 + 1; t < T; ++t)
            arc += torus_dist(pos_by_tick[t - 1][i], pos_by_tick[t][i], L);
        double chord = torus_dist(pos_by_tick[t0][i], pos_by_tick[T - 1][i], L);
        if (chord < 1e-9) {
            tort[i] = 1e6;
            out.capped = true;
        } else {
            tort[i] = arc / chord;
        }
    }
    double s = 0.0;
    for (double t : tort) s += t;
    out.tortuosity_mean = s / double(n);
    out.tortuosity_p95 = percentile(tort, 0.95);
    return out;
}

struct EventStats {
    std::optional<double> isi_mean, isi_std, isi_cv;
    std::optional<double> gap_p95;
    std::optional<double> burstiness;  // (sigma-mu)/(sigma+mu) of ISIs
    std::optional<double> fano;        // Var(N_w)/E[N_w], sliding windows
    double duty = 0.0;                 // mean active fraction, filled by callers
    long long n_events = 0;
};

// ISI statistics on the merged event-timestamp sequence plus the windowed
// Fano factor. `t_begin`/`t_end` delimit the observation span in ticks.
inline EventStats event_stats(std::span<const double> merged_times, long long t_begin,
                              long long t_end, int fano_window = 60) {
    EventStats es;
    es.n_events = (long long)merged_times.size();
    if (merged_times.size() >= 2) {
        std::vector<double> isi;
        isi.reserve(merged_times.size() - 1);
        for (size_t i = 1; i < merged_times.size(); ++i)
            isi.push_back(merged_times[i] - merged_times[i - 1]);
        double mu = 0.0;
        for (double d : isi) mu += d;
        mu /= double(isi.size());
        double var = 0.0;
        for (double d : isi) var += (d - mu) * (d - mu);
        var /= double(isi.size());
        double sd = std::sqrt(var);
        es.isi_mean = mu;
        es.isi_std = sd;
        if (mu > 1e-300) es.isi_cv = sd / mu;
        if (sd + mu > 1e-300) es.burstiness = (sd - mu) / (sd + mu);
        es.gap_p95 = percentile(isi, 0.95);
    }
    // Sliding-window counts, stride 1.
    long long span = t_end - t_begin;
    if (span >= fano_window && !merged_times.empty()) {
        std::vector<long long> per_tick(size_t(span), 0);
        for (double t : merged_times) {
            long long k = (long long)std::floor(t) - t_begin;
            if (k >= 0 && k < span) per_tick[size_t(k)]++;
        }
        std::vector<long long> prefix(per_tick.size() + 1, 0);
        for (size_t i = 0; i < per_tick.size(); ++i) prefix[i + 1] = prefix[i] + per_tick[i];
        size_t nw = per_tick.size() - size_t(fano_window) + 1;
        double m = 0.0;
        for (size_t s = 0; s < nw; ++s) m += double(prefix[s + fano_window] - prefix[s]);
        m /= double(nw);
        double v = 0.0;
        for (size_t s = 0; s < nw; ++s) {
            double d = double(prefix[s + fano_window] - prefix[s]) - m;
            v += d * d;
        }
        v /= double(nw);
        if (m > 1e-300) es.fano = v / m;
    }
    return es;
}

struct BalanceStats {
    double regional_cv = 0.0;
    std::optional<double> morans_i;
};

// Regional coefficient of variation and Moran's I over a w x h count grid,
// rook adjacency, row-standardized weights.
inline BalanceStats spatial_balance(std::span<const double> counts, int w, int h) {
    if (int(counts.size()) != w * h) throw std::invalid_argument("spatial_balance: size mismatch");
    BalanceStats out;
    const int n = w * h;
    double mean = 0.0;
    for (double c : counts) mean += c;
    mean /= n;
    double var = 0.0;
    for (double c : counts) var += (c - mean) * (c - mean);
    var /= n;
    out.regional_cv = mean > 1e-300 ? std::sqrt(var) / mean : 0.0;
    if (var <= 1e-300) return out;  // I undefined on a flat grid

    double num = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double zi = counts[size_t(y) * w + x] - mean;
            double nb_sum = 0.0;
            int nb = 0;
            auto add = [&](int xx, int yy) {
                if (xx < 0 || yy < 0 || xx >= w || yy >= h) return;
                nb_sum += counts[size_t(yy) * w + xx] - mean;
                nb++;
            };
            add(x - 1, y);
            add(x + 1, y);
            add(x, y - 1);
            add(x, y + 1);
            num += zi * (nb_sum / nb);
        }
    }
    out.morans_i = num / (var * n);
    return out;
}

struct PointProcessStats {
    std::vector<double> radii;
    std::vector<double> k;        // Ripley K
    std::vector<double> k_ratio;  // K / (pi r^2)
    std::vector<double> g;        // pair correlation, kernel-smoothed
    double mean_nn = 0.0;
    bool defined = true;
};

// Second-order summaries. Torus worlds use the exact toroidal metric (no edge
// correction needed); bounded worlds use the translation correction.
inline PointProcessStats point_process_stats(std::span<const Vec2> pts,
                                             std::span<const double> radii, double L,
                                             bool toroidal, double bandwidth = 0.0) {
    PointProcessStats out;
    out.radii.assign(radii.begin(), radii.end());
    const size_t n = pts.size();
    if (n < 10) {
        out.defined = false;
        return out;
    }
    const double A = L * L;
    if (bandwidth <= 0.0 && radii.size() >= 2) bandwidth = radii[1] - radii[0];
    if (bandwidth <= 0.0) bandwidth = radii.empty() ? 1.0 : std::max(1e-6, radii[0] * 0.5);

    out.k.assign(radii.size(), 0.0);
    out.g.assign(radii.size(), 0.0);
    double nn_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double best = 1e300;
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double d, wgt;
            if (toroidal) {
                d = torus_dist(pts[i], pts[j], L);
                wgt = 1.0;
            } else {
                double dx = std::abs(pts[i].x - pts[j].x);
                double dy = std::abs(pts[i].y - pts[j].y);
                d = std::sqrt(dx * dx + dy * dy);
                wgt = A / ((L - dx) * (L - dy));  // translation correction
            }
            best = std::min(best, d);
            for (size_t r = 0; r < radii.size(); ++r) {
                if (d <= radii[r]) out.k[r] += wgt;
                double u = (d - radii[r]) / bandwidth;
                if (std::abs(u) < 1.0)
                    out.g[r] += wgt * 0.75 * (1.0 - u * u) / bandwidth;  // Epanechnikov
            }
        }
        nn_sum += best;
    }
    out.mean_nn = nn_sum / double(n);
    double norm = A / (double(n) * double(n - 1));
    out.k_ratio.resize(radii.size());
    for (size_t r = 0; r < radii.size(); ++r) {
        out.k[r] *= norm;
        out.k_ratio[r] = radii[r] > 0 ? out.k[r] / (kPi * radii[r] * radii[r]) : 0.0;
        out.g[r] = radii[r] > 0 ? out.g[r] * norm / (kTwoPi * radii[r]) : 0.0;
    }
    return out;
}

// Mean distance from probe points to their nearest entity (bounded worlds).
inline std::optional<double> coverage_distance(std::span<const Vec2> entities,
                                               std::span<const Vec2> probes) {
    if (entities.empty() || probes.empty()) return std::nullopt;
    double acc = 0.0;
    for (const auto& p : probes) {
        double best = 1e300;
        for (const auto& e : entities) best = std::min(best, dist2(p, e));
        acc += std::sqrt(best);
    }
    return acc / double(probes.size());
}

// Pearson correlation between per-tick event counts and a driver intensity,
// computed over each complete cycle and averaged across cycles. Cycles where
// either series is flat are skipped; if every cycle is flat the result is
// undefined.
inline std::optional<double> front_coherence(std::span<const double> counts,
                                             std::span<const double> driver, size_t cycle_ticks) {
    if (counts.size() != driver.size())
        throw std::invalid_argument("front_coherence: length mismatch");
    if (cycle_ticks < 2 || counts.size() < cycle_ticks) return std::nullopt;
    size_t n_cycles = counts.size() / cycle_ticks;
    double acc = 0.0;
    size_t used = 0;
    for (size_t c = 0; c < n_cycles; ++c) {
        size_t off = c * cycle_ticks;
        double mx = 0, my = 0;
        for (size_t t = 0; t < cycle_ticks; ++t) {
            mx += counts[off + t];
            my += driver[off + t];
        }
        mx /= double(cycle_ticks);
        my /= double(cycle_ticks);
        double sxx = 0, syy = 0, sxy = 0;
        for (size_t t = 0; t < cycle_ticks; ++t) {
            double a = counts[off + t] - mx, b = driver[off + t] - my;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
        }
        if (sxx <= 1e-300 || syy <= 1e-300) continue;
        acc += sxy / std::sqrt(sxx * syy);
        ++used;
    }
    if (!used) return std::nullopt;
    return acc / double(used);
}

}  // namespace fieldsim
