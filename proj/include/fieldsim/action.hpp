#pragma once
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fieldsim/geom.hpp"
#include "fieldsim/metrics.hpp"
#include "fieldsim/noise.hpp"
#include "fieldsim/rng.hpp"

// Direction II-A: per-agent start events each tick. A drifting Perlin field
// drives hazard rates, cycle phases, or a convex hybrid; seven baseline
// schedulers run under matched mean rates. Agents wander slowly so spatial
// metrics stay meaningful.

namespace fieldsim {

enum class ActionMethod {
    perlin_hazard,
    perlin_phase,
    perlin_hybrid,
    poisson,
    filtered,
    fixed,
    token,
    roundrobin,
    sinusoid,
    hawkes
};

inline ActionMethod parse_action_method(std::string_view s) {
    if (s == "hazard" || s == "perlin" || s == "perlin_hazard") return ActionMethod::perlin_hazard;
    if (s == "phase" || s == "perlin_phase") return ActionMethod::perlin_phase;
    if (s == "hybrid" || s == "perlin_hybrid") return ActionMethod::perlin_hybrid;
    if (s == "poisson") return ActionMethod::poisson;
    if (s == "filtered") return ActionMethod::filtered;
    if (s == "fixed") return ActionMethod::fixed;
    if (s == "token") return ActionMethod::token;
    if (s == "roundrobin") return ActionMethod::roundrobin;
    if (s == "sinusoid") return ActionMethod::sinusoid;
    if (s == "hawkes") return ActionMethod::hawkes;
    throw std::invalid_argument("unknown action method: " + std::string(s));
}

inline const char* action_method_name(ActionMethod m) {
    switch (m) {
        case ActionMethod::perlin_hazard: return "perlin_hazard";
        case ActionMethod::perlin_phase: return "perlin_phase";
        case ActionMethod::perlin_hybrid: return "perlin_hybrid";
        case ActionMethod::poisson: return "poisson";
        case ActionMethod::filtered: return "filtered";
        case ActionMethod::fixed: return "fixed";
        case ActionMethod::token: return "token";
        case ActionMethod::roundrobin: return "roundrobin";
        case ActionMethod::sinusoid: return "sinusoid";
        case ActionMethod::hawkes: return "hawkes";
    }
    return "?";
}

struct SchedulerConfig {
    double world_side = 1000.0;
    int agents = 2000;
    int horizon = 1800;
    int warmup = 60;
    double dt = 1.0;

    // neutral wander so positions evolve
    double motion_sigma_theta = 0.2;
    double motion_speed = 0.5;

    // shared field
    double freq = 0.01;
    int octaves = 4;
    double persistence = 0.5, lacunarity = 2.0;
    double drift_speed = 0.002;

    // hazard driver
    double lambda0 = 0.028;  // events/tick
    double eps = 0.1;
    double alpha_ema = 0.5;  // smoothing weight on the previous value
    bool rate_matching = true;

    // phase driver
    int cycle_ticks = 60;
    double kernel_bandwidth = 8.0;
    int phase_jitter = 1;
    double hybrid_alpha = 0.5;

    int duration = 8;  // fixed action length for every method

    // baselines
    double filtered_radius = 20.0;
    int filtered_cap = 2;
    int filtered_window = 2;
    double fixed_period_mean = 8.0, fixed_period_std = 2.0;
    int fixed_jitter = 1;
    int token_capacity = 3;
    int max_wait = 8;
    int rr_slots = 12;
    int rr_rotation = 30;
    int rr_groups = 8;
    double sin_amp = 0.3;
    double sin_period = 120.0;
    double hawkes_radius = 20.0;
    int hawkes_window = 3;
    double hawkes_tau = 3.0;
    double hawkes_alpha_factor = -0.5;  // inhibition strength relative to mu

    // metrics
    int region_grid = 8;
    int coverage_grid = 50;
    int coverage_window = 60;
    int fano_window = 60;

    double lambda_target() const { return lambda0 * (eps + 0.5 * (1.0 - eps)); }

    static SchedulerConfig scale(std::string_view name) {
        SchedulerConfig c;
        if (name == "small") {
            c.agents = 800;
            c.world_side = 600;
            c.horizon = 1200;
        } else if (name == "medium") {
            c.agents = 2000;
            c.world_side = 1000;
            c.horizon = 1800;
        } else if (name == "large") {
            c.agents = 8000;
            c.world_side = 2000;
            c.horizon = 3600;
        } else {
            throw std::invalid_argument("unknown action scale: " + std::string(name));
        }
        return c;
    }
};

// Stationary duty of a rate-matched renewal: idle ticks are geometric with
// p = 1-exp(-lambda_target), actions last `duration` ticks.
inline double expected_duty(double lambda_target, int duration) {
    double p = 1.0 - std::exp(-lambda_target);
    return duration * p / (duration * p + (1.0 - p));
}

struct HazardTick {
    std::vector<double> prob;
    std::vector<double> lambda_smoothed;  // pre-normalization, feeds the next tick
    double gamma = 1.0;
    bool degenerate = false;  // all-zero mean; probabilities forced to 0
};

// One hazard update: raw rates from field values, exponential smoothing
// against the previous smoothed rates, then global mean-normalization toward
// lambda_target.
inline HazardTick hazard_tick(std::span<const double> u, const SchedulerConfig& cfg,
                              std::span<const double> prev_lambda) {
    const size_t n = u.size();
    HazardTick out;
    out.prob.resize(n);
    out.lambda_smoothed.resize(n);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double raw = cfg.lambda0 * (cfg.eps + (1.0 - cfg.eps) * u[i]);
        double sm = prev_lambda.empty()
                        ? raw
                        : cfg.alpha_ema * prev_lambda[i] + (1.0 - cfg.alpha_ema) * raw;
        out.lambda_smoothed[i] = sm;
        mean += sm;
    }
    mean /= double(n ? n : 1);
    if (mean <= 0.0) {
        out.degenerate = true;
        out.gamma = 0.0;
        return out;  // probabilities stay 0
    }
    out.gamma = cfg.rate_matching ? cfg.lambda_target() / mean : 1.0;
    for (size_t i = 0; i < n; ++i)
        out.prob[i] = 1.0 - std::exp(-out.gamma * out.lambda_smoothed[i] * cfg.dt);
    return out;
}

// Intensity of the phase driver at cycle tick t for an agent with phase tau.
inline double phase_intensity(int t, int tau, const SchedulerConfig& cfg) {
    int d = cycle_dist(t % cfg.cycle_ticks, tau, cfg.cycle_ticks);
    return cfg.lambda0 * (cfg.eps + (1.0 - cfg.eps) * phase_kernel(double(d), cfg.kernel_bandwidth));
}

// Convex mixture of the two drivers.
inline double hybrid_rate(double hazard_rate, double phase_rate, double alpha) {
    return (1.0 - alpha) * hazard_rate + alpha * phase_rate;
}

struct EventLog {
    std::vector<std::vector<int>> starts_by_agent;
    std::vector<double> merged_times;            // sorted start ticks, all agents
    std::vector<Vec2> event_positions;           // parallel to merged_times
    std::vector<int> active_count;               // per tick 1..T
    std::vector<std::vector<int>> region_counts; // starts per region per tick
    int duration = 8;
    int horizon = 0;

    // Active counts must be recomputable from the start ticks.
    bool consistent() const {
        std::vector<int> recomputed(active_count.size(), 0);
        for (const auto& starts : starts_by_agent)
            for (int s : starts)
                for (int t = s; t < s + duration && t <= horizon; ++t)
                    if (t >= 1) recomputed[size_t(t - 1)]++;
        return recomputed == active_count;
    }
};

struct ActionSummary {
    double duty = 0.0;
    EventStats events;
    std::optional<double> hf_lf;
    std::optional<double> second_diff_energy;
    double regional_cv = 0.0;
    std::optional<double> morans_i;
    double coverage_mean = 0.0;
    std::optional<double> front_coherence;  // phase/hybrid only
    PointProcessStats window_pp;            // start positions, trailing window
    double runtime_ns_mean = 0.0, runtime_ns_p95 = 0.0;
    double decisions_per_second = 0.0;  // hardware-dependent
    double noise_samples_per_tick = 0.0;
    bool hazard_degenerate_seen = false;
};

struct ActionRunResult {
    SchedulerConfig config;
    ActionMethod method = ActionMethod::perlin_hazard;
    uint64_t seed = 0;
    EventLog log;
    std::vector<double> runtime_ns;
    std::vector<double> driver;  // per-tick predicted intensity (phase/hybrid)
    ActionSummary summary;
};

inline ActionRunResult run_action(const SchedulerConfig& cfg, ActionMethod method, uint64_t seed) {
    if (cfg.agents <= 0 || cfg.horizon <= 0)
        throw std::invalid_argument("run_action: agents and horizon must be positive");
    const int N = cfg.agents;
    const int T = cfg.horizon;
    const double L = cfg.world_side;
    const int D = cfg.duration;
    const double lamT = cfg.lambda_target();
    const double p_matched = 1.0 - std::exp(-lamT * cfg.dt);

    ActionRunResult res;
    res.config = cfg;
    res.method = method;
    res.seed = seed;

    Rng init_rng(derive_substream(seed, "init"));
    Rng motion_rng(derive_substream(seed, "motion"));
    Rng decision_rng(derive_substream(seed, "decision"));

    std::vector<Vec2> pos(N);
    std::vector<double> heading(N);
    for (int i = 0; i < N; ++i) {
        pos[i] = {init_rng.uniform(0, L), init_rng.uniform(0, L)};
        heading[i] = init_rng.uniform(0, kTwoPi);
    }

    const bool needs_field = method == ActionMethod::perlin_hazard ||
                             method == ActionMethod::perlin_phase ||
                             method == ActionMethod::perlin_hybrid;
    std::optional<FieldSampler> field;
    long long noise_samples = 0;
    if (needs_field) {
        NoiseSpec spec(cfg.freq, cfg.octaves, cfg.persistence, cfg.lacunarity,
                       derive_substream(seed, "field"));
        field.emplace(spec, TemporalMode::drift, cfg.drift_speed, BoundaryMode::toroidal, L);
    }

    auto& log = res.log;
    log.duration = D;
    log.horizon = T;
    log.starts_by_agent.assign(N, {});
    log.active_count.assign(T, 0);
    const int RG = cfg.region_grid;
    log.region_counts.assign(T, std::vector<int>(RG * RG, 0));

    std::vector<int> active_until(N, 0);  // active while t < active_until
    std::vector<double> prev_lambda;      // hazard smoothing state
    std::vector<double> u(N);
    std::vector<int> tau(N, 0);  // phase assignments, redrawn each cycle

    // fixed baseline state
    std::vector<long long> next_start(N, 0);
    if (method == ActionMethod::fixed)
        for (int i = 0; i < N; ++i)
            next_start[i] = 1 + (long long)decision_rng.next_below(
                                    uint64_t(std::max(1.0, cfg.fixed_period_mean)));

    // recent events ring for filtered / hawkes neighborhoods
    struct RecentEvent {
        int tick;
        Vec2 pos;
    };
    std::deque<RecentEvent> recent;
    int recent_window = method == ActionMethod::filtered  ? cfg.filtered_window
                        : method == ActionMethod::hawkes ? cfg.hawkes_window
                                                          : 0;

    // token / roundrobin state
    const int cells = RG * RG;
    std::vector<int> tokens_in_use(cells, 0);
    std::vector<std::vector<std::pair<int, int>>> token_release;  // per tick: (cell, count)
    if (method == ActionMethod::token) token_release.assign(T + D + 2, {});
    struct Waiter {
        int agent;
        int since;
    };
    std::vector<std::deque<Waiter>> queues(cells);
    std::vector<uint8_t> queued(N, 0);
    std::vector<int> rr_active(cells, 0);
    std::vector<std::vector<std::pair<int, int>>> rr_release;  // (cell, count)
    if (method == ActionMethod::roundrobin) rr_release.assign(T + D + 2, {});

    auto region_of = [&](Vec2 p) {
        int rx = std::min(RG - 1, int(p.x / L * RG));
        int ry = std::min(RG - 1, int(p.y / L * RG));
        return ry * RG + rx;
    };

    // coverage bookkeeping on start events
    const int gw = cfg.coverage_grid;
    std::vector<int> last_visit(size_t(gw) * gw, std::numeric_limits<int>::min());
    double coverage_acc = 0.0;
    long long coverage_ticks = 0;

    std::vector<std::pair<int, int>> window_events;  // (tick, merged index), trailing Ripley window

    if (method == ActionMethod::perlin_phase || method == ActionMethod::perlin_hybrid)
        res.driver.assign(T, 0.0);

    for (int t = 1; t <= T; ++t) {
        auto t_start = std::chrono::steady_clock::now();

        // neutral wander
        for (int i = 0; i < N; ++i) {
            heading[i] = wrap_angle(heading[i] + cfg.motion_sigma_theta * motion_rng.next_normal());
            pos[i].x = wrap_coord(pos[i].x + cfg.motion_speed * std::cos(heading[i]), L);
            pos[i].y = wrap_coord(pos[i].y + cfg.motion_speed * std::sin(heading[i]), L);
        }

        // per-agent start decisions; claims the agent so a tick can never
        // start it twice
        std::vector<int> starters;
        auto try_start = [&](int i) {
            if (t < active_until[i]) return;
            active_until[i] = t + D;
            starters.push_back(i);
        };

        switch (method) {
            case ActionMethod::perlin_hazard:
            case ActionMethod::perlin_hybrid:
            case ActionMethod::perlin_phase: {
                if (method != ActionMethod::perlin_hazard && (t - 1) % cfg.cycle_ticks == 0) {
                    for (int i = 0; i < N; ++i) {
                        double ui = field->sample01(pos[i].x, pos[i].y);
                        ++noise_samples;
                        int j = cfg.phase_jitter
                                    ? decision_rng.uniform_int(-cfg.phase_jitter, cfg.phase_jitter)
                                    : 0;
                        tau[i] = ((phase_map(ui, cfg.cycle_ticks) + j) % cfg.cycle_ticks +
                                  cfg.cycle_ticks) %
                                 cfg.cycle_ticks;
                    }
                }
                HazardTick hz;
                if (method != ActionMethod::perlin_phase) {
                    for (int i = 0; i < N; ++i) u[i] = field->sample01(pos[i].x, pos[i].y);
                    noise_samples += N;
                    hz = hazard_tick(u, cfg, prev_lambda);
                    prev_lambda = hz.lambda_smoothed;
                    if (hz.degenerate) res.summary.hazard_degenerate_seen = true;
                }
                double driver_acc = 0.0;
                for (int i = 0; i < N; ++i) {
                    double rate_or_p;
                    if (method == ActionMethod::perlin_hazard) {
                        rate_or_p = hz.prob[i];
                    } else {
                        double intensity = phase_intensity(t, tau[i], cfg);
                        driver_acc += intensity;
                        double lam = method == ActionMethod::perlin_phase
                                         ? intensity
                                         : hybrid_rate(hz.gamma * hz.lambda_smoothed[i], intensity,
                                                       cfg.hybrid_alpha);
                        rate_or_p = 1.0 - std::exp(-lam * cfg.dt);
                    }
                    bool draw = decision_rng.next_double() < rate_or_p;
                    if (draw && t >= active_until[i]) try_start(i);
                }
                if (!res.driver.empty()) res.driver[size_t(t - 1)] = driver_acc / N;
                break;
            }
            case ActionMethod::poisson: {
                for (int i = 0; i < N; ++i) {
                    bool draw = decision_rng.next_double() < p_matched;
                    if (draw && t >= active_until[i]) try_start(i);
                }
                break;
            }
            case ActionMethod::sinusoid: {
                double lam = lamT * (1.0 + cfg.sin_amp * std::sin(kTwoPi * t / cfg.sin_period));
                double p = 1.0 - std::exp(-std::max(0.0, lam) * cfg.dt);
                for (int i = 0; i < N; ++i) {
                    bool draw = decision_rng.next_double() < p;
                    if (draw && t >= active_until[i]) try_start(i);
                }
                break;
            }
            case ActionMethod::filtered: {
                const double R2 = cfg.filtered_radius * cfg.filtered_radius;
                for (int i = 0; i < N; ++i) {
                    bool draw = decision_rng.next_double() < p_matched;
                    if (!draw || t < active_until[i]) continue;
                    int nearby = 0;
                    for (const auto& ev : recent)
                        if (torus_dist2(ev.pos, pos[i], L) <= R2) ++nearby;
                    if (nearby < cfg.filtered_cap) try_start(i);
                }
                break;
            }
            case ActionMethod::fixed: {
                for (int i = 0; i < N; ++i) {
                    if (t < active_until[i] || t < next_start[i]) continue;
                    try_start(i);
                    double period =
                        cfg.fixed_period_mean + cfg.fixed_period_std * decision_rng.next_normal();
                    long long step = std::max<long long>(1, (long long)std::llround(period));
                    long long jitter =
                        cfg.fixed_jitter
                            ? decision_rng.uniform_int(-cfg.fixed_jitter, cfg.fixed_jitter)
                            : 0;
                    next_start[i] = t + std::max<long long>(1, step + jitter);
                }
                break;
            }
            case ActionMethod::token: {
                for (auto [cell, cnt] : token_release[size_t(t)]) tokens_in_use[cell] -= cnt;
                // serve queues first, oldest waiters first
                for (int c = 0; c < cells; ++c) {
                    auto& q = queues[c];
                    while (!q.empty()) {
                        bool forced = t - q.front().since >= cfg.max_wait;
                        bool has_token = tokens_in_use[c] < cfg.token_capacity;
                        if (!forced && !has_token) break;
                        int agent = q.front().agent;
                        q.pop_front();
                        queued[agent] = 0;
                        if (t >= active_until[agent]) {
                            try_start(agent);
                            if (has_token) {
                                tokens_in_use[c]++;
                                token_release[size_t(std::min(t + D, T + D + 1))].push_back({c, 1});
                            }
                        }
                    }
                }
                for (int i = 0; i < N; ++i) {
                    if (queued[i]) continue;
                    bool draw = decision_rng.next_double() < p_matched;
                    if (!draw || t < active_until[i]) continue;
                    int c = region_of(pos[i]);
                    if (tokens_in_use[c] < cfg.token_capacity) {
                        tokens_in_use[c]++;
                        token_release[size_t(std::min(t + D, T + D + 1))].push_back({c, 1});
                        try_start(i);
                    } else {
                        queues[c].push_back({i, t});
                        queued[i] = 1;
                    }
                }
                break;
            }
            case ActionMethod::roundrobin: {
                for (auto [cell, cnt] : rr_release[size_t(t)]) rr_active[cell] -= cnt;
                auto open = [&](int c) {
                    return (t / cfg.rr_rotation) % cfg.rr_groups == c % cfg.rr_groups;
                };
                for (int c = 0; c < cells; ++c) {
                    auto& q = queues[c];
                    while (!q.empty()) {
                        bool forced = t - q.front().since >= cfg.max_wait;
                        bool granted = open(c) && rr_active[c] < cfg.rr_slots;
                        if (!forced && !granted) break;
                        int agent = q.front().agent;
                        q.pop_front();
                        queued[agent] = 0;
                        if (t >= active_until[agent]) {
                            try_start(agent);
                            if (granted) {
                                rr_active[c]++;
                                rr_release[size_t(std::min(t + D, T + D + 1))].push_back({c, 1});
                            }
                        }
                    }
                }
                for (int i = 0; i < N; ++i) {
                    if (queued[i]) continue;
                    bool draw = decision_rng.next_double() < p_matched;
                    if (!draw || t < active_until[i]) continue;
                    int c = region_of(pos[i]);
                    if (open(c) && rr_active[c] < cfg.rr_slots) {
                        rr_active[c]++;
                        rr_release[size_t(std::min(t + D, T + D + 1))].push_back({c, 1});
                        try_start(i);
                    } else {
                        queues[c].push_back({i, t});
                        queued[i] = 1;
                    }
                }
                break;
            }
            case ActionMethod::hawkes: {
                const double R2 = cfg.hawkes_radius * cfg.hawkes_radius;
                const double mu = lamT;
                const double alpha = cfg.hawkes_alpha_factor * mu;
                std::vector<double>& lam = u;  // reuse the scratch buffer
                double mean = 0.0;
                for (int i = 0; i < N; ++i) {
                    double s = 0.0;
                    for (const auto& ev : recent)
                        if (torus_dist2(ev.pos, pos[i], L) <= R2)
                            s += std::exp(-double(t - ev.tick) / cfg.hawkes_tau);
                    lam[i] = std::max(0.0, mu + alpha * s);
                    mean += lam[i];
                }
                mean /= N;
                double gamma = cfg.rate_matching && mean > 0 ? lamT / mean : 1.0;
                for (int i = 0; i < N; ++i) {
                    double p = 1.0 - std::exp(-gamma * lam[i] * cfg.dt);
                    bool draw = decision_rng.next_double() < p;
                    if (draw && t >= active_until[i]) try_start(i);
                }
                break;
            }
        }

        for (int i : starters) {
            log.starts_by_agent[i].push_back(t);
            log.merged_times.push_back(double(t));
            log.event_positions.push_back(pos[i]);
            log.region_counts[size_t(t - 1)][size_t(region_of(pos[i]))]++;
            if (recent_window) recent.push_back({t, pos[i]});
        }
        while (!recent.empty() && recent.front().tick <= t - recent_window) recent.pop_front();

        int active = 0;
        for (int i = 0; i < N; ++i)
            if (t < active_until[i]) ++active;
        log.active_count[size_t(t - 1)] = active;

        if (field) field->advance(1);

        auto t_end = std::chrono::steady_clock::now();
        res.runtime_ns.push_back(
            double(std::chrono::duration_cast<std::chrono::nanoseconds>(t_end - t_start).count()));

        // untimed: coverage over start events
        for (int i : starters) {
            int ix = std::clamp(int(pos[i].x / L * gw), 0, gw - 1);
            int iy = std::clamp(int(pos[i].y / L * gw), 0, gw - 1);
            last_visit[size_t(iy) * gw + ix] = t;
        }
        if (t >= cfg.warmup) {
            long long covered = 0;
            for (int c = 0; c < gw * gw; ++c)
                if (t - last_visit[c] < cfg.coverage_window) ++covered;
            coverage_acc += double(covered) / double(gw * gw);
            ++coverage_ticks;
        }
    }

    // ---- summary, post-warmup ----
    auto& sm = res.summary;
    double duty_acc = 0.0;
    long long duty_n = 0;
    for (int t = cfg.warmup; t <= T; ++t) {
        duty_acc += double(log.active_count[size_t(t - 1)]) / N;
        ++duty_n;
    }
    sm.duty = duty_n ? duty_acc / double(duty_n) : 0.0;

    std::vector<double> post_events;
    for (double tt : log.merged_times)
        if (tt >= cfg.warmup) post_events.push_back(tt);
    sm.events = event_stats(post_events, cfg.warmup, T + 1, cfg.fano_window);
    sm.events.duty = sm.duty;

    std::vector<double> active_series;
    for (int t = cfg.warmup; t <= T; ++t)
        active_series.push_back(double(log.active_count[size_t(t - 1)]));
    sm.hf_lf = hf_lf_ratio(active_series).hf_lf;
    sm.second_diff_energy = second_difference_energy(active_series);

    std::vector<double> region_total(size_t(RG) * RG, 0.0);
    for (int t = cfg.warmup; t <= T; ++t)
        for (int c = 0; c < RG * RG; ++c)
            region_total[size_t(c)] += log.region_counts[size_t(t - 1)][size_t(c)];
    auto bal = spatial_balance(region_total, RG, RG);
    sm.regional_cv = bal.regional_cv;
    sm.morans_i = bal.morans_i;

    sm.coverage_mean = coverage_ticks ? coverage_acc / double(coverage_ticks) : 0.0;

    if (!res.driver.empty()) {
        std::vector<double> counts(T, 0.0);
        for (double tt : log.merged_times) counts[size_t(tt) - 1] += 1.0;
        std::vector<double> counts_pw(counts.begin() + cfg.warmup, counts.end());
        std::vector<double> driver_pw(res.driver.begin() + cfg.warmup, res.driver.end());
        sm.front_coherence = front_coherence(counts_pw, driver_pw, size_t(cfg.cycle_ticks));
    }

    // second-order summary on the trailing coverage window of start positions
    std::vector<Vec2> tail;
    for (size_t e = 0; e < log.merged_times.size(); ++e)
        if (log.merged_times[e] > T - cfg.coverage_window) tail.push_back(log.event_positions[e]);
    std::vector<double> radii{L * 0.01, L * 0.02, L * 0.04};
    sm.window_pp = point_process_stats(tail, radii, L, true);

    double rt = 0;
    for (double r : res.runtime_ns) rt += r;
    sm.runtime_ns_mean = res.runtime_ns.empty() ? 0 : rt / double(res.runtime_ns.size());
    sm.runtime_ns_p95 = res.runtime_ns.empty() ? 0 : percentile(res.runtime_ns, 0.95);
    sm.decisions_per_second = rt > 0 ? double(N) * T / (rt * 1e-9) : 0.0;
    sm.noise_samples_per_tick = double(noise_samples) / T;
    return res;
}

}  // namespace fieldsim
