#pragma once
#include <algorithm>
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

// Direction II-B: a bounded world where spawn policies propose sites each
// tick, a replenishment controller enforces target population, per-cycle
// quotas and cooldowns, monsters wander, and scripted players eliminate
// entities within a kill radius.

namespace fieldsim {

enum class SpawnPolicyKind {
    perlin_a,
    perlin_b,
    uniform,
    filtered,
    poisson_disk,
    mvn_poisson,
    facility,
    sinusoid
};

inline SpawnPolicyKind parse_spawn_policy(std::string_view s) {
    if (s == "perlin_a") return SpawnPolicyKind::perlin_a;
    if (s == "perlin_b") return SpawnPolicyKind::perlin_b;
    if (s == "uniform") return SpawnPolicyKind::uniform;
    if (s == "filtered") return SpawnPolicyKind::filtered;
    if (s == "poisson_disk") return SpawnPolicyKind::poisson_disk;
    if (s == "mvn_poisson") return SpawnPolicyKind::mvn_poisson;
    if (s == "facility") return SpawnPolicyKind::facility;
    if (s == "sinusoid") return SpawnPolicyKind::sinusoid;
    throw std::invalid_argument("unknown spawn policy: " + std::string(s));
}

inline const char* spawn_policy_name(SpawnPolicyKind k) {
    switch (k) {
        case SpawnPolicyKind::perlin_a: return "perlin_a";
        case SpawnPolicyKind::perlin_b: return "perlin_b";
        case SpawnPolicyKind::uniform: return "uniform";
        case SpawnPolicyKind::filtered: return "filtered";
        case SpawnPolicyKind::poisson_disk: return "poisson_disk";
        case SpawnPolicyKind::mvn_poisson: return "mvn_poisson";
        case SpawnPolicyKind::facility: return "facility";
        case SpawnPolicyKind::sinusoid: return "sinusoid";
    }
    return "?";
}

struct SpawnWorldConfig {
    double side = 120.0;
    int horizon = 3600;
    int cycle_ticks = 600;
    int target_pop = 128;
    int cycle_quota = 96;
    int cooldown_budget = 96;   // credit releases allowed per cycle
    int players = 8;
    int coverage_samples = 2048;
    int warmup = 600;
    int snapshot_period = 120;
    std::vector<double> pp_radii{5, 10, 20};
    int event_window = 60;

    // monsters
    double monster_speed = 1.5, monster_persistence = 0.85;
    double monster_turn_noise = 0.5, monster_jitter = 0.1;
    // players; respawn_delay matures elimination credits, and by default also
    // rests the killing player (strike-and-withdraw reading; switchable)
    double player_speed = 2.4, kill_radius = 1.75;
    int respawn_delay = 90;
    bool player_rest = true;

    // perlin-a
    int a_candidates = 256;       // 16x16 strata
    int a_cycle_sites = 128;
    double a_freq = 0.06;
    int a_octaves = 3;
    double a_persistence = 0.55, a_lacunarity = 2.0;
    double a_thinning_eps = 0.1;

    // perlin-b
    double b_band_eps = 0.05;
    int b_grid = 64;              // iso-band evaluation grid per cycle
    double b_spacing = 0.0;       // 0 -> cycle_ticks / 20
    double b_jitter = 5.0;
    double b_min_sep = 8.0;
    bool b_farthest = false;      // random selection by default
    double b_count_mean = 3.0;
    int b_count_min = 1, b_count_max = 6;

    // baselines
    double filtered_safety = 8.0, filtered_spacing = 4.0;
    double pds_radius = 8.0;
    int mvn_components = 4;
    double mvn_sigma_frac = 0.125;  // component sd as a fraction of side
    int facility_grid = 32;
    int facility_throttle = 4;     // propose once every this many ticks
    double sin_amp = 0.3;

    void validate() const {
        if (cycle_quota > target_pop * 2)
            throw std::invalid_argument("SpawnWorldConfig: cycle_quota exceeds 2x target_pop");
        if (monster_speed < 0 || player_speed < 0)
            throw std::invalid_argument("SpawnWorldConfig: speeds must be >= 0");
        if (horizon <= 0 || cycle_ticks <= 0)
            throw std::invalid_argument("SpawnWorldConfig: horizon and cycle must be positive");
    }

    static SpawnWorldConfig scale(std::string_view name) {
        SpawnWorldConfig c;
        if (name == "small") {
            c.horizon = 2400;
            c.side = 90;
            c.target_pop = 80;
            c.cycle_quota = 48;
            c.cooldown_budget = 48;
            c.players = 6;
            c.coverage_samples = 1024;
        } else if (name == "medium") {
            c.horizon = 3600;
            c.side = 120;
            c.target_pop = 128;
            c.cycle_quota = 96;
            c.cooldown_budget = 96;
            c.players = 8;
            c.coverage_samples = 2048;
        } else if (name == "large") {
            c.horizon = 7200;
            c.side = 240;
            c.target_pop = 256;
            c.cycle_quota = 192;
            c.cooldown_budget = 192;
            c.players = 12;
            c.coverage_samples = 4096;
            c.snapshot_period = 120;
            c.pp_radii = {5, 10, 20};
            c.event_window = 180;
        } else {
            throw std::invalid_argument("unknown spawn scale: " + std::string(name));
        }
        return c;
    }
};

// Poisson count via inversion; deterministic given the stream state.
inline int poisson_draw(Rng& rng, double lambda, int cap = 1 << 20) {
    double L = std::exp(-std::max(0.0, lambda));
    double acc = rng.next_double(), p = L;
    int n = 0;
    while (acc > p && n < cap) {
        ++n;
        L *= lambda / n;
        p += L;
    }
    return n;
}

struct IsoBand {
    std::vector<size_t> members;  // indices into the grid
    double eps_used = 0.0;
    bool widened = false;
    bool skipped = false;  // still empty after one widening
};

// Level set {i : |u_i - level| <= eps}; an empty band widens eps once (x2)
// and is skipped if still empty.
inline IsoBand iso_band(std::span<const double> grid_u, double level, double eps) {
    IsoBand out;
    out.eps_used = eps;
    for (int attempt = 0; attempt < 2; ++attempt) {
        for (size_t i = 0; i < grid_u.size(); ++i)
            if (std::abs(grid_u[i] - level) <= out.eps_used) out.members.push_back(i);
        if (!out.members.empty()) return out;
        out.eps_used *= 2.0;
        out.widened = true;
    }
    out.skipped = true;
    return out;
}

// Greedy farthest-point pick: the candidate maximizing its minimum distance
// to the existing set. Ties resolved by index order.
inline size_t farthest_point_index(std::span<const Vec2> candidates,
                                   std::span<const Vec2> existing) {
    if (candidates.empty()) throw std::invalid_argument("farthest_point_index: no candidates");
    size_t best = 0;
    double best_d = -1.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        double mind = 1e300;
        for (const auto& q : existing) mind = std::min(mind, dist2(candidates[i], q));
        if (mind > best_d) {
            best_d = mind;
            best = i;
        }
    }
    return best;
}

// Bridson-style blue-noise batch over [0,side]^2; standard 30-attempt bound.
inline std::vector<Vec2> poisson_disk_batch(double side, double r, Rng& rng, int k_attempts = 30) {
    const double cell = r / std::sqrt(2.0);
    const int gn = std::max(1, int(std::ceil(side / cell)));
    std::vector<int> grid(size_t(gn) * gn, -1);
    std::vector<Vec2> pts;
    std::vector<size_t> active;
    auto grid_at = [&](Vec2 p) {
        int gx = std::min(gn - 1, int(p.x / cell));
        int gy = std::min(gn - 1, int(p.y / cell));
        return size_t(gy) * gn + gx;
    };
    auto ok = [&](Vec2 p) {
        int gx = std::min(gn - 1, int(p.x / cell));
        int gy = std::min(gn - 1, int(p.y / cell));
        for (int oy = -2; oy <= 2; ++oy)
            for (int ox = -2; ox <= 2; ++ox) {
                int cx = gx + ox, cy = gy + oy;
                if (cx < 0 || cy < 0 || cx >= gn || cy >= gn) continue;
                int idx = grid[size_t(cy) * gn + cx];
                if (idx >= 0 && dist2(pts[size_t(idx)], p) < r * r) return false;
            }
        return true;
    };
    Vec2 first{rng.uniform(0, side), rng.uniform(0, side)};
    pts.push_back(first);
    grid[grid_at(first)] = 0;
    active.push_back(0);
    while (!active.empty()) {
        size_t pick = size_t(rng.next_below(active.size()));
        Vec2 base = pts[active[pick]];
        bool placed = false;
        for (int a = 0; a < k_attempts && !placed; ++a) {
            double ang = rng.uniform(0, kTwoPi);
            double rad = r * (1.0 + rng.next_double());
            Vec2 p{base.x + rad * std::cos(ang), base.y + rad * std::sin(ang)};
            if (p.x < 0 || p.y < 0 || p.x >= side || p.y >= side) continue;
            if (!ok(p)) continue;
            grid[grid_at(p)] = int(pts.size());
            pts.push_back(p);
            active.push_back(pts.size() - 1);
            placed = true;
        }
        if (!placed) {
            active[pick] = active.back();
            active.pop_back();
        }
    }
    return pts;
}

struct SpawnEvent {
    int tick;
    Vec2 pos;
};

struct SpawnSummary {
    std::optional<double> front_coherence;
    EventStats spawn_events;
    double load_variance = 0.0;      // variance of per-tick admitted counts
    double coverage_distance = 0.0;  // mean over snapshots
    double regional_cv = 0.0;
    std::optional<double> morans_i;
    PointProcessStats final_pp;      // live entities at the end
    double mean_nn = 0.0;
    double spawns_per_cycle = 0.0, elims_per_cycle = 0.0;
    double live_mean = 0.0;
    double band_occupancy = 0.0;     // fraction of post-warmup ticks inside the live band
    long long proposals_dropped = 0;
    long long shortfall_ticks = 0;   // iso-band evaluations skipped after widening
    double runtime_ns_mean = 0.0, runtime_ns_p95 = 0.0;
    long long violations = 0;        // quota/bounds/cooldown breaches observed
};

struct SpawnSnapshot {
    int tick = 0;
    std::vector<Vec2> entities;
};

struct SpawnRunResult {
    SpawnWorldConfig config;
    SpawnPolicyKind policy = SpawnPolicyKind::perlin_a;
    uint64_t seed = 0;
    std::vector<SpawnEvent> spawns;
    std::vector<SpawnEvent> eliminations;
    std::vector<int> live_count;        // per tick
    std::vector<int> admitted_per_tick;
    std::vector<int> proposals_per_tick;
    std::vector<double> driver;         // band occupancy of the time-to-level map
    std::vector<SpawnSnapshot> snapshots;
    std::vector<Vec2> final_entities;
    std::vector<double> runtime_ns;
    SpawnSummary summary;
};

namespace detail {

struct Mover {
    Vec2 pos;
    double heading;
};

// Persistent-heading random walk with reflective bounds.
inline void step_mover(Mover& m, double speed, double persistence, double turn_noise,
                       double jitter, double side, Rng& rng) {
    m.heading = wrap_angle(m.heading + (1.0 - persistence) * turn_noise * rng.next_normal());
    double nx = m.pos.x + speed * std::cos(m.heading) + jitter * rng.next_normal();
    double ny = m.pos.y + speed * std::sin(m.heading) + jitter * rng.next_normal();
    if (nx < 0 || nx > side) {
        m.heading = wrap_angle(kPi - m.heading);
        nx = std::clamp(nx < 0 ? -nx : 2 * side - nx, 0.0, side);
    }
    if (ny < 0 || ny > side) {
        m.heading = wrap_angle(-m.heading);
        ny = std::clamp(ny < 0 ? -ny : 2 * side - ny, 0.0, side);
    }
    m.pos = {nx, ny};
}

// Occupancy of the cycle-indexed time-to-level map: the fraction of the
// world's field values within the band around the level the cycle clock
// points at. The common front-coherence reference for field-based policies.
inline void level_map_driver(std::span<const double> grid_u, int cycle_ticks, double band_eps,
                             long long base_tick, int horizon, std::vector<double>& out) {
    for (int ct = 0; ct < cycle_ticks && base_tick + ct < horizon; ++ct) {
        double level = double(ct) / double(cycle_ticks);
        int n_in = 0;
        for (double u : grid_u)
            if (std::abs(u - level) <= band_eps) ++n_in;
        out[size_t(base_tick + ct)] =
            double(n_in) / double(grid_u.empty() ? 1 : grid_u.size());
    }
}

// Unit field values over a regular grid of cell centers.
inline std::vector<double> world_grid_values(const FieldSampler& field, int grid_n, double side) {
    std::vector<double> u;
    u.reserve(size_t(grid_n) * grid_n);
    for (int gy = 0; gy < grid_n; ++gy)
        for (int gx = 0; gx < grid_n; ++gx)
            u.push_back(to_unit(field.sample((gx + 0.5) * side / grid_n,
                                             (gy + 0.5) * side / grid_n)));
    return u;
}

// Min-max rescale to [0,1]; flat inputs collapse to 0.5.
inline void minmax_rescale(std::vector<double>& v) {
    double lo = 1e300, hi = -1e300;
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo < 1e-12) {
        for (double& x : v) x = 0.5;
        return;
    }
    for (double& x : v) x = (x - lo) / (hi - lo);
}

}  // namespace detail

// The replenishment controller. Eliminations enqueue respawn credits that
// mature after the configured delay; admissions consume matured credits in
// proposal order, capped by the per-cycle quota.
class ReplenishmentController {
public:
    ReplenishmentController(const SpawnWorldConfig& cfg) : cfg_(cfg) {}

    void on_elimination(long long tick) { pending_.push_back(tick + cfg_.respawn_delay); }

    void begin_tick(long long t) {
        while (!pending_.empty() && pending_.front() <= t &&
               released_this_cycle_ < cfg_.cooldown_budget) {
            pending_.pop_front();
            ++eligible_;
            ++released_this_cycle_;
        }
    }

    // Returns how many of the proposals (in order) are admitted.
    int admit(int proposal_count, int live_count) {
        int deficit = cfg_.target_pop - live_count;
        int quota_left = cfg_.cycle_quota - spawned_this_cycle_;
        int n = std::min({proposal_count, deficit, quota_left, eligible_});
        if (n < 0) n = 0;
        spawned_this_cycle_ += n;
        eligible_ -= n;
        dropped_ += proposal_count - n;
        return n;
    }

    void end_cycle() {
        spawned_this_cycle_ = 0;
        released_this_cycle_ = 0;
    }

    int spawned_this_cycle() const { return spawned_this_cycle_; }
    int eligible() const { return eligible_; }
    long long dropped() const { return dropped_; }
    size_t pending() const { return pending_.size(); }

private:
    SpawnWorldConfig cfg_;
    std::deque<long long> pending_;
    int eligible_ = 0;
    int spawned_this_cycle_ = 0;
    int released_this_cycle_ = 0;
    long long dropped_ = 0;
};

// Per-tick invariant checks; the acceptance suite runs with `strict` so any
// violation throws.
struct SpawnValidator {
    bool strict = false;
    long long violations = 0;
    void check(bool ok, const char* what) {
        if (ok) return;
        ++violations;
        if (strict) throw std::logic_error(std::string("spawn invariant violated: ") + what);
    }
};

inline SpawnRunResult run_spawn(const SpawnWorldConfig& cfg, SpawnPolicyKind policy, uint64_t seed,
                                SpawnValidator* validator = nullptr) {
    cfg.validate();
    const double S = cfg.side;
    const int T = cfg.horizon;
    const int C = cfg.cycle_ticks;
    SpawnValidator local;
    SpawnValidator& val = validator ? *validator : local;

    SpawnRunResult res;
    res.config = cfg;
    res.policy = policy;
    res.seed = seed;

    Rng init_rng(derive_substream(seed, "init"));
    Rng monster_rng(derive_substream(seed, "monsters"));
    Rng player_rng(derive_substream(seed, "players"));
    Rng policy_rng(derive_substream(seed, "place"));
    Rng probe_rng(derive_substream(seed, "probes"));

    std::vector<detail::Mover> entities(cfg.target_pop);
    for (auto& e : entities)
        e = {{init_rng.uniform(0, S), init_rng.uniform(0, S)}, init_rng.uniform(0, kTwoPi)};
    std::vector<detail::Mover> players(cfg.players);
    for (auto& p : players)
        p = {{init_rng.uniform(0, S), init_rng.uniform(0, S)}, init_rng.uniform(0, kTwoPi)};
    std::vector<long long> player_rest_until(cfg.players, 0);

    ReplenishmentController controller(cfg);

    std::vector<Vec2> probes(cfg.coverage_samples);
    for (auto& p : probes) p = {probe_rng.uniform(0, S), probe_rng.uniform(0, S)};

    // --- policy state ---
    const bool has_field = policy == SpawnPolicyKind::perlin_a ||
                           policy == SpawnPolicyKind::perlin_b ||
                           policy == SpawnPolicyKind::facility;
    std::optional<FieldSampler> field;
    if (has_field) {
        // facility reads a dedicated desirability substream; A/B share the
        // spawn-field stack
        const char* tag = policy == SpawnPolicyKind::facility ? "desirability" : "field";
        NoiseSpec spec(cfg.a_freq, cfg.a_octaves, cfg.a_persistence, cfg.a_lacunarity,
                       derive_substream(seed, tag));
        field.emplace(spec, TemporalMode::resample, double(C));
    }

    // perlin-a per-cycle state
    std::vector<Vec2> a_sites;
    std::vector<int> a_phase;
    // perlin-b per-cycle state
    std::vector<Vec2> b_grid_pts;
    std::vector<double> b_grid_u;
    std::vector<long long> b_eval_ticks;
    // facility state
    std::vector<Vec2> fac_grid;
    std::vector<double> fac_desire;
    // mvn per-run component means
    std::vector<Vec2> mvn_means;
    if (policy == SpawnPolicyKind::mvn_poisson)
        for (int k = 0; k < cfg.mvn_components; ++k)
            mvn_means.push_back({policy_rng.uniform(0, S), policy_rng.uniform(0, S)});
    if (policy == SpawnPolicyKind::facility) {
        for (int y = 0; y < cfg.facility_grid; ++y)
            for (int x = 0; x < cfg.facility_grid; ++x)
                fac_grid.push_back({(x + 0.5) * S / cfg.facility_grid,
                                    (y + 0.5) * S / cfg.facility_grid});
    }
    std::deque<Vec2> pds_queue;  // per-cycle blue-noise batch, proposed at cycle start

    const double b_spacing = cfg.b_spacing > 0 ? cfg.b_spacing : double(C) / 20.0;
    const double uniform_rate = 1.0;                               // proposals per tick
    const double sin_rate = 1.5 * cfg.cycle_quota / double(C);     // mean proposals per tick

    res.driver.assign(T, 0.0);
    bool driver_defined = policy == SpawnPolicyKind::perlin_a || policy == SpawnPolicyKind::perlin_b;

    auto cycle_of = [&](long long t) { return (t - 1) / C; };

    long long current_cycle = -1;

    for (int t = 1; t <= T; ++t) {
        auto t_start = std::chrono::steady_clock::now();

        // --- cycle boundary: refresh fields and per-cycle policy state ---
        if (cycle_of(t) != current_cycle) {
            current_cycle = cycle_of(t);
            if (current_cycle > 0) controller.end_cycle();
            if (field) {
                long long delta = (long long)current_cycle * C - field->tick();
                if (delta > 0) field->advance(delta);  // redraws offsets at the boundary
            }
            Rng cyc_rng = policy_rng.fork(uint64_t(current_cycle));
            if (policy == SpawnPolicyKind::perlin_a) {
                const int strata = int(std::lround(std::sqrt(double(cfg.a_candidates))));
                std::vector<Vec2> cands;
                std::vector<double> u;
                for (int sy = 0; sy < strata; ++sy)
                    for (int sx = 0; sx < strata; ++sx) {
                        Vec2 p{(sx + cyc_rng.next_double()) * S / strata,
                               (sy + cyc_rng.next_double()) * S / strata};
                        cands.push_back(p);
                        u.push_back(to_unit(field->sample(p.x, p.y)));
                    }
                detail::minmax_rescale(u);  // phases span the whole cycle
                std::vector<size_t> order(cands.size());
                for (size_t i = 0; i < order.size(); ++i) order[i] = i;
                cyc_rng.shuffle(order);
                a_sites.clear();
                a_phase.clear();
                for (int k = 0; k < cfg.a_cycle_sites && k < int(order.size()); ++k) {
                    a_sites.push_back(cands[order[size_t(k)]]);
                    a_phase.push_back(phase_map(u[order[size_t(k)]], C));
                }
                // driver: time-to-level occupancy over the world grid
                std::vector<double> gu = detail::world_grid_values(*field, cfg.b_grid, S);
                detail::minmax_rescale(gu);
                detail::level_map_driver(gu, C, cfg.b_band_eps, current_cycle * C, T, res.driver);
            } else if (policy == SpawnPolicyKind::perlin_b) {
                b_grid_pts.clear();
                const int G = cfg.b_grid;
                for (int gy = 0; gy < G; ++gy)
                    for (int gx = 0; gx < G; ++gx)
                        b_grid_pts.push_back({(gx + 0.5) * S / G, (gy + 0.5) * S / G});
                b_grid_u = detail::world_grid_values(*field, G, S);
                detail::minmax_rescale(b_grid_u);
                // jittered evaluation time grid with minimum separation
                b_eval_ticks.clear();
                long long base = current_cycle * C;
                double prev = -1e9;
                for (double s = 0.0; s < C; s += b_spacing) {
                    double jt = s + cyc_rng.uniform(-cfg.b_jitter, cfg.b_jitter);
                    if (jt < 0 || jt >= C) continue;
                    if (jt - prev < cfg.b_min_sep) continue;
                    prev = jt;
                    b_eval_ticks.push_back(base + 1 + (long long)std::floor(jt));
                }
                detail::level_map_driver(b_grid_u, C, cfg.b_band_eps, current_cycle * C, T,
                                         res.driver);
            } else if (policy == SpawnPolicyKind::poisson_disk) {
                auto batch = poisson_disk_batch(S, cfg.pds_radius, cyc_rng);
                pds_queue.assign(batch.begin(), batch.end());
            } else if (policy == SpawnPolicyKind::facility) {
                fac_desire.resize(fac_grid.size());
                for (size_t i = 0; i < fac_grid.size(); ++i)
                    fac_desire[i] = to_unit(field->sample(fac_grid[i].x, fac_grid[i].y));
            }
        }

        controller.begin_tick(t);

        // --- movement and eliminations ---
        for (auto& e : entities)
            detail::step_mover(e, cfg.monster_speed, cfg.monster_persistence,
                               cfg.monster_turn_noise, cfg.monster_jitter, S, monster_rng);
        for (auto& p : players)
            detail::step_mover(p, cfg.player_speed, cfg.monster_persistence,
                               cfg.monster_turn_noise, cfg.monster_jitter, S, player_rng);

        const double kr2 = cfg.kill_radius * cfg.kill_radius;
        std::vector<uint8_t> dead(entities.size(), 0);
        for (int pi = 0; pi < cfg.players; ++pi) {
            if (cfg.player_rest && t < player_rest_until[size_t(pi)]) continue;
            bool killed = false;
            for (size_t ei = 0; ei < entities.size(); ++ei) {
                if (dead[ei]) continue;
                if (dist2(players[size_t(pi)].pos, entities[ei].pos) <= kr2) {
                    dead[ei] = 1;
                    killed = true;
                }
            }
            if (killed && cfg.player_rest) player_rest_until[size_t(pi)] = t + cfg.respawn_delay;
        }
        for (size_t ei = entities.size(); ei-- > 0;) {
            if (!dead[ei]) continue;
            res.eliminations.push_back({t, entities[ei].pos});
            controller.on_elimination(t);
            entities[ei] = entities.back();
            entities.pop_back();
        }

        // --- proposals ---
        std::vector<Vec2> proposals;
        switch (policy) {
            case SpawnPolicyKind::perlin_a: {
                int ct = int((t - 1) % C);
                for (size_t m = 0; m < a_sites.size(); ++m)
                    if (a_phase[m] == ct && policy_rng.next_double() < 1.0 - cfg.a_thinning_eps)
                        proposals.push_back(a_sites[m]);
                break;
            }
            case SpawnPolicyKind::perlin_b: {
                if (std::find(b_eval_ticks.begin(), b_eval_ticks.end(), (long long)t) !=
                    b_eval_ticks.end()) {
                    double level = double((t - 1) % C) / C;
                    auto iso = iso_band(b_grid_u, level, cfg.b_band_eps);
                    if (iso.skipped) {
                        res.summary.shortfall_ticks++;
                        break;
                    }
                    auto& band = iso.members;
                    int want = std::clamp(
                        int(std::lround(cfg.b_count_mean + policy_rng.next_normal())),
                        cfg.b_count_min, cfg.b_count_max);
                    if (cfg.b_farthest) {
                        std::vector<Vec2> cand;
                        for (size_t i : band) cand.push_back(b_grid_pts[i]);
                        std::vector<Vec2> existing;
                        existing.reserve(entities.size());
                        for (const auto& e : entities) existing.push_back(e.pos);
                        for (int k = 0; k < want && !cand.empty(); ++k) {
                            size_t pick = farthest_point_index(cand, existing);
                            proposals.push_back(cand[pick]);
                            existing.push_back(cand[pick]);
                            cand[pick] = cand.back();
                            cand.pop_back();
                        }
                    } else {
                        for (int k = 0; k < want; ++k)
                            proposals.push_back(
                                b_grid_pts[band[size_t(policy_rng.next_below(band.size()))]]);
                    }
                }
                break;
            }
            case SpawnPolicyKind::uniform: {
                int n = int(uniform_rate);
                for (int k = 0; k < n; ++k)
                    proposals.push_back({policy_rng.uniform(0, S), policy_rng.uniform(0, S)});
                break;
            }
            case SpawnPolicyKind::filtered: {
                for (int k = 0; k < 2; ++k) {
                    Vec2 p{policy_rng.uniform(0, S), policy_rng.uniform(0, S)};
                    bool ok = true;
                    for (const auto& pl : players)
                        if (dist2(p, pl.pos) < cfg.filtered_safety * cfg.filtered_safety) {
                            ok = false;
                            break;
                        }
                    if (ok)
                        for (const auto& e : entities)
                            if (dist2(p, e.pos) < cfg.filtered_spacing * cfg.filtered_spacing) {
                                ok = false;
                                break;
                            }
                    if (ok) proposals.push_back(p);
                }
                break;
            }
            case SpawnPolicyKind::poisson_disk: {
                // the whole blue-noise batch is proposed at the cycle start
                while (!pds_queue.empty()) {
                    proposals.push_back(pds_queue.front());
                    pds_queue.pop_front();
                }
                break;
            }
            case SpawnPolicyKind::mvn_poisson: {
                if ((t - 1) % C == 0) {
                    int n = poisson_draw(policy_rng, double(cfg.cycle_quota));
                    for (int k = 0; k < n; ++k) {
                        const Vec2& mu = mvn_means[size_t(policy_rng.next_below(mvn_means.size()))];
                        double sx = cfg.mvn_sigma_frac * S;
                        Vec2 p2{std::clamp(mu.x + sx * policy_rng.next_normal(), 0.0, S),
                                std::clamp(mu.y + sx * policy_rng.next_normal(), 0.0, S)};
                        proposals.push_back(p2);
                    }
                }
                break;
            }
            case SpawnPolicyKind::facility: {
                if ((t - 1) % cfg.facility_throttle == 0 && !fac_grid.empty()) {
                    size_t best = 0;
                    double best_score = -1.0;
                    for (size_t i = 0; i < fac_grid.size(); ++i) {
                        double mind = 1e300;
                        for (const auto& e : entities)
                            mind = std::min(mind, dist2(fac_grid[i], e.pos));
                        double score = std::sqrt(mind) * fac_desire[i];
                        if (score > best_score) {
                            best_score = score;
                            best = i;
                        }
                    }
                    proposals.push_back(fac_grid[best]);
                }
                break;
            }
            case SpawnPolicyKind::sinusoid: {
                double lam = sin_rate * (1.0 + cfg.sin_amp * std::sin(kTwoPi * t / double(C)));
                int n = poisson_draw(policy_rng, lam, 64);
                for (int k = 0; k < n; ++k)
                    proposals.push_back({policy_rng.uniform(0, S), policy_rng.uniform(0, S)});
                break;
            }
        }

        // --- admission ---
        int admitted = controller.admit(int(proposals.size()), int(entities.size()));
        for (int k = 0; k < admitted; ++k) {
            Vec2 p = proposals[size_t(k)];
            p.x = std::clamp(p.x, 0.0, S);
            p.y = std::clamp(p.y, 0.0, S);
            entities.push_back({p, policy_rng.uniform(0, kTwoPi)});
            res.spawns.push_back({t, p});
        }

        auto t_end = std::chrono::steady_clock::now();
        res.runtime_ns.push_back(
            double(std::chrono::duration_cast<std::chrono::nanoseconds>(t_end - t_start).count()));

        res.live_count.push_back(int(entities.size()));
        res.admitted_per_tick.push_back(admitted);
        res.proposals_per_tick.push_back(int(proposals.size()));
        if (t % cfg.snapshot_period == 0) {
            SpawnSnapshot snap;
            snap.tick = t;
            snap.entities.reserve(entities.size());
            for (const auto& e : entities) snap.entities.push_back(e.pos);
            res.snapshots.push_back(std::move(snap));
        }

        // --- invariants ---
        val.check(controller.spawned_this_cycle() <= cfg.cycle_quota, "cycle quota");
        val.check(int(entities.size()) <= cfg.target_pop + cfg.cycle_quota, "population ceiling");
        for (const auto& e : entities)
            val.check(e.pos.x >= 0 && e.pos.x <= S && e.pos.y >= 0 && e.pos.y <= S, "bounds");
        for (const auto& p : proposals)
            val.check(p.x >= -1e-9 && p.x <= S + 1e-9 && p.y >= -1e-9 && p.y <= S + 1e-9,
                      "proposal bounds");
    }

    // ---- summary ----
    auto& sm = res.summary;
    sm.violations = val.violations;
    sm.proposals_dropped = controller.dropped();

    std::vector<double> spawn_times;
    for (const auto& e : res.spawns)
        if (e.tick >= cfg.warmup) spawn_times.push_back(double(e.tick));
    sm.spawn_events = event_stats(spawn_times, cfg.warmup, T + 1, cfg.event_window);

    double mean_adm = 0.0;
    int n_pw = 0;
    for (int t = cfg.warmup; t <= T; ++t) {
        mean_adm += res.admitted_per_tick[size_t(t - 1)];
        ++n_pw;
    }
    mean_adm /= std::max(1, n_pw);
    double var_adm = 0.0;
    for (int t = cfg.warmup; t <= T; ++t) {
        double d = res.admitted_per_tick[size_t(t - 1)] - mean_adm;
        var_adm += d * d;
    }
    sm.load_variance = n_pw ? var_adm / n_pw : 0.0;

    if (driver_defined) {
        std::vector<double> counts(T, 0.0);
        for (const auto& e : res.spawns) counts[size_t(e.tick - 1)] += 1.0;
        std::vector<double> counts_pw(counts.begin() + cfg.warmup, counts.end());
        std::vector<double> driver_pw(res.driver.begin() + cfg.warmup, res.driver.end());
        sm.front_coherence = front_coherence(counts_pw, driver_pw, size_t(C));
    }

    // coverage distance: probe-estimated at every post-warmup snapshot;
    // second-order stats on the final entity set
    {
        double cov_acc = 0.0;
        int cov_n = 0;
        for (const auto& snap : res.snapshots) {
            if (snap.tick < cfg.warmup) continue;
            auto cd = coverage_distance(snap.entities, probes);
            if (cd) {
                cov_acc += *cd;
                ++cov_n;
            }
        }
        std::vector<Vec2> epos;
        for (const auto& e : entities) epos.push_back(e.pos);
        if (!cov_n) {
            auto cd = coverage_distance(epos, probes);
            if (cd) {
                cov_acc = *cd;
                cov_n = 1;
            }
        }
        sm.coverage_distance = cov_n ? cov_acc / cov_n : 0.0;
        sm.final_pp = point_process_stats(epos, cfg.pp_radii, S, false);
        sm.mean_nn = sm.final_pp.defined ? sm.final_pp.mean_nn : 0.0;
        res.final_entities = std::move(epos);
    }
    {
        const int RG = 8;
        std::vector<double> counts(RG * RG, 0.0);
        for (const auto& e : res.spawns) {
            if (e.tick < cfg.warmup) continue;
            int rx = std::min(RG - 1, int(e.pos.x / S * RG));
            int ry = std::min(RG - 1, int(e.pos.y / S * RG));
            counts[size_t(ry) * RG + rx] += 1.0;
        }
        auto bal = spatial_balance(counts, RG, RG);
        sm.regional_cv = bal.regional_cv;
        sm.morans_i = bal.morans_i;
    }

    long long n_spawn_pw = 0, n_elim_pw = 0;
    for (const auto& e : res.spawns)
        if (e.tick >= cfg.warmup) ++n_spawn_pw;
    for (const auto& e : res.eliminations)
        if (e.tick >= cfg.warmup) ++n_elim_pw;
    double cycles_pw = double(T - cfg.warmup + 1) / C;
    sm.spawns_per_cycle = n_spawn_pw / cycles_pw;
    sm.elims_per_cycle = n_elim_pw / cycles_pw;

    double live_acc = 0.0;
    long long band = 0, band_n = 0;
    for (int t = cfg.warmup; t <= T; ++t) {
        int lc = res.live_count[size_t(t - 1)];
        live_acc += lc;
        if (lc >= cfg.target_pop - cfg.cycle_quota && lc <= cfg.target_pop) ++band;
        ++band_n;
    }
    sm.live_mean = band_n ? live_acc / band_n : 0.0;
    sm.band_occupancy = band_n ? double(band) / band_n : 0.0;

    double rt = 0;
    for (double r : res.runtime_ns) rt += r;
    sm.runtime_ns_mean = res.runtime_ns.empty() ? 0 : rt / double(res.runtime_ns.size());
    sm.runtime_ns_p95 = res.runtime_ns.empty() ? 0 : percentile(res.runtime_ns, 0.95);
    return res;
}

}  // namespace fieldsim
