#pragma once
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fieldsim/action.hpp"
#include "fieldsim/crowd.hpp"
#include "fieldsim/csv.hpp"
#include "fieldsim/spawn.hpp"
#include "fieldsim/worldgen.hpp"

// Batch protocol: run (direction x method x scale x seed) grids with shared
// seed sets, write per-run artifacts, aggregate metrics across seeds.
// Wall-clock measurements go to timing files kept outside the determinism
// contract; everything else is byte-reproducible.

namespace fieldsim {

inline constexpr const char* kVersion = "fieldsim 0.1.0";

using Json = nlohmann::ordered_json;
using MetricMap = std::map<std::string, double>;

struct ExperimentConfig {
    std::string direction = "crowd";  // crowd | action | spawn | worldgen
    std::vector<std::string> methods{"perlin_dual"};
    std::string scale = "medium";
    uint64_t seed_base = 1000;
    int seed_count = 20;
    std::string output_dir = "out";
    int threads = 1;
    Json overrides;  // direction-specific config overrides

    static ExperimentConfig from_json(const Json& j) {
        ExperimentConfig c;
        c.direction = j.value("direction", c.direction);
        if (j.contains("methods")) c.methods = j["methods"].get<std::vector<std::string>>();
        c.scale = j.value("scale", c.scale);
        c.seed_base = j.value("seed_base", c.seed_base);
        c.seed_count = j.value("seed_count", c.seed_count);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.threads = j.value("threads", c.threads);
        if (j.contains("overrides")) c.overrides = j["overrides"];
        return c;
    }
    Json to_json() const {
        Json j = canonical_json();
        j["output_dir"] = output_dir;
        j["threads"] = threads;
        return j;
    }
    // Execution details (parallelism, paths) do not describe the result and
    // stay out of the hashed identity.
    Json canonical_json() const {
        Json j;
        j["direction"] = direction;
        j["methods"] = methods;
        j["scale"] = scale;
        j["seed_base"] = seed_base;
        j["seed_count"] = seed_count;
        j["overrides"] = overrides.is_null() ? Json::object() : overrides;
        return j;
    }
};

inline std::string config_hash(const Json& j) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a64(j.dump()));
    return buf;
}

// ---------------- config serialization & overrides ----------------

inline Json noise_spec_json(const NoiseSpec& s) {
    Json j;
    j["base_frequency"] = s.base_frequency;
    j["octaves"] = s.octaves;
    j["persistence"] = s.persistence;
    j["lacunarity"] = s.lacunarity;
    j["offset_x"] = s.offset_x;
    j["offset_y"] = s.offset_y;
    j["offset_t"] = s.offset_t;
    j["seed"] = s.seed;
    return j;
}

inline NoiseSpec noise_spec_from_json(const Json& j) {
    NoiseSpec s(j.value("base_frequency", 0.01), j.value("octaves", 4),
                j.value("persistence", 0.5), j.value("lacunarity", 2.0),
                j.value("seed", uint64_t(0)));
    s.offset_x = j.value("offset_x", 0.0);
    s.offset_y = j.value("offset_y", 0.0);
    s.offset_t = j.value("offset_t", 0.0);
    return s;
}

inline Json crowd_config_json(const CrowdConfig& c) {
    Json j;
    j["world_side"] = c.world_side;
    j["agents"] = c.agents;
    j["horizon"] = c.horizon;
    j["v_min"] = c.v_min;
    j["v_max"] = c.v_max;
    j["heading_inertia"] = c.heading_inertia;
    j["speed_ema"] = c.speed_ema;
    j["jitter"] = c.jitter;
    j["speed_update_ou"] = c.speed_update_ou;
    j["ou_beta"] = c.ou_beta;
    j["ou_sigma"] = c.ou_sigma;
    j["snapshot_period"] = c.snapshot_period;
    j["freq_heading"] = c.freq_heading;
    j["freq_speed"] = c.freq_speed;
    j["octaves"] = c.octaves;
    j["persistence"] = c.persistence;
    j["lacunarity"] = c.lacunarity;
    j["drift_speed"] = c.drift_speed;
    j["urw_sigma_theta"] = c.urw_sigma_theta;
    j["ou_heading_beta"] = c.ou_heading_beta;
    j["ou_heading_sigma"] = c.ou_heading_sigma;
    j["curl_freq"] = c.curl_freq;
    j["curl_step"] = c.curl_step;
    j["vicsek_radius"] = c.vicsek_radius;
    j["vicsek_eta"] = c.vicsek_eta;
    j["vicsek_speed"] = c.vicsek_speed;
    j["vicsek_grid"] = c.vicsek_grid;
    j["piecewise_cell"] = c.piecewise_cell;
    j["coverage_grid"] = c.coverage_grid;
    j["coverage_window"] = c.coverage_window;
    return j;
}

inline void apply_overrides(CrowdConfig& c, const Json& o) {
    if (o.is_null()) return;
    c.world_side = o.value("world_side", c.world_side);
    c.agents = o.value("agents", c.agents);
    c.horizon = o.value("horizon", c.horizon);
    c.v_min = o.value("v_min", c.v_min);
    c.v_max = o.value("v_max", c.v_max);
    c.heading_inertia = o.value("heading_inertia", c.heading_inertia);
    c.speed_ema = o.value("speed_ema", c.speed_ema);
    c.jitter = o.value("jitter", c.jitter);
    c.speed_update_ou = o.value("speed_update_ou", c.speed_update_ou);
    c.snapshot_period = o.value("snapshot_period", c.snapshot_period);
    c.freq_heading = o.value("freq_heading", c.freq_heading);
    c.freq_speed = o.value("freq_speed", c.freq_speed);
    c.octaves = o.value("octaves", c.octaves);
    c.persistence = o.value("persistence", c.persistence);
    c.lacunarity = o.value("lacunarity", c.lacunarity);
    c.drift_speed = o.value("drift_speed", c.drift_speed);
    c.vicsek_grid = o.value("vicsek_grid", c.vicsek_grid);
}

inline Json action_config_json(const SchedulerConfig& c) {
    Json j;
    j["world_side"] = c.world_side;
    j["agents"] = c.agents;
    j["horizon"] = c.horizon;
    j["warmup"] = c.warmup;
    j["motion_sigma_theta"] = c.motion_sigma_theta;
    j["motion_speed"] = c.motion_speed;
    j["freq"] = c.freq;
    j["octaves"] = c.octaves;
    j["persistence"] = c.persistence;
    j["lacunarity"] = c.lacunarity;
    j["drift_speed"] = c.drift_speed;
    j["lambda0"] = c.lambda0;
    j["eps"] = c.eps;
    j["alpha_ema"] = c.alpha_ema;
    j["rate_matching"] = c.rate_matching;
    j["cycle_ticks"] = c.cycle_ticks;
    j["kernel_bandwidth"] = c.kernel_bandwidth;
    j["phase_jitter"] = c.phase_jitter;
    j["hybrid_alpha"] = c.hybrid_alpha;
    j["duration"] = c.duration;
    j["lambda_target"] = c.lambda_target();
    return j;
}

inline void apply_overrides(SchedulerConfig& c, const Json& o) {
    if (o.is_null()) return;
    c.agents = o.value("agents", c.agents);
    c.horizon = o.value("horizon", c.horizon);
    c.world_side = o.value("world_side", c.world_side);
    c.freq = o.value("freq", c.freq);
    c.octaves = o.value("octaves", c.octaves);
    c.persistence = o.value("persistence", c.persistence);
    c.lacunarity = o.value("lacunarity", c.lacunarity);
    c.drift_speed = o.value("drift_speed", c.drift_speed);
    c.lambda0 = o.value("lambda0", c.lambda0);
    c.eps = o.value("eps", c.eps);
    c.alpha_ema = o.value("alpha_ema", c.alpha_ema);
    c.hybrid_alpha = o.value("hybrid_alpha", c.hybrid_alpha);
    c.duration = o.value("duration", c.duration);
    c.rate_matching = o.value("rate_matching", c.rate_matching);
}

inline Json spawn_config_json(const SpawnWorldConfig& c) {
    Json j;
    j["side"] = c.side;
    j["horizon"] = c.horizon;
    j["cycle_ticks"] = c.cycle_ticks;
    j["target_pop"] = c.target_pop;
    j["cycle_quota"] = c.cycle_quota;
    j["cooldown_budget"] = c.cooldown_budget;
    j["players"] = c.players;
    j["coverage_samples"] = c.coverage_samples;
    j["warmup"] = c.warmup;
    j["monster_speed"] = c.monster_speed;
    j["monster_persistence"] = c.monster_persistence;
    j["monster_turn_noise"] = c.monster_turn_noise;
    j["monster_jitter"] = c.monster_jitter;
    j["player_speed"] = c.player_speed;
    j["kill_radius"] = c.kill_radius;
    j["respawn_delay"] = c.respawn_delay;
    j["player_rest"] = c.player_rest;
    j["a_candidates"] = c.a_candidates;
    j["a_cycle_sites"] = c.a_cycle_sites;
    j["a_freq"] = c.a_freq;
    j["a_octaves"] = c.a_octaves;
    j["a_persistence"] = c.a_persistence;
    j["a_lacunarity"] = c.a_lacunarity;
    j["a_thinning_eps"] = c.a_thinning_eps;
    j["b_band_eps"] = c.b_band_eps;
    j["b_grid"] = c.b_grid;
    j["b_jitter"] = c.b_jitter;
    j["b_min_sep"] = c.b_min_sep;
    j["b_farthest"] = c.b_farthest;
    j["pds_radius"] = c.pds_radius;
    return j;
}

inline void apply_overrides(SpawnWorldConfig& c, const Json& o) {
    if (o.is_null()) return;
    c.horizon = o.value("horizon", c.horizon);
    c.target_pop = o.value("target_pop", c.target_pop);
    c.cycle_quota = o.value("cycle_quota", c.cycle_quota);
    c.players = o.value("players", c.players);
    c.player_rest = o.value("player_rest", c.player_rest);
    c.respawn_delay = o.value("respawn_delay", c.respawn_delay);
    c.b_farthest = o.value("b_farthest", c.b_farthest);
    c.a_thinning_eps = o.value("a_thinning_eps", c.a_thinning_eps);
    c.pds_radius = o.value("pds_radius", c.pds_radius);
}

// ---------------- metric extraction ----------------

inline MetricMap crowd_metrics(const CrowdRunResult& r) {
    MetricMap m;
    m["s_dir_at5"] = r.summary.s_dir_at5;
    m["jerk_mean"] = r.summary.jerk_mean;
    m["jerk_p95"] = r.summary.jerk_p95;
    m["coverage"] = r.summary.coverage_mean;
    m["polarization"] = r.summary.polarization_mean;
    m["heading_entropy"] = r.summary.heading_entropy_mean;
    m["speed_mean"] = r.summary.speed_mean;
    m["speed_std"] = r.summary.speed_std;
    m["speed_skew"] = r.summary.speed_skew;
    m["tortuosity_mean"] = r.summary.tortuosity_mean;
    m["tortuosity_p95"] = r.summary.tortuosity_p95;
    if (r.summary.hf_lf) m["hf_lf"] = *r.summary.hf_lf;
    if (r.summary.corr_length_dir) m["corr_length_dir"] = *r.summary.corr_length_dir;
    if (r.summary.autocorr_theta1) m["autocorr_theta1"] = *r.summary.autocorr_theta1;
    if (r.summary.autocorr_speed1) m["autocorr_speed1"] = *r.summary.autocorr_speed1;
    m["noise_samples_per_tick"] = r.summary.noise_samples_per_tick;
    m["rng_draws_per_tick"] = r.summary.rng_draws_per_tick;
    return m;
}

inline MetricMap action_metrics(const ActionRunResult& r) {
    MetricMap m;
    m["duty"] = r.summary.duty;
    if (r.summary.events.isi_mean) m["isi_mean"] = *r.summary.events.isi_mean;
    if (r.summary.events.isi_cv) m["isi_cv"] = *r.summary.events.isi_cv;
    if (r.summary.events.gap_p95) m["gap_p95"] = *r.summary.events.gap_p95;
    if (r.summary.events.burstiness) m["burstiness"] = *r.summary.events.burstiness;
    if (r.summary.events.fano) m["fano"] = *r.summary.events.fano;
    if (r.summary.hf_lf) m["hf_lf"] = *r.summary.hf_lf;
    if (r.summary.second_diff_energy) m["second_diff_energy"] = *r.summary.second_diff_energy;
    m["regional_cv"] = r.summary.regional_cv;
    if (r.summary.morans_i) m["morans_i"] = *r.summary.morans_i;
    m["coverage"] = r.summary.coverage_mean;
    if (r.summary.front_coherence) m["front_coherence"] = *r.summary.front_coherence;
    if (r.summary.window_pp.defined && !r.summary.window_pp.k_ratio.empty())
        m["k_ratio_mid"] = r.summary.window_pp.k_ratio[r.summary.window_pp.k_ratio.size() / 2];
    m["events"] = double(r.summary.events.n_events);
    return m;
}

inline MetricMap spawn_metrics(const SpawnRunResult& r) {
    MetricMap m;
    if (r.summary.front_coherence) m["front_coherence"] = *r.summary.front_coherence;
    if (r.summary.spawn_events.isi_cv) m["isi_cv"] = *r.summary.spawn_events.isi_cv;
    if (r.summary.spawn_events.fano) m["fano"] = *r.summary.spawn_events.fano;
    if (r.summary.spawn_events.burstiness) m["burstiness"] = *r.summary.spawn_events.burstiness;
    m["load_variance"] = r.summary.load_variance;
    m["coverage_distance"] = r.summary.coverage_distance;
    m["regional_cv"] = r.summary.regional_cv;
    if (r.summary.morans_i) m["morans_i"] = *r.summary.morans_i;
    m["mean_nn"] = r.summary.mean_nn;
    m["spawns_per_cycle"] = r.summary.spawns_per_cycle;
    m["elims_per_cycle"] = r.summary.elims_per_cycle;
    m["live_mean"] = r.summary.live_mean;
    m["band_occupancy"] = r.summary.band_occupancy;
    m["violations"] = double(r.summary.violations);
    m["proposals_dropped"] = double(r.summary.proposals_dropped);
    return m;
}

// ---------------- per-run artifact writers ----------------

namespace detail {

inline void write_summary(const std::string& dir, const Json& config, uint64_t seed,
                          const MetricMap& metrics) {
    Json j;
    j["version"] = kVersion;
    j["config_hash"] = config_hash(config);
    j["seed"] = seed;
    j["config"] = config;
    Json m;
    for (const auto& [k, v] : metrics) m[k] = v;
    j["metrics"] = std::move(m);
    std::ofstream out(dir + "/summary.json");
    out << j.dump(2) << "\n";
}

// Wall-clock data lives apart from the deterministic artifacts.
inline void write_timing(const std::string& dir, std::span<const double> runtime_ns) {
    double sum = 0;
    for (double r : runtime_ns) sum += r;
    Json j;
    j["note"] = "hardware-dependent; excluded from the determinism contract";
    j["runtime_ns_mean"] = runtime_ns.empty() ? 0.0 : sum / double(runtime_ns.size());
    j["runtime_ns_p95"] =
        runtime_ns.empty() ? 0.0 : percentile({runtime_ns.begin(), runtime_ns.end()}, 0.95);
    j["ticks"] = runtime_ns.size();
    std::ofstream out(dir + "/timing.json");
    out << j.dump(2) << "\n";
}

}  // namespace detail

inline void write_crowd_run(const CrowdRunResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        CsvWriter csv(dir + "/per_tick.csv");
        csv.header({"tick", "polarization", "mean_speed", "jerk_mean", "coverage"});
        for (const auto& t : r.ticks) {
            csv.field(t.tick).field(t.polarization).field(t.mean_speed).field(t.jerk_mean);
            csv.field(t.coverage);
            csv.endrow();
        }
    }
    {
        CsvWriter csv(dir + "/snapshots.csv");
        csv.header({"tick", "agent", "x", "y", "theta", "v"});
        for (const auto& s : r.snapshots)
            for (size_t i = 0; i < s.pos.size(); ++i) {
                csv.field(s.tick).field((long long)i);
                csv.field(s.pos[i].x).field(s.pos[i].y).field(s.heading[i]).field(s.speed[i]);
                csv.endrow();
            }
    }
    Json cfg = crowd_config_json(r.config);
    cfg["policy"] = crowd_policy_name(r.policy);
    detail::write_summary(dir, cfg, r.seed, crowd_metrics(r));
    detail::write_timing(dir, r.runtime_ns);
}

inline void write_action_run(const ActionRunResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        CsvWriter csv(dir + "/events.csv");
        csv.header({"agent_id", "start_tick"});
        for (size_t a = 0; a < r.log.starts_by_agent.size(); ++a)
            for (int t : r.log.starts_by_agent[a]) {
                csv.field((long long)a).field(t);
                csv.endrow();
            }
    }
    {
        CsvWriter csv(dir + "/per_tick.csv");
        std::vector<std::string> cols{"tick", "active_count"};
        for (int c = 0; c < r.config.region_grid * r.config.region_grid; ++c)
            cols.push_back("region_" + std::to_string(c));
        csv.header(cols);
        for (int t = 1; t <= r.config.horizon; ++t) {
            csv.field(t).field(r.log.active_count[size_t(t - 1)]);
            for (int c : r.log.region_counts[size_t(t - 1)]) csv.field(c);
            csv.endrow();
        }
    }
    Json cfg = action_config_json(r.config);
    cfg["method"] = action_method_name(r.method);
    detail::write_summary(dir, cfg, r.seed, action_metrics(r));
    detail::write_timing(dir, r.runtime_ns);
}

inline void write_spawn_run(const SpawnRunResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    {
        CsvWriter csv(dir + "/spawn_events.csv");
        csv.header({"tick", "x", "y"});
        for (const auto& e : r.spawns) {
            csv.field(e.tick).field(e.pos.x).field(e.pos.y);
            csv.endrow();
        }
    }
    {
        CsvWriter csv(dir + "/elimination_events.csv");
        csv.header({"tick", "x", "y"});
        for (const auto& e : r.eliminations) {
            csv.field(e.tick).field(e.pos.x).field(e.pos.y);
            csv.endrow();
        }
    }
    {
        CsvWriter csv(dir + "/per_tick.csv");
        csv.header({"tick", "live", "admitted", "proposals", "driver"});
        for (int t = 1; t <= r.config.horizon; ++t) {
            csv.field(t).field(r.live_count[size_t(t - 1)]);
            csv.field(r.admitted_per_tick[size_t(t - 1)]);
            csv.field(r.proposals_per_tick[size_t(t - 1)]);
            csv.field(r.driver.empty() ? 0.0 : r.driver[size_t(t - 1)]);
            csv.endrow();
        }
    }
    {
        CsvWriter csv(dir + "/snapshots.csv");
        csv.header({"tick", "x", "y"});
        for (const auto& s : r.snapshots)
            for (const auto& e : s.entities) {
                csv.field(s.tick).field(e.x).field(e.y);
                csv.endrow();
            }
    }
    {
        CsvWriter csv(dir + "/entities.csv");
        csv.header({"x", "y"});
        for (const auto& e : r.final_entities) {
            csv.field(e.x).field(e.y);
            csv.endrow();
        }
    }
    Json cfg = spawn_config_json(r.config);
    cfg["policy"] = spawn_policy_name(r.policy);
    detail::write_summary(dir, cfg, r.seed, spawn_metrics(r));
    detail::write_timing(dir, r.runtime_ns);
}

// ---------------- batch execution and aggregation ----------------

struct AggregateRow {
    std::string method;
    std::string scale;
    std::string metric;
    double mean = 0.0, stddev = 0.0, ci_half = 0.0;
    int n_seeds = 0;
};

inline std::vector<AggregateRow> aggregate_rows(
    const std::map<std::string, std::map<std::string, std::vector<double>>>& by_method,
    const std::string& scale) {
    std::vector<AggregateRow> rows;
    for (const auto& [method, metrics] : by_method) {
        for (const auto& [metric, values] : metrics) {
            if (values.empty()) continue;
            AggregateRow row;
            row.method = method;
            row.scale = scale;
            row.metric = metric;
            row.n_seeds = int(values.size());
            double mean = 0;
            for (double v : values) mean += v;
            mean /= double(values.size());
            double var = 0;
            for (double v : values) var += (v - mean) * (v - mean);
            // sample standard deviation; CI as mean +/- 1.96 SE
            double sd = values.size() > 1 ? std::sqrt(var / double(values.size() - 1)) : 0.0;
            row.mean = mean;
            row.stddev = sd;
            row.ci_half = values.size() > 1 ? 1.96 * sd / std::sqrt(double(values.size())) : 0.0;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_aggregate(const std::vector<AggregateRow>& rows, const std::string& path) {
    CsvWriter csv(path);
    csv.header({"method", "scale", "metric", "mean", "std", "ci95_half", "n_seeds"});
    for (const auto& r : rows) {
        csv.field(r.method).field(r.scale).field(r.metric);
        csv.field(r.mean).field(r.stddev).field(r.ci_half).field(r.n_seeds);
        csv.endrow();
    }
}

struct BatchResult {
    std::vector<AggregateRow> rows;
    std::map<std::string, std::map<std::string, std::vector<double>>> metrics_by_method;
    std::map<std::string, std::map<std::string, std::vector<double>>> timing_by_method;
    std::vector<std::string> failures;
};

// Executes every (method, seed) cell of the batch. Each run owns its output
// directory, so parallel execution is byte-identical to serial. A failing run
// is recorded and excluded from aggregates without aborting the batch.
inline BatchResult run_batch(const ExperimentConfig& cfg, bool write_outputs = true) {
    namespace fs = std::filesystem;
    BatchResult out;
    if (write_outputs) fs::create_directories(cfg.output_dir);

    struct Cell {
        std::string method;
        uint64_t seed;
    };
    std::vector<Cell> cells;
    for (const auto& m : cfg.methods)
        for (int s = 0; s < cfg.seed_count; ++s) cells.push_back({m, cfg.seed_base + uint64_t(s)});

    // per-cell results, merged in cell order afterwards so aggregation is
    // independent of completion order
    std::vector<std::optional<MetricMap>> results(cells.size());
    std::vector<double> runtimes(cells.size(), 0.0);
    std::vector<std::string> errors(cells.size());

    auto run_cell = [&](size_t i) {
        const Cell& cell = cells[i];
        std::string dir =
            cfg.output_dir + "/run_" + cell.method + "_" + std::to_string(cell.seed);
        try {
            MetricMap metrics;
            double runtime_ms = 0.0;
            if (cfg.direction == "crowd") {
                CrowdConfig c = CrowdConfig::scale(cfg.scale);
                apply_overrides(c, cfg.overrides);
                auto r = run_crowd(c, parse_crowd_policy(cell.method), cell.seed);
                metrics = crowd_metrics(r);
                runtime_ms = r.summary.runtime_ns_mean / 1e6;
                if (write_outputs) write_crowd_run(r, dir);
            } else if (cfg.direction == "action") {
                SchedulerConfig c = SchedulerConfig::scale(cfg.scale);
                apply_overrides(c, cfg.overrides);
                auto r = run_action(c, parse_action_method(cell.method), cell.seed);
                metrics = action_metrics(r);
                runtime_ms = r.summary.runtime_ns_mean / 1e6;
                if (write_outputs) write_action_run(r, dir);
            } else if (cfg.direction == "spawn") {
                SpawnWorldConfig c = SpawnWorldConfig::scale(cfg.scale);
                apply_overrides(c, cfg.overrides);
                auto r = run_spawn(c, parse_spawn_policy(cell.method), cell.seed);
                metrics = spawn_metrics(r);
                runtime_ms = r.summary.runtime_ns_mean / 1e6;
                if (write_outputs) write_spawn_run(r, dir);
            } else {
                throw std::invalid_argument("run_batch: unknown direction " + cfg.direction);
            }
            results[i] = std::move(metrics);
            runtimes[i] = runtime_ms;
        } catch (const std::exception& e) {
            errors[i] = dir + ": " + e.what();
        }
    };

    int width = std::max(1, cfg.threads);
    if (width == 1) {
        for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < width; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    run_cell(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i].empty()) {
            out.failures.push_back(errors[i]);
            continue;
        }
        if (!results[i]) continue;
        for (const auto& [k, v] : *results[i]) out.metrics_by_method[cells[i].method][k].push_back(v);
        out.timing_by_method[cells[i].method]["runtime_ms"].push_back(runtimes[i]);
    }

    out.rows = aggregate_rows(out.metrics_by_method, cfg.scale);
    if (write_outputs) {
        write_aggregate(out.rows, cfg.output_dir + "/aggregate.csv");
        write_aggregate(aggregate_rows(out.timing_by_method, cfg.scale),
                        cfg.output_dir + "/timing_aggregate.csv");
        Json echo = cfg.to_json();
        echo["config_hash"] = config_hash(cfg.canonical_json());
        echo["version"] = kVersion;
        if (!out.failures.empty()) echo["failures"] = out.failures;
        std::ofstream meta(cfg.output_dir + "/batch.json");
        meta << echo.dump(2) << "\n";

        // runtime comparisons are relative orderings only; absolute numbers
        // are hardware-bound
        std::vector<std::pair<double, std::string>> order;
        for (const auto& [method, m] : out.timing_by_method) {
            auto it = m.find("runtime_ms");
            if (it != m.end() && !it->second.empty()) {
                double mean = 0;
                for (double v : it->second) mean += v;
                order.emplace_back(mean / double(it->second.size()), method);
            }
        }
        std::sort(order.begin(), order.end());
        Json rank = Json::array();
        for (const auto& [ms, method] : order)
            rank.push_back(Json{{"method", method}, {"runtime_ms_mean", ms}});
        std::ofstream ord(cfg.output_dir + "/runtime_ordering.json");
        Json oj;
        oj["note"] = "hardware-dependent; relative ordering only";
        oj["fastest_first"] = std::move(rank);
        ord << oj.dump(2) << "\n";
    }
    return out;
}

// Named sweep grids from the evaluation protocol.
inline std::vector<Json> sweep_grid(const std::string& direction, const std::string& name) {
    std::vector<Json> grid;
    if (direction == "crowd" && name == "perlin_scale") {
        const double f[3][3] = {{0.006, 0.0065, 0.001}, {0.01, 0.011, 0.002}, {0.016, 0.017, 0.004}};
        for (auto& row : f)
            grid.push_back(Json{{"freq_heading", row[0]}, {"freq_speed", row[1]},
                                {"drift_speed", row[2]}});
    } else if (direction == "crowd" && name == "agents_scale") {
        for (int n : {500, 1000, 2000, 4000}) grid.push_back(Json{{"agents", n}});
    } else if (direction == "action" && name == "hparam") {
        for (double f : {0.005, 0.01, 0.02})
            for (int K : {3, 4, 5})
                for (double p : {0.45, 0.55})
                    for (double l : {1.8, 2.2})
                        grid.push_back(Json{{"freq", f}, {"octaves", K}, {"persistence", p},
                                            {"lacunarity", l}});
    } else {
        throw std::invalid_argument("unknown sweep grid: " + direction + "/" + name);
    }
    return grid;
}

// Cartesian-product sweep: one sub-batch per grid cell, shared seed set.
// An empty grid degenerates to a single default batch.
inline std::vector<BatchResult> run_sweep(const ExperimentConfig& base,
                                          const std::vector<Json>& grid,
                                          bool write_outputs = true) {
    std::vector<BatchResult> results;
    if (grid.empty()) {
        results.push_back(run_batch(base, write_outputs));
        return results;
    }
    int idx = 0;
    for (const auto& cell : grid) {
        ExperimentConfig cfg = base;
        cfg.output_dir = base.output_dir + "/sweep_" + std::to_string(idx++);
        Json merged = cfg.overrides.is_null() ? Json::object() : cfg.overrides;
        for (auto& [k, v] : cell.items()) merged[k] = v;
        cfg.overrides = merged;
        results.push_back(run_batch(cfg, write_outputs));
    }
    return results;
}

// Re-aggregate previously written run directories from their summary files.
inline std::vector<AggregateRow> aggregate_directories(const std::vector<std::string>& dirs) {
    namespace fs = std::filesystem;
    std::map<std::string, std::map<std::string, std::vector<double>>> by_method;
    for (const auto& root : dirs) {
        for (auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.path().filename() != "summary.json") continue;
            std::ifstream in(entry.path());
            Json j;
            in >> j;
            if (!j.contains("metrics") || !j.contains("config")) continue;
            std::string method;
            if (j["config"].contains("policy")) method = j["config"]["policy"];
            else if (j["config"].contains("method")) method = j["config"]["method"];
            else continue;
            for (auto& [k, v] : j["metrics"].items())
                by_method[method][k].push_back(v.get<double>());
        }
    }
    return aggregate_rows(by_method, "");
}

}  // namespace fieldsim
