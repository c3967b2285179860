#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fieldsim/noise.hpp"
#include "fieldsim/raster.hpp"
#include "fieldsim/rng.hpp"
#include "fieldsim/geom.hpp"

// Direction III: synthetic territory generation from a design template.
// Discrete layers come from regional quantile mapping of low-frequency
// fields, danger bands from ordered thresholds, continuous attributes from
// mid/high-frequency fields, and point content from masked, quota- and
// radius-constrained thinning.

namespace fieldsim {

struct LayerParams {
    double frequency = 0.02;
    int octaves = 4;
    double persistence = 0.5;
    double lacunarity = 2.0;
};

struct BandFeatures {
    double hp_lo = 1.0, hp_hi = 1.0;
    double dps_lo = 1.0, dps_hi = 1.0;
    double elite_p = 0.0, boss_p = 0.0;
};

struct ContentClass {
    std::string name;
    std::string category;  // resource | wildlife | enemy | landmark
    int quota = 0;
    double radius = 0.0;        // minimum same-class spacing, world units
    std::vector<int> biomes;    // allowed biome ids; empty means any
    std::vector<int> danger;    // allowed danger bands; empty means any
};

struct WorldTemplate {
    std::string name;
    double extent_m = 8000.0;
    int param_grid = 512;
    int base_raster = 1024;  // nominal render resolution for downstream tools
    double sea_level = 0.30;

    LayerParams faction_layer{0.018, 4, 0.45, 2.1};
    LayerParams biome_layer{0.022, 4, 0.50, 2.05};
    LayerParams danger_layer{0.024, 5, 0.52, 2.15};
    LayerParams type_layer{0.055, 6, 0.50, 2.20};
    LayerParams feature_layer{0.110, 5, 0.55, 2.25};
    LayerParams height_layer{0.028, 5, 0.48, 2.00};

    std::array<double, 3> danger_thresholds{0.35, 0.60, 0.82};
    std::vector<std::string> faction_names;
    std::vector<double> faction_mix;
    std::vector<std::string> biome_names;
    std::vector<double> biome_mix;
    std::vector<double> danger_prior;  // design prior, reported as a diagnostic
    std::vector<std::string> type_names;
    std::vector<double> type_mix;
    std::array<BandFeatures, 4> band_features{};
    std::vector<ContentClass> classes;

    void validate() const {
        auto check_hist = [](const std::vector<double>& h, const char* what) {
            if (h.empty()) throw std::invalid_argument(std::string(what) + ": empty histogram");
            double sum = 0;
            for (double f : h) {
                if (!(f > 0)) throw std::invalid_argument(std::string(what) + ": nonpositive bin");
                sum += f;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument(std::string(what) + ": histogram must sum to 1");
        };
        check_hist(faction_mix, "factions");
        check_hist(biome_mix, "biomes");
        check_hist(type_mix, "types");
        if (!(danger_thresholds[0] < danger_thresholds[1] &&
              danger_thresholds[1] < danger_thresholds[2]))
            throw std::invalid_argument("danger thresholds must be strictly increasing");
        for (const auto& c : classes) {
            if (c.quota < 0) throw std::invalid_argument(c.name + ": negative quota");
            if (c.radius < 0) throw std::invalid_argument(c.name + ": negative radius");
        }
    }
};

struct PlacedPoint {
    Vec2 pos;  // world meters, origin at the southwest corner
    std::string class_name;
    std::string category;
    int biome = -1;
    int danger = -1;
    double hp_mult = 1.0, dps_mult = 1.0;
    bool elite = false, boss = false;
};

struct ClassDiagnostics {
    std::string name;
    int quota = 0;
    int placed = 0;
    bool shortfall = false;
    double min_spacing = 0.0;  // realized minimum pairwise distance
};

struct GeneratedWorld {
    WorldTemplate tmpl;
    uint64_t master_seed = 0;
    uint64_t layout_seed = 0, noise_seed = 0, place_seed = 0;
    Raster<int> faction, biome, danger, type;  // -1 marks water
    Raster<double> feature, height;
    std::vector<PlacedPoint> points;
    std::vector<ClassDiagnostics> class_diags;
    // per-region realized histogram error in cells, worst over classes
    std::map<std::string, int> histogram_errors;
    std::vector<uint64_t> place_probe;  // first raw draws of the place stream
    bool quantile_fallback = false;     // a region was too small for its classes
};

// Threshold slicing into ordered bands; upper bounds inclusive as written.
inline Raster<int> generate_danger(const Raster<double>& u, const std::array<double, 3>& thr,
                                   const Raster<int>* mask = nullptr) {
    Raster<int> out(u.width, u.height, -1);
    for (size_t i = 0; i < u.cells.size(); ++i) {
        if (mask && mask->cells[i] < 0) continue;
        double v = u.cells[i];
        out.cells[i] = v <= thr[0] ? 0 : v <= thr[1] ? 1 : v <= thr[2] ? 2 : 3;
    }
    return out;
}

// Regional quantile mapping: within every region (cells sharing a region id
// >= 0) the field values are rank-cut to match the target histogram. Regions
// smaller than the class count fall back to global quantiles and set the
// diagnostic flag.
inline Raster<int> generate_discrete_layer(const Raster<double>& field, const Raster<int>& regions,
                                           std::span<const double> histogram,
                                           bool* fallback_flag = nullptr) {
    if (field.width != regions.width || field.height != regions.height)
        throw std::invalid_argument("generate_discrete_layer: raster size mismatch");
    Raster<int> out(field.width, field.height, -1);
    std::map<int, std::vector<size_t>> by_region;
    for (size_t i = 0; i < field.cells.size(); ++i)
        if (regions.cells[i] >= 0) by_region[regions.cells[i]].push_back(i);

    std::vector<size_t> fallback_cells;
    for (auto& [region, cells] : by_region) {
        if (cells.size() < histogram.size()) {
            if (fallback_flag) *fallback_flag = true;
            fallback_cells.insert(fallback_cells.end(), cells.begin(), cells.end());
            continue;
        }
        std::vector<double> values;
        values.reserve(cells.size());
        for (size_t i : cells) values.push_back(field.cells[i]);
        auto classes = quantile_map(values, histogram);
        for (size_t k = 0; k < cells.size(); ++k) out.cells[cells[k]] = classes[k];
    }
    if (!fallback_cells.empty()) {
        std::vector<double> values;
        for (size_t i : fallback_cells) values.push_back(field.cells[i]);
        auto classes = quantile_map(values, histogram);
        for (size_t k = 0; k < fallback_cells.size(); ++k)
            out.cells[fallback_cells[k]] = classes[k];
    }
    return out;
}

// Thinning-based inhomogeneous Poisson placement: uniform candidates over the
// unmasked area, acceptance probability equal to the intensity, same-class
// spacing enforced exactly, stopped at the quota. Returns fewer points (with
// the shortfall diagnostic set by the caller) when the quota is unreachable.
inline std::vector<Vec2> place_points(const Raster<int>& mask, const Raster<double>& intensity,
                                      int quota, double radius, double extent, Rng rng,
                                      int attempts_per_point = 200) {
    if (mask.width != intensity.width || mask.height != intensity.height)
        throw std::invalid_argument("place_points: raster size mismatch");
    std::vector<Vec2> accepted;
    if (quota <= 0) return accepted;

    // spatial hash over accepted points for the spacing check
    double cell = radius > 0 ? radius : extent;
    int hn = std::max(1, int(std::ceil(extent / cell)));
    std::vector<std::vector<int>> hash(size_t(hn) * hn);
    auto hidx = [&](Vec2 p) {
        int hx = std::min(hn - 1, int(p.x / extent * hn));
        int hy = std::min(hn - 1, int(p.y / extent * hn));
        return size_t(hy) * hn + hx;
    };
    auto spaced = [&](Vec2 p) {
        if (radius <= 0) return true;
        int hx = std::min(hn - 1, int(p.x / extent * hn));
        int hy = std::min(hn - 1, int(p.y / extent * hn));
        for (int oy = -1; oy <= 1; ++oy)
            for (int ox = -1; ox <= 1; ++ox) {
                int cx = hx + ox, cy = hy + oy;
                if (cx < 0 || cy < 0 || cx >= hn || cy >= hn) continue;
                for (int idx : hash[size_t(cy) * hn + cx])
                    if (dist2(p, accepted[size_t(idx)]) < radius * radius) return false;
            }
        return true;
    };

    // floor the budget so tiny-quota classes can still find rare masks
    long long budget = std::max<long long>((long long)quota * attempts_per_point,
                                           50LL * attempts_per_point);
    while (int(accepted.size()) < quota && budget-- > 0) {
        Vec2 p{rng.uniform(0, extent), rng.uniform(0, extent)};
        int ix = std::min(mask.width - 1, int(p.x / extent * mask.width));
        int iy = std::min(mask.height - 1, int(p.y / extent * mask.height));
        if (mask.at(ix, iy) < 0) continue;
        if (rng.next_double() >= intensity.at(ix, iy)) continue;
        if (!spaced(p)) continue;
        hash[hidx(p)].push_back(int(accepted.size()));
        accepted.push_back(p);
    }
    return accepted;
}

// Monotone map of the feature value into the band's attribute ranges plus
// band-conditioned rarity draws.
inline void derive_features(PlacedPoint& pt, const BandFeatures& bf, double feature_value,
                            Rng& rng) {
    pt.hp_mult = bf.hp_lo + feature_value * (bf.hp_hi - bf.hp_lo);
    pt.dps_mult = bf.dps_lo + feature_value * (bf.dps_hi - bf.dps_lo);
    pt.elite = rng.next_double() < bf.elite_p;
    pt.boss = rng.next_double() < bf.boss_p;
}

namespace detail {

// Min-max stretch so thresholds cut the realized value range, not the raw
// band-limited field; optionally restricted to a cell subset.
inline void minmax_raster(Raster<double>& r, const Raster<int>* mask = nullptr) {
    double lo = 1e300, hi = -1e300;
    for (size_t i = 0; i < r.cells.size(); ++i) {
        if (mask && mask->cells[i] < 0) continue;
        lo = std::min(lo, r.cells[i]);
        hi = std::max(hi, r.cells[i]);
    }
    if (!(hi - lo > 1e-12)) return;
    for (size_t i = 0; i < r.cells.size(); ++i) {
        if (mask && mask->cells[i] < 0) continue;
        r.cells[i] = (r.cells[i] - lo) / (hi - lo);
    }
}

// Layer frequencies are cycles per parameter-grid cell, so the belt width is
// stated in map-relative terms regardless of the physical extent.
inline Raster<double> render_field(const LayerParams& lp, uint64_t seed, int grid) {
    NoiseSpec spec(lp.frequency, lp.octaves, lp.persistence, lp.lacunarity, seed);
    FieldSampler f(spec, TemporalMode::drift, 0.0);
    Raster<double> out(grid, grid);
    for (int iy = 0; iy < grid; ++iy)
        for (int ix = 0; ix < grid; ++ix) out.at(ix, iy) = to_unit(f.sample(ix + 0.5, iy + 0.5));
    return out;
}

}  // namespace detail

struct SubstreamOverrides {
    std::optional<uint64_t> layout, noise, place;
};

inline GeneratedWorld generate_world(const WorldTemplate& tmpl, uint64_t master_seed,
                                     const SubstreamOverrides& over = {}) {
    tmpl.validate();
    GeneratedWorld w;
    w.tmpl = tmpl;
    w.master_seed = master_seed;
    w.layout_seed = over.layout.value_or(derive_substream(master_seed, "layout"));
    w.noise_seed = over.noise.value_or(derive_substream(master_seed, "noise"));
    w.place_seed = over.place.value_or(derive_substream(master_seed, "place"));

    const int G = tmpl.param_grid;
    const double E = tmpl.extent_m;

    // capture the head of the place stream for the isolation contract
    {
        Rng probe(derive_substream(w.place_seed, "probe"));
        for (int i = 0; i < 100; ++i) w.place_probe.push_back(probe.next_u64());
    }

    // layout substream drives the discrete layers, noise the continuous ones
    auto field_faction =
        detail::render_field(tmpl.faction_layer, derive_substream(w.layout_seed, "faction"), G);
    auto field_biome =
        detail::render_field(tmpl.biome_layer, derive_substream(w.layout_seed, "biome"), G);
    auto field_danger =
        detail::render_field(tmpl.danger_layer, derive_substream(w.layout_seed, "danger"), G);
    auto field_type =
        detail::render_field(tmpl.type_layer, derive_substream(w.layout_seed, "type"), G);
    w.feature =
        detail::render_field(tmpl.feature_layer, derive_substream(w.noise_seed, "feature"), G);
    w.height =
        detail::render_field(tmpl.height_layer, derive_substream(w.noise_seed, "height"), G);

    // island mask: cells below sea level are water, excluded from every layer
    detail::minmax_raster(w.height);
    Raster<int> land(G, G, -1);
    for (size_t i = 0; i < land.cells.size(); ++i)
        if (w.height.cells[i] >= tmpl.sea_level) land.cells[i] = 0;

    w.faction = generate_discrete_layer(field_faction, land, tmpl.faction_mix,
                                        &w.quantile_fallback);
    w.biome = generate_discrete_layer(field_biome, w.faction, tmpl.biome_mix,
                                      &w.quantile_fallback);
    detail::minmax_raster(field_danger, &land);  // thresholds cut the land's value range
    w.danger = generate_danger(field_danger, tmpl.danger_thresholds, &land);
    w.type = generate_discrete_layer(field_type, land, tmpl.type_mix, &w.quantile_fallback);

    // realized histogram errors (cells), worst class per layer
    auto hist_error = [&](const Raster<int>& layer, const Raster<int>& regions,
                          std::span<const double> mix) {
        std::map<int, std::vector<int>> counts;
        std::map<int, long long> totals;
        for (size_t i = 0; i < layer.cells.size(); ++i) {
            if (regions.cells[i] < 0 || layer.cells[i] < 0) continue;
            auto& c = counts[regions.cells[i]];
            if (c.empty()) c.assign(mix.size(), 0);
            c[size_t(layer.cells[i])]++;
            totals[regions.cells[i]]++;
        }
        int worst = 0;
        for (auto& [region, c] : counts) {
            double cum = 0;
            long long lo = 0;
            for (size_t k = 0; k < mix.size(); ++k) {
                cum += mix[k];
                long long hi = (k + 1 == mix.size()) ? totals[region]
                                                     : (long long)std::llround(cum * totals[region]);
                long long want = hi - lo;
                lo = hi;
                worst = std::max(worst, int(std::abs((long long)c[k] - want)));
            }
        }
        return worst;
    };
    Raster<int> global(G, G, -1);
    for (size_t i = 0; i < global.cells.size(); ++i)
        if (land.cells[i] >= 0) global.cells[i] = 0;
    w.histogram_errors["faction"] = hist_error(w.faction, global, tmpl.faction_mix);
    w.histogram_errors["biome"] = hist_error(w.biome, w.faction, tmpl.biome_mix);
    w.histogram_errors["type"] = hist_error(w.type, global, tmpl.type_mix);

    // content placement
    for (const auto& cls : tmpl.classes) {
        Raster<int> mask(G, G, -1);
        for (int iy = 0; iy < G; ++iy)
            for (int ix = 0; ix < G; ++ix) {
                if (land.at(ix, iy) < 0) continue;
                if (!cls.biomes.empty() &&
                    std::find(cls.biomes.begin(), cls.biomes.end(), w.biome.at(ix, iy)) ==
                        cls.biomes.end())
                    continue;
                if (!cls.danger.empty() &&
                    std::find(cls.danger.begin(), cls.danger.end(), w.danger.at(ix, iy)) ==
                        cls.danger.end())
                    continue;
                mask.at(ix, iy) = 0;
            }
        Rng place_rng(derive_substream(w.place_seed, cls.name));
        auto pts = place_points(mask, w.feature, cls.quota, cls.radius, E, place_rng);

        Rng feat_rng = place_rng.fork(1);
        ClassDiagnostics diag;
        diag.name = cls.name;
        diag.quota = cls.quota;
        diag.placed = int(pts.size());
        diag.shortfall = int(pts.size()) < cls.quota;
        double min_d2 = 1e300;
        for (size_t i = 0; i < pts.size(); ++i)
            for (size_t j = i + 1; j < pts.size(); ++j)
                min_d2 = std::min(min_d2, dist2(pts[i], pts[j]));
        diag.min_spacing = pts.size() > 1 ? std::sqrt(min_d2) : 0.0;
        w.class_diags.push_back(diag);

        for (const auto& p : pts) {
            PlacedPoint pt;
            pt.pos = p;
            pt.class_name = cls.name;
            pt.category = cls.category;
            int ix = std::min(G - 1, int(p.x / E * G));
            int iy = std::min(G - 1, int(p.y / E * G));
            pt.biome = w.biome.at(ix, iy);
            pt.danger = w.danger.at(ix, iy);
            int band = std::clamp(pt.danger, 0, 3);
            derive_features(pt, tmpl.band_features[size_t(band)], w.feature.at(ix, iy), feat_rng);
            w.points.push_back(std::move(pt));
        }
    }
    return w;
}

// ---------------- template / world I/O ----------------

inline WorldTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_template: cannot open " + path);
    nlohmann::json j;
    in >> j;
    WorldTemplate t;
    t.name = j.at("name").get<std::string>();
    t.extent_m = j.value("extent_m", 8000.0);
    t.param_grid = j.value("param_grid", 512);
    t.base_raster = j.value("base_raster", 1024);
    t.sea_level = j.value("sea_level", 0.30);

    auto layer = [&](const char* name, LayerParams def) {
        if (!j.contains("layers") || !j["layers"].contains(name)) return def;
        auto& l = j["layers"][name];
        return LayerParams{l.value("frequency", def.frequency), l.value("octaves", def.octaves),
                           l.value("persistence", def.persistence),
                           l.value("lacunarity", def.lacunarity)};
    };
    t.faction_layer = layer("faction", t.faction_layer);
    t.biome_layer = layer("biome", t.biome_layer);
    t.danger_layer = layer("danger", t.danger_layer);
    t.type_layer = layer("type", t.type_layer);
    t.feature_layer = layer("feature", t.feature_layer);
    t.height_layer = layer("height", t.height_layer);

    if (j.contains("danger_thresholds")) {
        auto v = j["danger_thresholds"].get<std::vector<double>>();
        if (v.size() != 3) throw std::runtime_error("danger_thresholds needs 3 values");
        t.danger_thresholds = {v[0], v[1], v[2]};
    }
    t.faction_names = j.at("factions").at("names").get<std::vector<std::string>>();
    t.faction_mix = j.at("factions").at("mix").get<std::vector<double>>();
    t.biome_names = j.at("biomes").at("names").get<std::vector<std::string>>();
    t.biome_mix = j.at("biomes").at("mix").get<std::vector<double>>();
    t.danger_prior = j.value("danger_prior", std::vector<double>{});
    t.type_names = j.at("types").at("names").get<std::vector<std::string>>();
    t.type_mix = j.at("types").at("mix").get<std::vector<double>>();

    auto bands = j.at("band_features");
    if (bands.size() != 4) throw std::runtime_error("band_features needs 4 bands");
    for (size_t b = 0; b < 4; ++b) {
        auto& e = bands[b];
        auto hp = e.at("hp").get<std::vector<double>>();
        auto dps = e.at("dps").get<std::vector<double>>();
        t.band_features[b] = {hp[0], hp[1], dps[0], dps[1], e.value("elite_p", 0.0),
                              e.value("boss_p", 0.0)};
    }

    auto id_of = [](const std::vector<std::string>& names, const std::string& n,
                    const char* what) {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == n) return int(i);
        throw std::runtime_error(std::string("unknown ") + what + ": " + n);
    };
    static const std::vector<std::string> band_names{"green", "yellow", "red", "black"};
    for (auto& c : j.at("classes")) {
        ContentClass cc;
        cc.name = c.at("name").get<std::string>();
        cc.category = c.at("category").get<std::string>();
        cc.quota = c.at("quota").get<int>();
        cc.radius = c.at("radius").get<double>();
        for (auto& b : c.value("biomes", std::vector<std::string>{}))
            cc.biomes.push_back(id_of(t.biome_names, b, "biome"));
        for (auto& d : c.value("danger", std::vector<std::string>{}))
            cc.danger.push_back(id_of(band_names, d, "danger band"));
        t.classes.push_back(std::move(cc));
    }
    t.validate();
    return t;
}

// Raster exports reuse the shared dump format; discrete ids are stored as
// float64 (-1 = water). Vector export is a GeoJSON FeatureCollection.
inline void write_world(const GeneratedWorld& w, const std::string& dir) {
    auto dump_int = [&](const Raster<int>& r, const std::string& name) {
        Raster<double> d(r.width, r.height);
        for (size_t i = 0; i < r.cells.size(); ++i) d.cells[i] = double(r.cells[i]);
        dump_raster(d, 0.0, fnv1a64(name), dir + "/" + name + ".raster");
    };
    dump_int(w.faction, "faction");
    dump_int(w.biome, "biome");
    dump_int(w.danger, "danger");
    dump_int(w.type, "type");
    dump_raster(w.feature, 0.0, fnv1a64("feature"), dir + "/feature.raster");
    dump_raster(w.height, 0.0, fnv1a64("height"), dir + "/height.raster");

    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::ordered_json::array();
    static const char* band_names[4] = {"green", "yellow", "red", "black"};
    for (const auto& p : w.points) {
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "Point"},
                         {"coordinates", nlohmann::ordered_json::array({p.pos.x, p.pos.y})}};
        nlohmann::ordered_json props;
        props["class"] = p.class_name;
        props["category"] = p.category;
        props["biome"] = p.biome >= 0 ? w.tmpl.biome_names[size_t(p.biome)] : "";
        props["danger"] = p.danger >= 0 ? band_names[p.danger] : "";
        props["hp_mult"] = p.hp_mult;
        props["dps_mult"] = p.dps_mult;
        props["elite"] = p.elite;
        props["boss"] = p.boss;
        f["properties"] = std::move(props);
        fc["features"].push_back(std::move(f));
    }
    std::ofstream pts(dir + "/points.geojson");
    pts << fc.dump(2) << "\n";

    nlohmann::ordered_json s;
    s["template"] = w.tmpl.name;
    s["master_seed"] = w.master_seed;
    s["substreams"] = {{"layout", w.layout_seed}, {"noise", w.noise_seed},
                       {"place", w.place_seed}};
    s["histogram_errors"] = w.histogram_errors;
    s["quantile_fallback"] = w.quantile_fallback;
    auto classes = nlohmann::ordered_json::array();
    for (const auto& d : w.class_diags)
        classes.push_back({{"name", d.name},
                           {"quota", d.quota},
                           {"placed", d.placed},
                           {"shortfall", d.shortfall},
                           {"min_spacing", d.min_spacing}});
    s["classes"] = std::move(classes);
    std::ofstream sum(dir + "/summary.json");
    sum << s.dump(2) << "\n";
}

}  // namespace fieldsim
