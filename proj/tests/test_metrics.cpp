#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fieldsim/metrics.hpp"
#include "fieldsim/rng.hpp"

using namespace fieldsim;

TEST_CASE("bins reject bad edges and locate distances") {
    CHECK_THROWS_AS(DistanceBins({5.0}), std::invalid_argument);
    CHECK_THROWS_AS(DistanceBins({0.0, 0.0}), std::invalid_argument);
    DistanceBins b({0, 10, 20});
    CHECK(b.index(0.0) == 0);
    CHECK(b.index(9.9999) == 0);
    CHECK(b.index(10.0) == 1);
    CHECK(b.index(20.0) == -1);
    CHECK(b.center(0) == 5.0);
}

TEST_CASE("S_dir is 1 for perfectly aligned headings") {
    Rng rng(1);
    std::vector<Vec2> pos(200);
    std::vector<double> th(200, 1.234), v(200, 1.0);
    for (auto& p : pos) p = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
    auto st = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    for (size_t b = 0; b < st.s_dir.size(); ++b) {
        if (!st.s_dir[b]) continue;
        CHECK(*st.s_dir[b] == Catch::Approx(1.0).margin(1e-12));
        CHECK(*st.gamma_theta[b] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("S_dir null: i.i.d. uniform headings stay near zero") {
    Rng rng(2);
    const int n = 10000;
    std::vector<Vec2> pos(n);
    std::vector<double> th(n), v(n, 1.0);
    for (int i = 0; i < n; ++i) {
        pos[i] = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
        th[i] = rng.uniform(0, kTwoPi);
    }
    auto st = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    for (size_t b = 0; b < st.s_dir.size(); ++b) {
        REQUIRE(st.s_dir[b].has_value());
        CHECK(std::abs(*st.s_dir[b]) < 0.05);
    }
}

TEST_CASE("gamma_v vanishes when speeds are equal") {
    Rng rng(3);
    std::vector<Vec2> pos(100);
    std::vector<double> th(100), v(100, 2.5);
    for (int i = 0; i < 100; ++i) {
        pos[i] = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
        th[i] = rng.uniform(0, kTwoPi);
    }
    auto st = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    for (auto g : st.gamma_v)
        if (g) CHECK(*g == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("spatial stats are invariant under agent relabeling") {
    Rng rng(4);
    const int n = 300;
    std::vector<Vec2> pos(n);
    std::vector<double> th(n), v(n);
    for (int i = 0; i < n; ++i) {
        pos[i] = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
        th[i] = rng.uniform(0, kTwoPi);
        v[i] = rng.uniform(0.5, 1.5);
    }
    auto a = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    // reverse the labels
    std::vector<Vec2> pos2(pos.rbegin(), pos.rend());
    std::vector<double> th2(th.rbegin(), th.rend()), v2(v.rbegin(), v.rend());
    auto b = spatial_stats(pos2, th2, v2, DistanceBins(), 1000.0);
    for (size_t k = 0; k < a.s_dir.size(); ++k) {
        REQUIRE(a.s_dir[k].has_value() == b.s_dir[k].has_value());
        if (a.s_dir[k]) CHECK(*a.s_dir[k] == Catch::Approx(*b.s_dir[k]).margin(1e-9));
        if (a.c_v[k] && b.c_v[k]) CHECK(*a.c_v[k] == Catch::Approx(*b.c_v[k]).margin(1e-9));
    }
}

TEST_CASE("gamma_theta and S_dir agree on the same pairs") {
    // gamma = (1/2)E[dtheta^2] is 0 exactly when S_dir = 1 on the same bin.
    Rng rng(5);
    const int n = 400;
    std::vector<Vec2> pos(n);
    std::vector<double> th(n), v(n, 1.0);
    for (int i = 0; i < n; ++i) {
        pos[i] = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
        th[i] = rng.uniform(0, 0.3);  // tightly aligned
    }
    auto st = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    for (size_t b = 0; b < st.s_dir.size(); ++b) {
        if (!st.s_dir[b]) continue;
        // small-angle regime: 1 - S_dir ~ gamma_theta
        CHECK(1.0 - *st.s_dir[b] == Catch::Approx(*st.gamma_theta[b]).epsilon(0.02));
    }
}

TEST_CASE("empty bins are undefined, not zero") {
    std::vector<Vec2> pos{{0, 0}, {1, 0}};
    std::vector<double> th{0.0, 0.0}, v{1.0, 1.0};
    auto st = spatial_stats(pos, th, v, DistanceBins(), 1000.0);
    CHECK(st.s_dir[0].has_value());
    CHECK_FALSE(st.s_dir[5].has_value());
    CHECK_THROWS_AS(
        spatial_stats(std::vector<Vec2>{{0, 0}}, std::vector<double>{0.0},
                      std::vector<double>{1.0}, DistanceBins(), 1000.0),
        std::invalid_argument);
}

TEST_CASE("jerk of constant-velocity agents is zero") {
    std::vector<std::vector<Vec2>> vel(3, std::vector<Vec2>(50, Vec2{1.0, -0.5}));
    auto js = jerk_stats(vel);
    CHECK(js.mean == 0.0);
    CHECK(js.p95 == 0.0);
    CHECK(js.samples == 3 * 48);
}

TEST_CASE("jerk picks up acceleration changes") {
    std::vector<std::vector<Vec2>> vel(1);
    for (int t = 0; t < 10; ++t) vel[0].push_back({double(t * t), 0.0});
    auto js = jerk_stats(vel);  // second difference of t^2 is constant 2
    CHECK(js.mean == Catch::Approx(2.0));
}

TEST_CASE("HF/LF of a low-frequency sinusoid is near zero") {
    std::vector<double> s(2048);
    for (size_t t = 0; t < s.size(); ++t) s[t] = 10.0 + std::sin(kTwoPi * double(t) / 128.0);
    auto r = hf_lf_ratio(s, 256);
    REQUIRE(r.hf_lf.has_value());
    CHECK(*r.hf_lf < 1e-6);
    CHECK(r.windowed);
}

TEST_CASE("HF/LF of white noise matches the band-width ratio") {
    // Monte-Carlo oracle: white noise has flat expected spectrum, so the ratio
    // approaches |HF band| / |LF band| = 64/32 = 2.
    Rng rng(6);
    std::vector<double> s(256 * 64);
    for (auto& x : s) x = rng.next_normal();
    auto r = hf_lf_ratio(s, 256);
    REQUIRE(r.hf_lf.has_value());
    CHECK(*r.hf_lf == Catch::Approx(2.0).margin(0.15));
}

TEST_CASE("short series fall back to a flagged single periodogram") {
    std::vector<double> s(100);
    for (size_t t = 0; t < s.size(); ++t) s[t] = std::sin(0.3 * double(t));
    auto r = hf_lf_ratio(s, 256);
    CHECK(r.hf_lf.has_value());
    CHECK_FALSE(r.windowed);
}

TEST_CASE("polarization endpoints") {
    std::vector<double> th1(10, 0.7), v1(10, 1.0);
    CHECK(diversity_stats(th1, v1).polarization == Catch::Approx(1.0));
    std::vector<double> th2{0.0, kPi}, v2{1.0, 1.0};
    CHECK(diversity_stats(th2, v2).polarization == Catch::Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(diversity_stats({}, {}), std::invalid_argument);
}

TEST_CASE("heading entropy of uniform headings approaches ln 36") {
    Rng rng(7);
    const int n = 100000;
    std::vector<double> th(n), v(n, 1.0);
    for (auto& t : th) t = rng.uniform(0, kTwoPi);
    auto d = diversity_stats(th, v);
    CHECK(d.heading_entropy == Catch::Approx(std::log(36.0)).margin(0.01));
}

TEST_CASE("speed moments") {
    std::vector<double> th(4, 0.0), v{1.0, 2.0, 3.0, 4.0};
    auto d = diversity_stats(th, v);
    CHECK(d.speed_mean == Catch::Approx(2.5));
    CHECK(d.speed_std == Catch::Approx(std::sqrt(1.25)));
    CHECK(d.speed_skew == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("static agents cover exactly their occupied cells") {
    std::vector<std::vector<Vec2>> traj(80, std::vector<Vec2>{{5.0, 5.0}, {500.0, 500.0}});
    auto ps = coverage_and_paths(traj, 1000.0, 50, 60);
    CHECK(ps.visited_fraction == Catch::Approx(2.0 / 2500.0));
    CHECK(ps.capped);  // zero chord for static agents
}

TEST_CASE("straight movers have tortuosity 1") {
    std::vector<std::vector<Vec2>> traj;
    for (int t = 0; t < 61; ++t) traj.push_back({{10.0 + t, 20.0}});
    auto ps = coverage_and_paths(traj, 1000.0, 50, 60);
    CHECK(ps.tortuosity_mean == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random walkers have tortuosity well above 1") {
    Rng rng(8);
    const int n = 1000;
    std::vector<std::vector<Vec2>> traj(61, std::vector<Vec2>(n));
    for (int i = 0; i < n; ++i) traj[0][i] = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
    for (int t = 1; t <= 60; ++t)
        for (int i = 0; i < n; ++i) {
            double a = rng.uniform(0, kTwoPi);
            traj[t][i] = {wrap_coord(traj[t - 1][i].x + std::cos(a), 1000.0),
                          wrap_coord(traj[t - 1][i].y + std::sin(a), 1000.0)};
        }
    auto ps = coverage_and_paths(traj, 1000.0, 50, 60);
    CHECK(ps.tortuosity_mean > 1.5);
}

TEST_CASE("perfectly periodic events: CV 0, burstiness -1") {
    std::vector<double> times;
    for (int k = 0; k < 500; ++k) times.push_back(10.0 * k);
    auto es = event_stats(times, 0, 5000);
    REQUIRE(es.isi_cv.has_value());
    CHECK(*es.isi_cv == Catch::Approx(0.0).margin(1e-12));
    CHECK(*es.burstiness == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("homogeneous Poisson stream: CV ~ 1, Fano ~ 1") {
    Rng rng(9);
    std::vector<double> times;
    double t = 0.0, rate = 0.5;
    while (times.size() < 100000) {
        t += -std::log(1.0 - rng.next_double()) / rate;
        times.push_back(t);
    }
    long long t_end = (long long)std::ceil(times.back());
    auto es = event_stats(times, 0, t_end);
    REQUIRE(es.isi_cv.has_value());
    CHECK(*es.isi_cv == Catch::Approx(1.0).margin(0.02));
    REQUIRE(es.fano.has_value());
    CHECK(*es.fano == Catch::Approx(1.0).margin(0.15));
    CHECK(*es.burstiness == Catch::Approx(0.0).margin(0.02));
}

TEST_CASE("constant counts per window give Fano 0") {
    std::vector<double> times;
    for (int k = 0; k < 3000; ++k) times.push_back(double(k));  // one event every tick
    auto es = event_stats(times, 0, 3000);
    REQUIRE(es.fano.has_value());
    CHECK(*es.fano == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("fewer than two events leaves ISI stats undefined") {
    std::vector<double> times{5.0};
    auto es = event_stats(times, 0, 100);
    CHECK_FALSE(es.isi_cv.has_value());
    CHECK(es.n_events == 1);
}

TEST_CASE("even regional counts give CV 0 and undefined I") {
    std::vector<double> counts(64, 7.0);
    auto b = spatial_balance(counts, 8, 8);
    CHECK(b.regional_cv == 0.0);
    CHECK_FALSE(b.morans_i.has_value());
}

TEST_CASE("checkerboard pattern gives Moran's I of -1") {
    std::vector<double> counts(64);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) counts[y * 8 + x] = ((x + y) % 2) ? 10.0 : 2.0;
    auto b = spatial_balance(counts, 8, 8);
    REQUIRE(b.morans_i.has_value());
    CHECK(*b.morans_i == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("Moran's I null: uniform points average near zero") {
    // One 8x8 draw of I has sd ~ 0.08, so the oracle averages 20 draws.
    Rng rng(10);
    double acc = 0.0;
    const int draws = 20;
    for (int d = 0; d < draws; ++d) {
        std::vector<double> counts(64, 0.0);
        for (int i = 0; i < 10000; ++i) {
            int x = int(rng.next_below(8)), y = int(rng.next_below(8));
            counts[y * 8 + x] += 1.0;
        }
        auto b = spatial_balance(counts, 8, 8);
        REQUIRE(b.morans_i.has_value());
        acc += *b.morans_i;
    }
    CHECK(std::abs(acc / draws) < 0.05);
}

TEST_CASE("Ripley K on CSR stays near pi r^2 (toroidal)") {
    Rng rng(11);
    const int n = 1000;
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
    std::vector<double> radii{20, 40, 60, 80};
    auto pp = point_process_stats(pts, radii, 1000.0, true);
    REQUIRE(pp.defined);
    for (size_t r = 0; r < radii.size(); ++r)
        CHECK(pp.k_ratio[r] == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("Ripley K on CSR with border correction (bounded)") {
    Rng rng(12);
    const int n = 1000;
    std::vector<Vec2> pts(n);
    for (auto& p : pts) p = {rng.uniform(0, 1000), rng.uniform(0, 1000)};
    std::vector<double> radii{20, 40, 60};
    auto pp = point_process_stats(pts, radii, 1000.0, false);
    for (size_t r = 0; r < radii.size(); ++r)
        CHECK(pp.k_ratio[r] == Catch::Approx(1.0).margin(0.1));
}

TEST_CASE("pair correlation shows the lattice exclusion gap") {
    std::vector<Vec2> pts;
    const double step = 1000.0 / 32.0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) pts.push_back({(x + 0.5) * step, (y + 0.5) * step});
    std::vector<double> radii{5, 10, 15};
    auto pp = point_process_stats(pts, radii, 1000.0, true, 5.0);
    for (size_t r = 0; r < radii.size(); ++r) CHECK(pp.g[r] < 0.05);
    CHECK(pp.mean_nn == Catch::Approx(step).epsilon(1e-9));
}

TEST_CASE("a single cluster inflates K at small radii") {
    Rng rng(13);
    std::vector<Vec2> pts(500);
    for (auto& p : pts) p = {500.0 + rng.uniform(-2, 2), 500.0 + rng.uniform(-2, 2)};
    std::vector<double> radii{10.0};
    auto pp = point_process_stats(pts, radii, 1000.0, true);
    CHECK(pp.k_ratio[0] > 100.0);
}

TEST_CASE("too few points flags the point-process stats") {
    std::vector<Vec2> pts(5, Vec2{1, 1});
    auto pp = point_process_stats(pts, std::vector<double>{5.0}, 100.0, true);
    CHECK_FALSE(pp.defined);
}

TEST_CASE("coverage distance against a quadrature oracle") {
    // Single entity at the center of a side-2 square. Oracle: 2D Simpson
    // quadrature of the distance integrand.
    const int m = 400;
    double h = 2.0 / m, acc = 0.0;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            double wx = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
            double wy = (j == 0 || j == m) ? 1 : (j % 2 ? 4 : 2);
            double x = i * h - 1.0, y = j * h - 1.0;
            acc += wx * wy * std::sqrt(x * x + y * y);
        }
    double oracle = acc * h * h / 9.0 / 4.0;  // divide by area

    Rng rng(14);
    std::vector<Vec2> probes(4000);
    for (auto& p : probes) p = {rng.uniform(0, 2), rng.uniform(0, 2)};
    std::vector<Vec2> entity{{1.0, 1.0}};
    auto cd = coverage_distance(entity, probes);
    REQUIRE(cd.has_value());
    CHECK(*cd == Catch::Approx(oracle).epsilon(0.02));
}

TEST_CASE("coverage distance edge cases") {
    std::vector<Vec2> probes{{3.0, 4.0}};
    std::vector<Vec2> entities{{3.0, 4.0}};
    CHECK(*coverage_distance(entities, probes) == 0.0);
    CHECK_FALSE(coverage_distance({}, probes).has_value());

    // Denser entity sets shrink the mean distance.
    Rng rng(15);
    std::vector<Vec2> pr(2000), few(10), many(100);
    for (auto& p : pr) p = {rng.uniform(0, 100), rng.uniform(0, 100)};
    for (auto& p : few) p = {rng.uniform(0, 100), rng.uniform(0, 100)};
    for (auto& p : many) p = {rng.uniform(0, 100), rng.uniform(0, 100)};
    CHECK(*coverage_distance(many, pr) < *coverage_distance(few, pr));
}

TEST_CASE("front coherence approaches 1 when counts follow the driver") {
    Rng rng(16);
    const size_t T = 60, cycles = 40;
    std::vector<double> driver(T * cycles), counts(T * cycles);
    for (size_t t = 0; t < driver.size(); ++t) {
        driver[t] = 1.5 + std::sin(kTwoPi * double(t % T) / T);
        double lam = 200.0 * driver[t];  // high rate: relative noise vanishes
        double x = 0.0;                  // Poisson via normal approximation
        x = lam + std::sqrt(lam) * rng.next_normal();
        counts[t] = std::max(0.0, x);
    }
    auto c = front_coherence(counts, driver, T);
    REQUIRE(c.has_value());
    CHECK(*c > 0.9);
}

TEST_CASE("front coherence of independent events is near zero") {
    Rng rng(17);
    const size_t T = 100, cycles = 100;
    std::vector<double> driver(T * cycles), counts(T * cycles);
    for (size_t t = 0; t < driver.size(); ++t) {
        driver[t] = 1.0 + std::sin(kTwoPi * double(t % T) / T);
        counts[t] = double(rng.next_below(10));
    }
    auto c = front_coherence(counts, driver, T);
    REQUIRE(c.has_value());
    CHECK(std::abs(*c) < 0.05);
}

TEST_CASE("anti-phase events give negative coherence") {
    const size_t T = 60, cycles = 10;
    std::vector<double> driver(T * cycles), counts(T * cycles);
    for (size_t t = 0; t < driver.size(); ++t) {
        double phase = double(t % T) / T;
        driver[t] = std::sin(kTwoPi * phase);
        counts[t] = phase > 0.5 ? 5.0 : 0.0;  // concentrated where driver is negative
    }
    auto c = front_coherence(counts, driver, T);
    REQUIRE(c.has_value());
    CHECK(*c < -0.3);
}

TEST_CASE("flat series leave coherence undefined") {
    std::vector<double> counts(120, 3.0), driver(120);
    for (size_t t = 0; t < driver.size(); ++t) driver[t] = std::sin(kTwoPi * double(t % 60) / 60);
    CHECK_FALSE(front_coherence(counts, driver, 60).has_value());
    CHECK_THROWS_AS(front_coherence(counts, std::vector<double>{1.0}, 60),
                    std::invalid_argument);
}

TEST_CASE("second difference energy") {
    std::vector<double> lin{0, 1, 2, 3, 4, 5};
    CHECK(*second_difference_energy(lin) == Catch::Approx(0.0).margin(1e-15));
    std::vector<double> alt{0, 1, 0, 1, 0, 1};
    CHECK(*second_difference_energy(alt) == Catch::Approx(4.0));
}
