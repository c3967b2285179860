#pragma once
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fieldsim/rng.hpp"

namespace fieldsim {

// Row-major grid. Origin at the southwest corner; cell (ix, iy) covers
// [ix*cell, (ix+1)*cell) x [iy*cell, (iy+1)*cell) in world units.
template <typename T>
struct Raster {
    int width = 0, height = 0;
    std::vector<T> cells;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), cells(size_t(w) * h, fill) {}

    T& at(int ix, int iy) { return cells[size_t(iy) * width + ix]; }
    const T& at(int ix, int iy) const { return cells[size_t(iy) * width + ix]; }
    size_t size() const { return cells.size(); }
};

// Dump format: one text header line "fieldsim-raster <width> <height> <t> <spec_hash>\n"
// followed by width*height little-endian float64 values, row-major from the
// southwest corner.
inline void dump_raster(const Raster<double>& r, double t, uint64_t spec_hash,
                        const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("dump_raster: cannot open " + path);
    char head[128];
    std::snprintf(head, sizeof head, "fieldsim-raster %d %d %.17g %016llx\n", r.width, r.height, t,
                  (unsigned long long)spec_hash);
    out << head;
    out.write(reinterpret_cast<const char*>(r.cells.data()),
              std::streamsize(r.cells.size() * sizeof(double)));
}

inline Raster<double> load_raster(const std::string& path, double* t_out = nullptr,
                                  uint64_t* hash_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_raster: cannot open " + path);
    std::string magic;
    int w = 0, h = 0;
    double t = 0.0;
    std::string hash_hex;
    in >> magic >> w >> h >> t >> hash_hex;
    if (magic != "fieldsim-raster" || w <= 0 || h <= 0)
        throw std::runtime_error("load_raster: bad header in " + path);
    in.ignore(1);  // newline
    Raster<double> r(w, h);
    in.read(reinterpret_cast<char*>(r.cells.data()), std::streamsize(r.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_raster: truncated data in " + path);
    if (t_out) *t_out = t;
    if (hash_out) *hash_out = std::stoull(hash_hex, nullptr, 16);
    return r;
}

}  // namespace fieldsim
