#include "fcald/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fcald {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_field_csv(const std::string& path, const GridSpec& g, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << g.nx << ',' << g.ny << ',' << fmt_double(g.x0) << ',' << fmt_double(g.y0) << ','
        << fmt_double(g.x0 + g.width()) << ',' << fmt_double(g.y0 + g.width()) << '\n';
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (i) out << ',';
            out << fmt_double(f(i, j));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

FieldCsv read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty field CSV: " + path);
    FieldCsv r;
    int nx, ny;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf", &nx, &ny, &r.x0, &r.y0, &r.x1,
                    &r.y1) != 6)
        throw IoError("bad field CSV header in " + path);
    r.field.nx = nx;
    r.field.ny = ny;
    r.field.v.reserve(static_cast<size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        if (!std::getline(in, line)) throw IoError("truncated field CSV: " + path);
        std::istringstream ss(line);
        std::string cell;
        for (int i = 0; i < nx; ++i) {
            if (!std::getline(ss, cell, ',')) throw IoError("short row in " + path);
            r.field.v.push_back(std::stod(cell));
        }
    }
    return r;
}

void write_field_pgm(const std::string& path, const ScalarField& f) {
    double lo = f.v.empty() ? 0.0 : f.v[0], hi = lo;
    for (double x : f.v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double span = (hi > lo) ? hi - lo : 1.0;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << f.nx << ' ' << f.ny << "\n255\n";
    for (int j = f.ny - 1; j >= 0; --j)  // image rows top-down
        for (int i = 0; i < f.nx; ++i) {
            const int v = static_cast<int>(255.0 * (f(i, j) - lo) / span + 0.5);
            out.put(static_cast<char>(std::clamp(v, 0, 255)));
        }
    write_json(path + ".json", {{"min", lo}, {"max", hi}});
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace fcald
