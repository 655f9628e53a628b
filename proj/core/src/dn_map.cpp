#include "fcald/dn_map.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fcald/io.hpp"

namespace fcald {

BoundaryFunction neumann_trace(const BoundaryIndex& b, const ScalarField& u) {
    const GridSpec& g = b.grid;
    if (g.nx < 3 || g.ny < 3) throw ConfigError("neumann_trace: grid too thin");
    BoundaryFunction out(b.count());
    const double i2h = 1.0 / (2.0 * g.h);
    for (int k = 0; k < b.count(); ++k) {
        if (b.corner[k]) continue;  // undefined normal: excluded, left at 0
        const int di = -b.normal[k][0], dj = -b.normal[k][1];  // inward
        const int i = b.i[k], j = b.j[k];
        out.values[k] =
            (3.0 * u(i, j) - 4.0 * u(i + di, j + dj) + u(i + 2 * di, j + 2 * dj)) * i2h;
    }
    return out;
}

double boundary_pairing(const BoundaryIndex& b, const BoundaryFunction& g,
                        const BoundaryFunction& h) {
    if (g.count() != b.count() || h.count() != b.count())
        throw ConfigError("boundary_pairing: size mismatch with boundary index");
    double s = 0.0;
    for (int k = 0; k < b.count(); ++k) {
        if (b.corner[k]) continue;
        s += b.weight[k] * g.values[k] * h.values[k];
    }
    return s;
}

double dn_pairing_weak(const GridSpec& g, const ScalarField& uf, const ScalarField& ug) {
    return dirichlet_form(g, uf, ug);
}

BoundaryFunction dn_apply(const NonlinearitySpec& spec, const GridSpec& g,
                          const BoundaryFunction& f, const ForwardOptions& opts,
                          const PoissonSolver* harmonic) {
    ForwardSolution sol = solve_semilinear(spec, g, f, opts, harmonic);
    BoundaryFunction out = neumann_trace(boundary_index(g), sol.u);
    if (f.mask) {
        out.mask = f.mask;
        out.apply_mask();
    }
    return out;
}

uint64_t fnv1a(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fingerprint(const nlohmann::json& j) {
    const std::string s = j.dump();
    return fnv1a(s.data(), s.size());
}

namespace {

nlohmann::json bf_to_json(const BoundaryFunction& f) {
    nlohmann::json j;
    j["f"] = f.values;
    if (f.mask)
        j["mask"] = f.mask->positions;
    else
        j["mask"] = nullptr;
    return j;
}

}  // namespace

void DNDataset::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    nlohmann::json header{{"grid_fp", grid_fp}, {"spec_fp", spec_fp},
                          {"records", records.size()}};
    out << header.dump() << '\n';
    for (const auto& rec : records) {
        nlohmann::json j = bf_to_json(rec.f);
        j["df"] = rec.df.values;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

DNDataset DNDataset::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty dataset: " + path);
    nlohmann::json header = nlohmann::json::parse(line);
    DNDataset ds;
    ds.grid_fp = header.at("grid_fp").get<uint64_t>();
    ds.spec_fp = header.at("spec_fp").get<uint64_t>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        DNRecord rec;
        rec.f.values = j.at("f").get<std::vector<double>>();
        rec.df.values = j.at("df").get<std::vector<double>>();
        if (!j.at("mask").is_null()) {
            SupportMask m;
            m.positions = j.at("mask").get<std::vector<int>>();
            rec.f.mask = m;
            rec.df.mask = std::move(m);
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

}  // namespace fcald
