#include "fcald/profiles.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "fcald/io.hpp"

namespace fcald {

namespace {

// "name:key=val,key=(a,b),..." -> (name, {key: "val"|"(a,b)"})
struct Parsed {
    std::string name;
    std::map<std::string, std::string> kv;
    std::string bare;  // single positional value, e.g. "constant:1.0"
};

Parsed parse_profile(const std::string& s) {
    Parsed p;
    auto colon = s.find(':');
    p.name = s.substr(0, colon);
    if (colon == std::string::npos) return p;
    std::string rest = s.substr(colon + 1);
    // split on commas not inside parentheses
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char c : rest) {
        if (c == '(') depth++;
        if (c == ')') depth--;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    for (const auto& part : parts) {
        auto eq = part.find('=');
        if (eq == std::string::npos)
            p.bare = part;
        else
            p.kv[part.substr(0, eq)] = part.substr(eq + 1);
    }
    return p;
}

std::pair<double, double> parse_point(const std::string& s) {
    double a, b;
    if (std::sscanf(s.c_str(), "(%lf,%lf)", &a, &b) != 2)
        throw ConfigError("profile: bad point '" + s + "'");
    return {a, b};
}

double get_num(const Parsed& p, const std::string& key, double dflt) {
    auto it = p.kv.find(key);
    return it == p.kv.end() ? dflt : std::stod(it->second);
}

}  // namespace

ScalarField synth_profile(const GridSpec& g, const std::string& profile) {
    if (profile.find('/') != std::string::npos ||
        (profile.size() > 4 && profile.substr(profile.size() - 4) == ".csv")) {
        ScalarField f = read_field_csv(profile).field;
        if (f.nx != g.nx || f.ny != g.ny)
            throw ConfigError("field CSV '" + profile + "' does not match grid shape");
        return f;
    }
    Parsed p = parse_profile(profile);
    if (p.name == "constant") {
        const double c = p.bare.empty() ? get_num(p, "value", 1.0) : std::stod(p.bare);
        return ScalarField(g, c);
    }
    if (p.name == "gaussian") {
        auto [cx, cy] = parse_point(p.kv.count("center") ? p.kv.at("center") : "(0.5,0.5)");
        const double sig = get_num(p, "sigma", 0.15), amp = get_num(p, "amp", 1.0);
        return sample(g, [=](double x, double y) {
            const double dx = x - cx, dy = y - cy;
            return amp * std::exp(-(dx * dx + dy * dy) / (2 * sig * sig));
        });
    }
    if (p.name == "bumps") {
        const double sig = get_num(p, "sigma", 0.12), amp = get_num(p, "amp", 1.0);
        std::vector<std::pair<double, double>> centers;
        std::string cs = p.kv.count("centers") ? p.kv.at("centers") : "(0.3,0.35)|(0.7,0.6)";
        size_t pos = 0;
        while (pos < cs.size()) {
            auto bar = cs.find('|', pos);
            centers.push_back(parse_point(cs.substr(pos, bar - pos)));
            pos = (bar == std::string::npos) ? cs.size() : bar + 1;
        }
        return sample(g, [=](double x, double y) {
            double s = 0.0;
            for (auto [cx, cy] : centers) {
                const double dx = x - cx, dy = y - cy;
                s += amp * std::exp(-(dx * dx + dy * dy) / (2 * sig * sig));
            }
            return s;
        });
    }
    throw ConfigError("unknown field profile '" + profile + "'");
}

BoundaryFunction boundary_profile(const BoundaryIndex& b, const std::string& profile) {
    Parsed p = parse_profile(profile);
    BoundaryFunction f(b.count());
    if (p.name == "constant") {
        const double c = p.bare.empty() ? get_num(p, "value", 1.0) : std::stod(p.bare);
        for (double& x : f.values) x = c;
        return f;
    }
    const double freq = get_num(p, "freq", 1.0), amp = get_num(p, "amp", 1.0);
    if (p.name == "cos") {
        for (int k = 0; k < b.count(); ++k) f.values[k] = amp * std::cos(freq * M_PI * b.arc[k]);
        return f;
    }
    if (p.name == "sin") {
        for (int k = 0; k < b.count(); ++k) f.values[k] = amp * std::sin(freq * M_PI * b.arc[k]);
        return f;
    }
    throw ConfigError("unknown boundary profile '" + profile + "'");
}

}  // namespace fcald
