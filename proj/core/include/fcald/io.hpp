#pragma once

#include <string>

#include <json.hpp>

#include "fcald/grid.hpp"

namespace fcald {

struct FieldCsv {
    ScalarField field;
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};

/// Field CSV format: header line "nx,ny,x0,y0,x1,y1", then ny rows (j
/// ascending) of nx comma-separated values. Doubles printed with %.17g so a
/// round trip is bit exact.
void write_field_csv(const std::string& path, const GridSpec& g, const ScalarField& f);
FieldCsv read_field_csv(const std::string& path);

/// 8-bit binary PGM (P5) with linear min-max scaling; the scaling is recorded
/// in a sidecar JSON next to the image.
void write_field_pgm(const std::string& path, const ScalarField& f);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// %.17g formatting used everywhere numbers land in text artifacts.
std::string fmt_double(double x);

}  // namespace fcald
