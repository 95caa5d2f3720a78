#pragma once

#include <filesystem>
#include <string>

#include "shapelab/fields.hpp"
#include "shapelab/geometry.hpp"
#include "shapelab/grid.hpp"

namespace shapelab {

// Domain files are self-describing JSON documents:
//   {"format":"shapelab-domain","version":1,"dimension":N,
//    "cells_per_axis":n,"spacing":h,"origin":[...],
//    "mask_rle":[[e0,f0,e1,f1,...], ...]}
// mask_rle holds one row per line along the last axis, in row-major order of
// the leading indices; runs alternate unoccupied/occupied starting with an
// unoccupied count (possibly 0). Star boundaries:
//   {"format":"shapelab-star","version":1,"R":..., "center":[...],
//    "cos":[a0..aK],"sin":[0,b1..bK]}
// Fields travel in the same container as their domain:
//   {"format":"shapelab-field","version":1, <grid fields>, "values":[...]}
// with values listed for the occupied cells in flat row-major order.

std::string domain_to_text(const GridDomain& dom);
GridDomain domain_from_text(const std::string& text);

std::string star_to_text(const StarBoundary& b);
StarBoundary star_from_text(const std::string& text);

std::string field_to_text(const ScalarField& f, const GridDomain& dom);
ScalarField field_from_text(const std::string& text, const GridDomain& dom);

void save_domain(const std::filesystem::path& path, const GridDomain& dom);
GridDomain load_domain(const std::filesystem::path& path);
void save_star(const std::filesystem::path& path, const StarBoundary& b);
StarBoundary star_from_file(const std::filesystem::path& path);

/// Reads either a domain or a star file; stars are rasterized onto `spec`.
GridDomain load_domain_any(const std::filesystem::path& path,
                           const GridSpec& spec);
bool file_is_star(const std::filesystem::path& path);

/// Shortest round-trip formatting for CSV cells (deterministic).
std::string format_double(double v);

}  // namespace shapelab
