#pragma once

#include <string>
#include <vector>

#include "sdfmap/config.hpp"
#include "sdfmap/dataset_io.hpp"

namespace sdfmap {

// Scans in filename order zipped with pose lines; count mismatch is an
// error. Applies max-range filtering and the optional voxel pre-filter.
std::vector<Scan> load_scans(const RunConfig& config);

void run_map_batch(const RunConfig& config);
void run_map_incremental(const RunConfig& config);
void run_mesh(const RunConfig& config);
void run_eval(const RunConfig& config);
void run_make_synthetic(const RunConfig& config);

}  // namespace sdfmap
