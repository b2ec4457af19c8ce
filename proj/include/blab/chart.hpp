#pragma once

#include "blab/experiments.hpp"

#include <string>
#include <vector>

namespace blab {

/// Standalone SVG line chart of mean_nn_distance against iteration, one
/// circle per record. Output bytes depend only on the records.
std::string render_distance_chart(const std::vector<IterationRecord>& records, const std::string& title = {});

}  // namespace blab
