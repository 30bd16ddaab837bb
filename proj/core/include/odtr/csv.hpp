#pragma once

#include <string>
#include <vector>

#include "odtr/dataset.hpp"

namespace odtr {

struct IngestReport {
  TwoStageDataset data;
  // original y2 label for each remapped category 1..K (label_map[k-1])
  std::vector<int> label_map;
  bool relabeled = false;
};

// Parses the dataset CSV schema: header row with columns
// x1_<name>... , a1, x2_<name>... , a2, y2. Throws DataError with row/column
// diagnostics on any violation.
IngestReport parse_dataset_csv(const std::string& text);

IngestReport load_dataset_csv(const std::string& path);

std::string dataset_to_csv(const TwoStageDataset& data);

}  // namespace odtr
