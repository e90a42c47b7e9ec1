#pragma once

#include "lotus/types.hpp"

#include <string>
#include <vector>

namespace lotus {

// What ingestion had to clean; surfaced in run metadata.
struct IngestInfo {
    std::vector<std::string> feature_names;
    int imputed_cells = 0;  // non-numeric or NaN cells replaced by the column mean
    int label_column = -1;  // position of the label column in the file, -1 if absent
};

// Header row required. The column whose header equals label_col (default
// "label") becomes the 0/1 label vector; every other column is a feature.
// Non-numeric and NaN feature cells are imputed with the mean of the column's
// valid cells (0 when a column has none). Label cells must be exactly 0 or 1.
Dataset read_dataset_csv(const std::string& path, IngestInfo* info = nullptr,
                         const std::string& label_col = "label");

// Header f0..f{d-1} plus a trailing "label" column when labels are present.
// Values carry 17 significant digits so doubles survive a round-trip.
void write_dataset_csv(const std::string& path, const Dataset& ds);

}  // namespace lotus
