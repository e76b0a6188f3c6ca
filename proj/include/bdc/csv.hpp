#pragma once

#include "bdc/common.hpp"

#include <filesystem>

namespace bdc::csv {

struct ReadOptions {
  bool has_header = false;
};

/// Dense numeric CSV. Every row must have the same number of fields.
Matrix read_matrix(const std::filesystem::path& path, const ReadOptions& opts = {});

/// Writes with 17 significant digits so values round-trip exactly.
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// `index,label` with a header line; both columns one-based.
void write_labels(const std::filesystem::path& path, const Labels& labels);

/// Accepts either the `index,label` layout or a single label column.
/// Labels are returned as read (not shifted).
std::vector<long> read_label_column(const std::filesystem::path& path);

}  // namespace bdc::csv
