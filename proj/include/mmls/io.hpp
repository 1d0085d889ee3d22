#pragma once

#include <optional>
#include <string>

#include "mmls/point_cloud.hpp"

namespace mmls {

/// One point per row, comma-separated, optional first line `# n=<n> d=<d>`.
/// Values must be finite; violations raise a parse error carrying the
/// 1-based row number. Blank lines are ignored.
PointCloud read_cloud_csv(const std::string& path);

/// Intrinsic dimension recorded in the header of the file named by `path`,
/// when one was present.
std::optional<Index> read_cloud_header_d(const std::string& path);

/// Writes the cloud with a `# n=<n> d=<d>` header (d only when given) and
/// 17-significant-digit values, so a read-back reproduces every double bit
/// for bit and reruns produce byte-identical files.
void write_cloud_csv(const std::string& path, const PointCloud& cloud,
                     std::optional<Index> d = std::nullopt);

/// Shortest-faithful formatting used for every number the tools emit.
std::string format_g17(double v);

}  // namespace mmls
