#ifndef BBALIGN_IO_HPP
#define BBALIGN_IO_HPP

#include <json.hpp>
#include <string>
#include <vector>

#include "bbalign/bb_driver.hpp"
#include "bbalign/mixtures.hpp"
#include "bbalign/pipeline.hpp"

namespace bbalign {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

/// PLY (ascii or binary_little_endian) or XYZ text, chosen by content for PLY
/// and by the .xyz/.txt extension otherwise. Normals (nx, ny, nz) are read when
/// present and normalized. Weights are left empty.
WeightedCloud read_cloud(const std::string& path);

WeightedCloud parse_ply(const std::string& bytes);
/// One "x y z [nx ny nz]" record per line; blank lines and '#' comments skipped.
WeightedCloud parse_xyz(const std::string& text);

/// Writes positions (and normals when present) as float64 properties.
void write_ply(const WeightedCloud& cloud, const std::string& path, PlyEncoding encoding);
std::string format_ply(const WeightedCloud& cloud, PlyEncoding encoding);

nlohmann::json result_to_json(const AlignmentResult& result);
/// Inverse of result_to_json; traces are not part of the document.
AlignmentResult result_from_json(const nlohmann::json& doc);

void write_result(const AlignmentResult& result, const std::string& path);
AlignmentResult read_result(const std::string& path);

/// CSV with header iter,stage,depth,nodes_active,best_L,best_U,gap.
std::string format_trace(const std::vector<TraceRecord>& trace);
void write_trace(const std::vector<TraceRecord>& trace, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace bbalign

#endif  // BBALIGN_IO_HPP
