#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "rieszstab/sets.hpp"

namespace rieszstab {

// Voxel sets: {"format": "rieszstab.voxelset", "version": 1, "dim", "origin",
// "spacing", "dims", "occupancy"}, occupancy as base64 of a bit array in
// lattice index order (least significant bit first).
nlohmann::ordered_json voxel_set_to_json(const VoxelSet& v);
VoxelSet voxel_set_from_json(const nlohmann::json& j);

// Graph sets: grid description plus either "u" (one value per node) or
// "cells" ([node, weight, u] triples).
nlohmann::ordered_json graph_set_to_json(const GraphSet& e);
GraphSet graph_set_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
// Parses JSON; syntax errors become IoError naming the source.
nlohmann::json parse_json(const std::string& text, const std::string& source);

VoxelSet load_voxel_set(const std::string& path);
void save_voxel_set(const VoxelSet& v, const std::string& path);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

// Hex SHA-1 of "blob <size>\0" + text, as git computes blob ids.
std::string git_blob_hash(const std::string& text);

// Appends "content_hash" over the compact dump of everything else and
// returns the indented dump.
std::string seal_report(nlohmann::ordered_json report);

}  // namespace rieszstab
