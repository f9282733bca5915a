#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "noiselab/engine.hpp"
#include "noiselab/rng.hpp"

namespace noiselab {

/// Acquisition metadata values: numeric (iso, shutter_speed, brightness,
/// temperature, depth_um, ...) or text (device names and the like).
using MetaValue = std::variant<double, std::string>;

/// One line of a dataset manifest. Paths are relative to the manifest file.
struct ManifestRecord {
    std::string id;
    std::string path;
    std::string role; // "clean" | "corrupted" | "external"
    std::optional<std::string> clean_id;
    std::optional<NoiseStrengths> strengths;
    std::optional<RngStream> seed;
    std::optional<std::vector<Primitive>> order;
    std::map<std::string, MetaValue> metadata;
};

struct Manifest {
    std::vector<ManifestRecord> records;

    const ManifestRecord* find(const std::string& id) const;
};

/// Canonical line-delimited JSON serialization: one record per line, keys in
/// fixed order, metadata keys sorted. parse(serialize(m)) == m and
/// serialize(parse(text)) reproduces canonical text byte-for-byte.
std::string serialize_manifest(const Manifest& m);

/// Parses and validates: ids must be unique; corrupted records must
/// reference an existing clean or external record; roles must be known.
/// Violations raise FormatError naming the offending id.
Manifest parse_manifest(const std::string& text);

void save_manifest(const std::string& path, const Manifest& m);
Manifest load_manifest(const std::string& path);

} // namespace noiselab
