#include "noiselab/manifest.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "noiselab/errors.hpp"

namespace noiselab {

namespace {

using json = nlohmann::ordered_json;

json seed_to_json(const RngStream& s) {
    json j;
    j["root"] = s.root_seed();
    json steps = json::array();
    for (const PathStep& step : s.path()) steps.push_back(json::array({step.label, step.index}));
    j["path"] = std::move(steps);
    return j;
}

RngStream seed_from_json(const json& j) {
    RngStream s = RngStream::root(j.at("root").get<std::uint64_t>());
    for (const auto& step : j.at("path"))
        s = s.child(step.at(0).get<std::string>(), step.at(1).get<std::uint64_t>());
    return s;
}

json record_to_json(const ManifestRecord& r) {
    json j;
    j["id"] = r.id;
    j["path"] = r.path;
    j["role"] = r.role;
    if (r.clean_id) j["clean_id"] = *r.clean_id;
    if (r.strengths) {
        json eta = json::array();
        for (double v : r.strengths->eta) eta.push_back(v);
        j["strengths"] = std::move(eta);
    }
    if (r.seed) j["seed"] = seed_to_json(*r.seed);
    if (r.order) {
        json order = json::array();
        for (Primitive p : *r.order) order.push_back(std::string(primitive_name(p)));
        j["order"] = std::move(order);
    }
    if (!r.metadata.empty()) {
        json meta; // std::map iteration keeps keys sorted
        for (const auto& [k, v] : r.metadata) {
            if (std::holds_alternative<double>(v))
                meta[k] = std::get<double>(v);
            else
                meta[k] = std::get<std::string>(v);
        }
        j["metadata"] = std::move(meta);
    }
    return j;
}

ManifestRecord record_from_json(const json& j) {
    ManifestRecord r;
    r.id = j.at("id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.role = j.at("role").get<std::string>();
    if (j.contains("clean_id")) r.clean_id = j["clean_id"].get<std::string>();
    if (j.contains("strengths")) {
        const auto& eta = j["strengths"];
        if (!eta.is_array() || eta.size() != kStrengthCount)
            throw std::invalid_argument("manifest: strengths must have six components");
        NoiseStrengths s;
        for (std::size_t i = 0; i < kStrengthCount; ++i) s[i] = eta[i].get<double>();
        r.strengths = s;
    }
    if (j.contains("seed")) r.seed = seed_from_json(j["seed"]);
    if (j.contains("order")) {
        std::vector<Primitive> order;
        for (const auto& name : j["order"])
            order.push_back(primitive_from_name(name.get<std::string>()));
        r.order = std::move(order);
    }
    if (j.contains("metadata")) {
        for (const auto& [k, v] : j["metadata"].items()) {
            if (v.is_number())
                r.metadata[k] = v.get<double>();
            else
                r.metadata[k] = v.get<std::string>();
        }
    }
    return r;
}

} // namespace

const ManifestRecord* Manifest::find(const std::string& id) const {
    for (const ManifestRecord& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

std::string serialize_manifest(const Manifest& m) {
    std::string out;
    for (const ManifestRecord& r : m.records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

Manifest parse_manifest(const std::string& text) {
    Manifest m;
    std::set<std::string> ids;
    std::size_t offset = 0;
    std::size_t line_start = 0;
    while (line_start < text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string::npos) line_end = text.size();
        const std::string line = text.substr(line_start, line_end - line_start);
        offset = line_start;
        line_start = line_end + 1;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            m.records.push_back(record_from_json(j));
        } catch (const json::exception& e) {
            throw FormatError(std::string("manifest: ") + e.what(), offset);
        }
        const ManifestRecord& r = m.records.back();
        if (!ids.insert(r.id).second)
            throw FormatError("manifest: duplicate id '" + r.id + "'", offset);
        if (r.role != "clean" && r.role != "corrupted" && r.role != "external")
            throw FormatError("manifest: unknown role '" + r.role + "' for id '" + r.id + "'",
                              offset);
    }

    // Referential integrity: corrupted records must point at a clean or
    // external source that exists.
    for (const ManifestRecord& r : m.records) {
        if (r.role != "corrupted") continue;
        if (!r.clean_id)
            throw FormatError("manifest: corrupted record '" + r.id + "' lacks clean_id", 0);
        const ManifestRecord* src = m.find(*r.clean_id);
        if (!src || (src->role != "clean" && src->role != "external"))
            throw FormatError("manifest: corrupted record '" + r.id +
                                  "' references missing source '" + *r.clean_id + "'",
                              0);
    }
    return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::string text = serialize_manifest(m);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

} // namespace noiselab
