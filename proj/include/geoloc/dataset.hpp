#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoloc/geometry.hpp"

namespace geoloc {

using SparseVec = std::vector<std::uint32_t>;  // sorted indices of present features

struct Sample {
    std::string id;
    GeoPoint location;
    SparseVec features;
    double weight = 1.0;
    std::string area_label;  // empty = unlabeled
};

struct Dataset {
    std::vector<Sample> samples;
    std::uint32_t p = 0;  // total feature count
    std::string domain_ref;

    std::size_t size() const { return samples.size(); }
};

// Training feature matrix shared between classifiers fit on the same split.
struct FeatureMatrix {
    std::uint32_t p = 0;
    std::vector<SparseVec> rows;

    std::size_t size() const { return rows.size(); }
};

inline std::shared_ptr<const FeatureMatrix> feature_matrix(const Dataset& ds) {
    auto m = std::make_shared<FeatureMatrix>();
    m->p = ds.p;
    m->rows.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) m->rows.push_back(s.features);
    return m;
}

struct AreaRow {
    std::string label;
    double population = 0.0;
    std::string polygon_id;
};

// One administrative level (states, counties, countries, ...): rows plus the
// polygons they reference.
struct AreaTable {
    std::vector<AreaRow> rows;
    std::map<std::string, Domain> polygons;  // keyed by polygon_id

    const AreaRow* find(const std::string& label) const {
        for (const AreaRow& r : rows)
            if (r.label == label) return &r;
        return nullptr;
    }

    const Domain* polygon_for(const std::string& label) const {
        const AreaRow* r = find(label);
        if (!r) return nullptr;
        auto it = polygons.find(r->polygon_id);
        return it == polygons.end() ? nullptr : &it->second;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, const std::string& what, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace detail

// Sample CSV: first line `p=<int>`, then `id,lat,lon,area_label,i1;i2;...`
// with semicolon-separated sparse feature indices (empty field = no features).
inline Dataset load_samples(const std::string& path, const Domain* domain = nullptr) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    if (line.rfind("p=", 0) != 0) throw std::runtime_error(path + ": header must declare p=<int>");
    Dataset ds;
    ds.p = static_cast<std::uint32_t>(std::stoul(line.substr(2)));
    std::map<std::string, std::size_t> seen_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                                     std::to_string(fields.size()));
        Sample s;
        s.id = fields[0];
        if (s.id.empty()) throw std::runtime_error("line " + std::to_string(line_no) + ": empty id");
        if (seen_ids.count(s.id))
            throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate id '" + s.id + "'");
        seen_ids[s.id] = line_no;
        s.location.lat = detail::parse_double(fields[1], "latitude", line_no);
        s.location.lon = detail::parse_double(fields[2], "longitude", line_no);
        if (!valid_point(s.location))
            throw std::runtime_error("line " + std::to_string(line_no) + ": coordinates out of range");
        s.area_label = fields[3];
        if (!fields[4].empty()) {
            for (const std::string& tok : detail::split_csv_line(fields[4], ';')) {
                if (tok.empty()) continue;
                const double v = detail::parse_double(tok, "feature index", line_no);
                if (v < 0 || v != std::floor(v))
                    throw std::runtime_error("line " + std::to_string(line_no) + ": bad feature index '" + tok + "'");
                const auto idx = static_cast<std::uint64_t>(v);
                if (idx >= ds.p)
                    throw std::runtime_error("line " + std::to_string(line_no) + ": feature index " +
                                             std::to_string(idx) + " out of range (p=" + std::to_string(ds.p) + ")");
                s.features.push_back(static_cast<std::uint32_t>(idx));
            }
            std::sort(s.features.begin(), s.features.end());
            if (std::adjacent_find(s.features.begin(), s.features.end()) != s.features.end())
                throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate feature index");
        }
        if (domain && !domain->contains(s.location))
            throw std::runtime_error("sample '" + s.id + "' lies outside the domain");
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw std::runtime_error(path + ": no samples");
    return ds;
}

inline void save_samples(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << "p=" << ds.p << "\n";
    out.precision(17);
    for (const Sample& s : ds.samples) {
        out << s.id << ',' << s.location.lat << ',' << s.location.lon << ',' << s.area_label << ',';
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            if (i) out << ';';
            out << s.features[i];
        }
        out << "\n";
    }
}

// AreaTable CSV: `area_label,population,polygon_id`; polygons attached from a
// keyed GeoJSON file separately.
inline AreaTable load_area_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open area table: " + path);
    AreaTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("area_label", 0) == 0) continue;  // optional header
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3)
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": expected 3 fields");
        AreaRow row;
        row.label = fields[0];
        row.population = detail::parse_double(fields[1], "population", line_no);
        row.polygon_id = fields[2];
        if (!(row.population > 0))
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": population must be positive");
        if (table.find(row.label))
            throw std::runtime_error(path + " line " + std::to_string(line_no) + ": duplicate label '" + row.label + "'");
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Population-ratio weighting: weight_i = population(area) / #samples in area.
// Unlabeled samples keep weight 1.0 (a warning is emitted); labels missing
// from the table are an error.
inline void compute_weights(Dataset& ds, const AreaTable& areas,
                            const std::function<void(const std::string&)>& warn =
                                [](const std::string& m) { std::cerr << "warning: " << m << "\n"; }) {
    std::map<std::string, std::size_t> counts;
    for (const Sample& s : ds.samples)
        if (!s.area_label.empty()) ++counts[s.area_label];
    std::size_t unlabeled = 0;
    for (Sample& s : ds.samples) {
        if (s.area_label.empty()) {
            s.weight = 1.0;
            ++unlabeled;
            continue;
        }
        const AreaRow* row = areas.find(s.area_label);
        if (!row)
            throw std::runtime_error("compute_weights: area '" + s.area_label + "' not in the area table");
        if (!(row->population > 0))
            throw std::runtime_error("compute_weights: area '" + s.area_label + "' has zero population");
        s.weight = row->population / static_cast<double>(counts[s.area_label]);
    }
    if (unlabeled > 0)
        warn(std::to_string(unlabeled) + " sample(s) without an area label keep weight 1.0");
}

}  // namespace geoloc
