#include "ei/manifest.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ei/csv.hpp"
#include "ei/error.hpp"

namespace ei {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string require_string(const json& obj, const char* key, const fs::path& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw DataError(where.string() + ": manifest field '" + key + "' missing or not a string");
    return it->get<std::string>();
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

struct IdTable {
    std::vector<std::string> ids;
    std::unordered_map<std::string, std::size_t> row_of;
};

IdTable index_ids(const csv::Table& t, std::size_t id_col, const fs::path& path) {
    IdTable out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& id = t.rows[r][id_col];
        if (!out.row_of.emplace(id, r).second)
            throw DataError(path.string() + ": duplicate sample id '" + id + "'");
        out.ids.push_back(id);
    }
    return out;
}

std::size_t column_index(const csv::Table& t, const std::string& name, const fs::path& path) {
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (t.header[c] == name) return c;
    throw DataError(path.string() + ": missing column '" + name + "'");
}

ModalityMatrix read_modality(const ManifestEntry& entry, const std::string& id_column,
                             const std::vector<std::string>& sample_ids, bool ids_from_labels) {
    const auto table = csv::read(entry.path);
    const auto id_col = column_index(table, id_column, entry.path);
    const auto ids = index_ids(table, id_col, entry.path);

    ModalityMatrix mod;
    mod.name = entry.name;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (c != id_col) mod.feature_names.push_back(table.header[c]);
    if (mod.feature_names.empty()) throw DataError(entry.path.string() + ": modality has no feature columns");

    if (ids.ids.size() != sample_ids.size() && ids_from_labels) {
        throw DataError("modality/label sample mismatch: modality '" + entry.name + "' has " +
                        std::to_string(ids.ids.size()) + " samples, labels have " +
                        std::to_string(sample_ids.size()));
    }
    mod.features.resize(static_cast<Eigen::Index>(sample_ids.size()),
                        static_cast<Eigen::Index>(mod.feature_names.size()));
    for (std::size_t r = 0; r < sample_ids.size(); ++r) {
        auto it = ids.row_of.find(sample_ids[r]);
        if (it == ids.row_of.end())
            throw DataError(std::string(ids_from_labels ? "modality/label" : "modality/modality") +
                            " sample mismatch: modality '" + entry.name + "' lacks sample '" + sample_ids[r] + "'");
        const auto& row = table.rows[it->second];
        Eigen::Index c_out = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c == id_col) continue;
            const std::string where = entry.path.string() + " sample '" + sample_ids[r] + "' column '" + table.header[c] + "'";
            mod.features(static_cast<Eigen::Index>(r), c_out++) = csv::parse_double(row[c], where);
        }
    }
    if (!ids_from_labels && ids.ids.size() != sample_ids.size())
        throw DataError("modality/modality sample mismatch: modality '" + entry.name + "' has " +
                        std::to_string(ids.ids.size()) + " samples, expected " + std::to_string(sample_ids.size()));
    return mod;
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": malformed manifest JSON: " + e.what());
    }
    if (!doc.is_object()) throw DataError(path.string() + ": manifest must be a JSON object");

    const auto base = path.parent_path();
    Manifest m;
    auto mods = doc.find("modalities");
    if (mods == doc.end() || !mods->is_array() || mods->empty())
        throw DataError(path.string() + ": manifest needs a non-empty 'modalities' array");
    for (const auto& entry : *mods) {
        if (!entry.is_object()) throw DataError(path.string() + ": modality entries must be objects");
        m.modalities.push_back({require_string(entry, "name", path), resolve(base, require_string(entry, "path", path))});
    }
    if (doc.contains("labels_path")) m.labels_path = resolve(base, require_string(doc, "labels_path", path));
    if (doc.contains("id_column")) m.id_column = require_string(doc, "id_column", path);
    if (doc.contains("label_column")) m.label_column = require_string(doc, "label_column", path);
    return m;
}

MultiModalDataset load_manifest(const fs::path& path) {
    const auto m = read_manifest(path);
    if (m.labels_path.empty()) throw DataError(path.string() + ": manifest field 'labels_path' missing");

    const auto labels = csv::read(m.labels_path);
    const auto id_col = column_index(labels, m.id_column, m.labels_path);
    const auto label_col = column_index(labels, m.label_column, m.labels_path);
    const auto ids = index_ids(labels, id_col, m.labels_path);

    MultiModalDataset ds;
    ds.sample_ids = ids.ids;
    for (const auto& row : labels.rows) {
        const auto where = m.labels_path.string() + " sample '" + row[id_col] + "'";
        const auto v = csv::parse_int(row[label_col], where);
        if (v != 0 && v != 1) throw DataError("label outside {0,1} at " + where);
        ds.labels.push_back(static_cast<int>(v));
    }
    for (const auto& entry : m.modalities) ds.modalities.push_back(read_modality(entry, m.id_column, ds.sample_ids, true));
    require_valid(ds);
    return ds;
}

MultiModalDataset load_features(const fs::path& path) {
    const auto m = read_manifest(path);
    MultiModalDataset ds;
    if (!m.labels_path.empty()) {
        const auto labels = csv::read(m.labels_path);
        ds.sample_ids = index_ids(labels, column_index(labels, m.id_column, m.labels_path), m.labels_path).ids;
    } else {
        const auto first = csv::read(m.modalities.front().path);
        const auto& p = m.modalities.front().path;
        ds.sample_ids = index_ids(first, column_index(first, m.id_column, p), p).ids;
    }
    for (const auto& entry : m.modalities)
        ds.modalities.push_back(read_modality(entry, m.id_column, ds.sample_ids, !m.labels_path.empty()));
    for (const auto& mod : ds.modalities)
        for (Eigen::Index r = 0; r < mod.features.rows(); ++r)
            for (Eigen::Index c = 0; c < mod.features.cols(); ++c)
                if (!std::isfinite(mod.features(r, c)))
                    throw DataError("non-finite value in modality '" + mod.name + "' row " + std::to_string(r) +
                                    " column " + std::to_string(c));
    return ds;
}

fs::path write_dataset(const MultiModalDataset& ds, const fs::path& dir) {
    fs::create_directories(dir);
    json manifest;
    manifest["modalities"] = json::array();
    for (const auto& mod : ds.modalities) {
        const std::string file = mod.name + ".csv";
        std::ostringstream out;
        out << "id";
        for (const auto& f : mod.feature_names) out << ',' << csv::escape(f);
        out << '\n';
        for (Eigen::Index r = 0; r < mod.features.rows(); ++r) {
            out << csv::escape(ds.sample_ids[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < mod.features.cols(); ++c) out << ',' << csv::format_double(mod.features(r, c));
            out << '\n';
        }
        csv::write_file(dir / file, out.str());
        manifest["modalities"].push_back({{"name", mod.name}, {"path", file}});
    }
    std::ostringstream labels;
    labels << "id,label\n";
    for (std::size_t r = 0; r < ds.labels.size(); ++r) labels << csv::escape(ds.sample_ids[r]) << ',' << ds.labels[r] << '\n';
    csv::write_file(dir / "labels.csv", labels.str());
    manifest["labels_path"] = "labels.csv";
    manifest["id_column"] = "id";
    manifest["label_column"] = "label";
    const auto path = dir / "manifest.json";
    csv::write_file(path, manifest.dump(2) + "\n");
    return path;
}

}  // namespace ei
