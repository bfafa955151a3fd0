#pragma once

// JSON container and CSV ingestion for GraphSet. The JSON form is canonical:
// sorted keys, compact separators, version field format_version = 1. Floats
// are written in shortest round-trip decimal form, so save/load is lossless
// and byte-stable.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphbridge/graph.hpp"

namespace graphbridge {

inline nlohmann::json graphset_to_json(const GraphSet& set) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = task_kind_name(set.kind);
    j["num_classes"] = set.num_classes;
    j["feature_dim"] = set.feature_dim;
    nlohmann::json jgraphs = nlohmann::json::array();
    for (const Graph& g : set.graphs) {
        nlohmann::json jg;
        jg["num_nodes"] = g.num_nodes;
        nlohmann::json feats = nlohmann::json::array();
        for (std::size_t i = 0; i < g.num_nodes; ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (std::size_t c = 0; c < g.feature_dim(); ++c) row.push_back(g.features.at(i, c));
            feats.push_back(std::move(row));
        }
        jg["features"] = std::move(feats);
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [s, d] : g.adj.edges) edges.push_back(nlohmann::json::array({s, d}));
        jg["edges"] = std::move(edges);
        jg["undirected"] = g.undirected;
        if (!g.node_labels.empty()) jg["node_labels"] = g.node_labels;
        if (g.graph_label) jg["graph_label"] = *g.graph_label;
        jgraphs.push_back(std::move(jg));
    }
    j["graphs"] = std::move(jgraphs);
    if (set.has_splits()) {
        j["splits"] = {{"train", set.splits.train}, {"val", set.splits.val}, {"test", set.splits.test}};
    }
    return j;
}

inline GraphSet graphset_from_json(const nlohmann::json& j) {
    auto require = [&](const nlohmann::json& obj, const char* key, const std::string& where) -> const nlohmann::json& {
        if (!obj.contains(key)) throw DataError(where + ": missing field '" + key + "'");
        return obj.at(key);
    };
    if (!j.is_object()) throw DataError("container: top level is not an object");
    if (require(j, "format_version", "container").get<int>() != 1)
        throw DataError("container.format_version: expected 1");
    GraphSet set;
    set.kind = task_kind_from(require(j, "kind", "container").get<std::string>());
    set.num_classes = require(j, "num_classes", "container").get<std::int64_t>();
    set.feature_dim = require(j, "feature_dim", "container").get<std::size_t>();
    const auto& jgraphs = require(j, "graphs", "container");
    if (!jgraphs.is_array()) throw DataError("container.graphs: not an array");
    for (std::size_t gi = 0; gi < jgraphs.size(); ++gi) {
        const std::string where = "graphs[" + std::to_string(gi) + "]";
        const auto& jg = jgraphs[gi];
        Graph g;
        g.num_nodes = require(jg, "num_nodes", where).get<std::size_t>();
        const auto& feats = require(jg, "features", where);
        std::vector<double> fdata;
        fdata.reserve(g.num_nodes * set.feature_dim);
        if (feats.size() != g.num_nodes)
            throw DataError(where + ".features: " + std::to_string(feats.size()) + " rows for " +
                            std::to_string(g.num_nodes) + " nodes");
        for (std::size_t r = 0; r < feats.size(); ++r) {
            if (feats[r].size() != set.feature_dim)
                throw DataError(where + ".features[" + std::to_string(r) + "]: width " +
                                std::to_string(feats[r].size()) + " != feature_dim " +
                                std::to_string(set.feature_dim));
            for (const auto& v : feats[r]) fdata.push_back(v.get<double>());
        }
        g.features = Tensor({g.num_nodes, set.feature_dim}, std::move(fdata));
        g.adj.num_nodes = g.num_nodes;
        const auto& edges = require(jg, "edges", where);
        for (std::size_t e = 0; e < edges.size(); ++e) {
            if (!edges[e].is_array() || edges[e].size() != 2)
                throw DataError(where + ".edges[" + std::to_string(e) + "]: expected [src,dst]");
            g.adj.edges.emplace_back(edges[e][0].get<std::int64_t>(), edges[e][1].get<std::int64_t>());
        }
        g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);
        g.undirected = require(jg, "undirected", where).get<bool>();
        if (jg.contains("node_labels")) g.node_labels = jg["node_labels"].get<std::vector<std::int64_t>>();
        if (jg.contains("graph_label")) g.graph_label = jg["graph_label"].get<std::int64_t>();
        set.graphs.push_back(std::move(g));
    }
    if (j.contains("splits")) {
        const auto& js = j["splits"];
        set.splits.train = require(js, "train", "splits").get<std::vector<std::int64_t>>();
        set.splits.val = require(js, "val", "splits").get<std::vector<std::int64_t>>();
        set.splits.test = require(js, "test", "splits").get<std::vector<std::int64_t>>();
    }
    set.validate();
    return set;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void save_container(const GraphSet& set, const std::string& path) {
    set.validate();
    write_text_file(path, graphset_to_json(set).dump() + "\n");
}

inline GraphSet load_container(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("container " + path + ": " + e.what());
    }
    try {
        return graphset_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("container " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion: edge list "src,dst" per line, one feature row per node, one
// integer label per line.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r' && c != ' ' && c != '\t') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

inline std::int64_t parse_int(const std::string& s, const std::string& where) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw DataError(where + ": non-integer value '" + s + "'");
    }
    if (pos != s.size()) throw DataError(where + ": non-integer value '" + s + "'");
    return v;
}

inline double parse_double(const std::string& s, const std::string& where) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw DataError(where + ": bad number '" + s + "'");
    }
    if (pos != s.size()) throw DataError(where + ": bad number '" + s + "'");
    return v;
}

}  // namespace detail

inline GraphSet convert_edgelist(const std::string& edges_csv, const std::string& features_csv,
                                 const std::string& labels_csv, TaskKind kind, bool undirected = true) {
    auto feat_lines = detail::read_lines(features_csv);
    if (feat_lines.empty()) throw DataError(features_csv + ": no feature rows");
    std::size_t n = feat_lines.size();
    std::size_t d = detail::split_csv_line(feat_lines[0]).size();
    std::vector<double> feats;
    feats.reserve(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        auto cells = detail::split_csv_line(feat_lines[i]);
        if (cells.size() != d)
            throw DataError(features_csv + " line " + std::to_string(i + 1) + ": " +
                            std::to_string(cells.size()) + " columns, expected " + std::to_string(d));
        for (const auto& c : cells)
            feats.push_back(detail::parse_double(c, features_csv + " line " + std::to_string(i + 1)));
    }

    auto label_lines = detail::read_lines(labels_csv);
    std::vector<std::int64_t> labels;
    labels.reserve(label_lines.size());
    for (std::size_t i = 0; i < label_lines.size(); ++i)
        labels.push_back(detail::parse_int(label_lines[i], labels_csv + " line " + std::to_string(i + 1)));

    Graph g;
    g.num_nodes = n;
    g.undirected = undirected;
    g.features = Tensor({n, d}, std::move(feats));
    g.adj.num_nodes = n;

    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (const auto& line : detail::read_lines(edges_csv)) {
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 2) throw DataError(edges_csv + ": expected 'src,dst', got '" + line + "'");
        std::int64_t s = detail::parse_int(cells[0], edges_csv);
        std::int64_t t = detail::parse_int(cells[1], edges_csv);
        if (s < 0 || t < 0 || static_cast<std::size_t>(s) >= n || static_cast<std::size_t>(t) >= n)
            throw DataError(edges_csv + ": edge (" + std::to_string(s) + "," + std::to_string(t) +
                            ") out of range for " + std::to_string(n) + " nodes");
        if (undirected && s > t) std::swap(s, t);
        pairs.emplace_back(s, t);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    if (undirected) {
        std::vector<std::pair<std::int64_t, std::int64_t>> both;
        both.reserve(pairs.size() * 2);
        for (const auto& [s, t] : pairs) {
            both.emplace_back(s, t);
            if (s != t) both.emplace_back(t, s);
        }
        std::sort(both.begin(), both.end());
        g.adj.edges = std::move(both);
    } else {
        g.adj.edges = std::move(pairs);
    }
    g.adj.edge_weights.assign(g.adj.edges.size(), 1.0);

    GraphSet set;
    set.kind = kind;
    set.feature_dim = d;
    std::int64_t max_label = -1;
    for (std::int64_t l : labels) max_label = std::max(max_label, l);
    if (kind == TaskKind::GraphTask || kind == TaskKind::PointCloudTask) {
        if (labels.size() != 1)
            throw DataError(labels_csv + ": expected a single graph label, got " +
                            std::to_string(labels.size()));
        g.graph_label = labels[0];
    } else {
        if (labels.size() != n)
            throw DataError(labels_csv + ": " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(n) + " nodes");
        g.node_labels = std::move(labels);
    }
    set.num_classes = std::max<std::int64_t>(max_label + 1, 2);
    set.graphs.push_back(std::move(g));
    set.validate();
    return set;
}

// Seeded shuffle split by the given fractions; containers that already carry
// splits are returned unchanged (standard splits are never overwritten).
inline GraphSet make_splits(const GraphSet& set, const std::vector<double>& fractions, std::uint64_t seed) {
    if (set.has_splits()) return set;
    if (fractions.size() != 3) throw ConfigError("make_splits: expected 3 fractions");
    double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-9)
        throw ConfigError("make_splits: fractions sum to " + format_f64(total) + ", expected 1");
    std::size_t n = set.num_items();
    std::vector<std::int64_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::int64_t>(i);
    Rng rng(seed);
    rng.shuffle(idx);
    std::size_t n_train = static_cast<std::size_t>(fractions[0] * static_cast<double>(n));
    std::size_t n_val = static_cast<std::size_t>(fractions[1] * static_cast<double>(n));
    std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw ConfigError("make_splits: a split would be empty for n=" + std::to_string(n));
    GraphSet out = set;
    out.splits.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.splits.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                          idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    out.splits.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
    return out;
}

}  // namespace graphbridge
