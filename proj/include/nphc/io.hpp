#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nphc/model.hpp"

namespace nphc {

enum class EventFormat { Csv, Jsonl };

inline EventFormat event_format_from_string(const std::string& s) {
    if (s == "csv") return EventFormat::Csv;
    if (s == "jsonl") return EventFormat::Jsonl;
    throw ValidationError("unknown event format '" + s + "' (expected csv or jsonl)");
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view s, const std::string& path, std::size_t line) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(path + ":" + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s, const std::string& path, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(path + ":" + std::to_string(line) + ": bad integer '" + std::string(s) + "'");
    return v;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix / vector CSV (full precision, bit-exact round trip)
// ---------------------------------------------------------------------------

inline void write_matrix_csv(const std::string& path, const Matrix& M) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << detail::format_double(M(i, j));
        }
        out << '\n';
    }
    if (!out.good()) throw IoError("failed writing " + path);
}

inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = detail::trim(line);
        if (t.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= t.size()) {
            const std::size_t comma = t.find(',', pos);
            const auto cell = detail::trim(t.substr(pos, comma == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : comma - pos));
            row.push_back(detail::parse_double(cell, path, lineno));
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty matrix file");
    Matrix M(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
    return M;
}

inline void write_vector_csv(const std::string& path, const Vector& v) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (Eigen::Index i = 0; i < v.size(); ++i) out << detail::format_double(v[i]) << '\n';
    if (!out.good()) throw IoError("failed writing " + path);
}

inline Vector read_vector_csv(const std::string& path) {
    const Matrix M = read_matrix_csv(path);
    if (M.cols() != 1) throw ParseError(path + ": expected one value per line");
    return M.col(0);
}

// ---------------------------------------------------------------------------
// Event data
// ---------------------------------------------------------------------------

inline void write_events_csv(const std::string& path, const EventSequences& ev) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "node_id,timestamp\n";
    // merged chronological order; ties broken by node id
    std::vector<std::pair<double, int>> merged;
    merged.reserve(ev.total_events());
    for (int i = 0; i < ev.dim(); ++i)
        for (double t : ev.events[i]) merged.emplace_back(t, i);
    std::sort(merged.begin(), merged.end());
    for (const auto& [t, i] : merged) out << i << ',' << detail::format_double(t) << '\n';
    if (!out.good()) throw IoError("failed writing " + path);
}

struct IngestOptions {
    std::optional<double> horizon;  // default: max timestamp
    std::optional<int> nodes;       // default: max node id + 1
};

/// Reads raw events from CSV (`node_id,timestamp` with header) or JSONL
/// (one `{"node": int, "t": float}` per line). Rows may arrive in any order;
/// sequences are sorted per node. Duplicate timestamps within one node are
/// rejected with both offending line numbers.
inline EventSequences ingest_events(const std::string& path, EventFormat format,
                                    const IngestOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::vector<std::tuple<long, double, std::size_t>> records;  // (node, t, line)
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        if (format == EventFormat::Csv) {
            if (!header_seen) {
                std::string low(t);
                std::transform(low.begin(), low.end(), low.begin(), ::tolower);
                low.erase(std::remove_if(low.begin(), low.end(), ::isspace), low.end());
                if (low != "node_id,timestamp")
                    throw ParseError(path + ":1: expected header 'node_id,timestamp'");
                header_seen = true;
                continue;
            }
            const std::size_t comma = t.find(',');
            if (comma == std::string_view::npos)
                throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'node_id,timestamp'");
            const long node = detail::parse_long(detail::trim(t.substr(0, comma)), path, lineno);
            const double ts = detail::parse_double(detail::trim(t.substr(comma + 1)), path, lineno);
            records.emplace_back(node, ts, lineno);
        } else {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(t);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
            }
            if (!rec.contains("node") || !rec.contains("t"))
                throw ParseError(path + ":" + std::to_string(lineno) + ": record needs 'node' and 't'");
            records.emplace_back(rec["node"].get<long>(), rec["t"].get<double>(), lineno);
        }
    }

    long max_node = -1;
    double max_t = 0.0;
    for (const auto& [node, ts, ln] : records) {
        if (node < 0) throw ValidationError(path + ":" + std::to_string(ln) + ": negative node id");
        if (opts.nodes && node >= *opts.nodes)
            throw ValidationError(path + ":" + std::to_string(ln) + ": node id " + std::to_string(node) +
                                  " outside 0.." + std::to_string(*opts.nodes - 1));
        max_node = std::max(max_node, node);
        max_t = std::max(max_t, ts);
    }

    const int d = opts.nodes ? *opts.nodes : static_cast<int>(max_node + 1);
    if (d <= 0)
        throw ValidationError(path + ": no events and no --nodes given; cannot infer dimension");
    const double horizon = opts.horizon ? *opts.horizon : max_t;
    if (!(horizon > 0.0))
        throw ValidationError(path + ": no events and no --horizon given; cannot infer horizon");

    std::vector<std::vector<std::pair<double, std::size_t>>> grouped(d);
    for (const auto& [node, ts, ln] : records) grouped[node].emplace_back(ts, ln);

    std::vector<std::vector<double>> out(d);
    for (int i = 0; i < d; ++i) {
        auto& g = grouped[i];
        std::sort(g.begin(), g.end());
        out[i].reserve(g.size());
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (k > 0 && g[k].first == g[k - 1].first)
                throw ValidationError(path + ": duplicate timestamp " +
                                      detail::format_double(g[k].first) + " for node " +
                                      std::to_string(i) + " (lines " + std::to_string(g[k - 1].second) +
                                      " and " + std::to_string(g[k].second) + ")");
            out[i].push_back(g[k].first);
        }
    }
    return EventSequences::create(horizon, std::move(out));
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

inline void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
    if (!out.good()) throw IoError("failed writing " + path);
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace nphc
