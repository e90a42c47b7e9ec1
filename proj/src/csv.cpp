#include "lotus/csv.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace lotus {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (std::isspace(static_cast<unsigned char>(s[b])) != 0)) ++b;
    while (e > b && (std::isspace(static_cast<unsigned char>(s[e - 1])) != 0)) --e;
    if (e - b >= 2 && s[b] == '"' && s[e - 1] == '"') {
        ++b;
        --e;
    }
    return s.substr(b, e - b);
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Full-consume numeric parse; anything else (including empty) is a miss.
bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* b = s.data();
    const char* e = b + s.size();
    const auto res = std::from_chars(b, e, out);
    return res.ec == std::errc{} && res.ptr == e && std::isfinite(out);
}

}  // namespace

Dataset read_dataset_csv(const std::string& path, IngestInfo* info, const std::string& label_col) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() < 2) throw std::runtime_error("dataset has no data rows: " + path);

    const std::vector<std::string> header = split_row(lines[0]);
    const int total_cols = static_cast<int>(header.size());
    int label_idx = -1;
    for (int c = 0; c < total_cols; ++c)
        if (header[c] == label_col) {
            if (label_idx >= 0) throw std::runtime_error("duplicate label column: " + path);
            label_idx = c;
        }
    const int d = total_cols - (label_idx >= 0 ? 1 : 0);
    if (d < 1) throw std::runtime_error("dataset has no feature columns: " + path);
    const int n = static_cast<int>(lines.size()) - 1;

    IngestInfo meta;
    meta.label_column = label_idx;
    for (int c = 0; c < total_cols; ++c)
        if (c != label_idx) meta.feature_names.push_back(header[c]);

    Dataset ds;
    ds.features.resize(n, d);
    std::vector<int> labels(n, 0);
    std::vector<std::vector<int>> missing(d);
    std::vector<double> col_sum(d, 0.0);
    std::vector<int> col_count(d, 0);

    for (int i = 0; i < n; ++i) {
        const std::vector<std::string> row = split_row(lines[i + 1]);
        if (static_cast<int>(row.size()) != total_cols)
            throw std::runtime_error("row " + std::to_string(i + 2) + " has " +
                                     std::to_string(row.size()) + " cells, expected " +
                                     std::to_string(total_cols) + ": " + path);
        int f = 0;
        for (int c = 0; c < total_cols; ++c) {
            double v = 0.0;
            if (c == label_idx) {
                if (!parse_double(row[c], v) || (v != 0.0 && v != 1.0))
                    throw std::runtime_error("label cell must be 0 or 1 at row " +
                                             std::to_string(i + 2) + ": " + path);
                labels[i] = static_cast<int>(v);
                continue;
            }
            if (parse_double(row[c], v)) {
                ds.features(i, f) = v;
                col_sum[f] += v;
                ++col_count[f];
            } else {
                missing[f].push_back(i);
            }
            ++f;
        }
    }

    for (int f = 0; f < d; ++f) {
        const double mean = col_count[f] > 0 ? col_sum[f] / col_count[f] : 0.0;
        for (const int i : missing[f]) {
            ds.features(i, f) = mean;
            ++meta.imputed_cells;
        }
    }

    if (label_idx >= 0) ds.labels = std::move(labels);
    ds.name = std::filesystem::path(path).stem().string();
    if (info) *info = std::move(meta);
    return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    const int n = static_cast<int>(ds.features.rows());
    const int d = static_cast<int>(ds.features.cols());
    if (ds.labels && static_cast<int>(ds.labels->size()) != n)
        throw std::invalid_argument("label vector length does not match feature rows");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    for (int f = 0; f < d; ++f) out << (f ? ",f" : "f") << f;
    if (ds.labels) out << ",label";
    out << '\n';
    char buf[64];
    for (int i = 0; i < n; ++i) {
        for (int f = 0; f < d; ++f) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, f));
            if (f) out << ',';
            out << buf;
        }
        if (ds.labels) out << ',' << (*ds.labels)[i];
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lotus
