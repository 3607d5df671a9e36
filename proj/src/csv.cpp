#include "ff/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ff/errors.hpp"

namespace ff::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(path + ": empty file, header required");
    for (const auto& h : split_line(line)) {
        std::string name = trim(h);
        if (name.empty()) throw ValidationError(path + ":1: empty header field");
        table.header.push_back(name);
    }
    std::vector<double> values;
    int64_t rows = 0;
    int64_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        auto fields = split_line(line);
        if (fields.size() != table.header.size())
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(table.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        for (const auto& f : fields) {
            std::string s = trim(f);
            if (s.empty())
                throw ValidationError(path + ":" + std::to_string(lineno) + ": missing value not supported");
            double x = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
            if (ec != std::errc{} || p != s.data() + s.size())
                throw ValidationError(path + ":" + std::to_string(lineno) + ": cannot parse number '" + s + "'");
            values.push_back(x);
        }
        ++rows;
    }
    table.values.rows = static_cast<int>(rows);
    table.values.cols = static_cast<int>(table.header.size());
    table.values.v = std::move(values);
    return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header, const Tensor& values) {
    if (static_cast<int>(header.size()) != values.cols) throw DimensionError("write_csv: header width mismatch");
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
    char buf[64];
    for (int i = 0; i < values.rows; ++i) {
        for (int j = 0; j < values.cols; ++j) {
            double x = values(i, j);
            // shortest round-trip form
            int len = std::snprintf(buf, sizeof buf, "%.17g", x);
            for (int prec = 1; prec < 17; ++prec) {
                int l2 = std::snprintf(buf, sizeof buf, "%.*g", prec, x);
                double back = 0.0;
                auto [p, ec] = std::from_chars(buf, buf + l2, back);
                (void)p;
                if (ec == std::errc{} && back == x) {
                    len = l2;
                    break;
                }
                len = std::snprintf(buf, sizeof buf, "%.17g", x);
            }
            out << (j ? "," : "") << std::string_view(buf, static_cast<size_t>(len));
        }
        out << "\n";
    }
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

Dataset dataset_from_table(const CsvTable& table, const Schema& schema) {
    schema.validate();
    std::vector<int> col_index(schema.cols.size(), -1);
    for (size_t s = 0; s < schema.cols.size(); ++s) {
        for (size_t h = 0; h < table.header.size(); ++h)
            if (table.header[h] == schema.cols[s].name) {
                col_index[s] = static_cast<int>(h);
                break;
            }
        if (col_index[s] < 0)
            throw ValidationError("schema column '" + schema.cols[s].name + "' not found in CSV header");
    }
    Dataset ds;
    ds.schema = schema;
    const int n = table.values.rows;
    const auto cov = schema.covariate_indices();
    ds.z = Tensor(n, static_cast<int>(cov.size()));
    ds.t.resize(static_cast<size_t>(n));
    ds.y.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (size_t j = 0; j < cov.size(); ++j)
            ds.z(i, static_cast<int>(j)) = table.values(i, col_index[static_cast<size_t>(cov[j])]);
        ds.t[static_cast<size_t>(i)] = table.values(i, col_index[static_cast<size_t>(schema.treatment_index())]);
        ds.y[static_cast<size_t>(i)] = table.values(i, col_index[static_cast<size_t>(schema.outcome_index())]);
    }
    ds.validate();
    return ds;
}

Dataset read_dataset(const std::string& path, const Schema& schema) {
    return dataset_from_table(read_csv(path), schema);
}

void write_dataset(const std::string& path, const Dataset& ds) {
    ds.validate();
    std::vector<std::string> header;
    for (const auto& c : ds.schema.cols) header.push_back(c.name);
    const int n = static_cast<int>(ds.rows());
    Tensor values(n, static_cast<int>(ds.schema.cols.size()));
    const auto cov = ds.schema.covariate_indices();
    for (int i = 0; i < n; ++i) {
        for (size_t j = 0; j < cov.size(); ++j) values(i, cov[j]) = ds.z(i, static_cast<int>(j));
        values(i, ds.schema.treatment_index()) = ds.t[static_cast<size_t>(i)];
        values(i, ds.schema.outcome_index()) = ds.y[static_cast<size_t>(i)];
    }
    write_csv(path, header, values);
}

}  // namespace ff::io
