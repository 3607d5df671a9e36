#pragma once

#include <string>
#include <vector>

#include "ff/data.hpp"

namespace ff::io {

// Strict numeric CSV: comma separator, mandatory header, '.' decimal, UTF-8,
// no missing values. Parse errors carry the 1-based line number.
struct CsvTable {
    std::vector<std::string> header;
    Tensor values;  // rows x columns
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header, const Tensor& values);

// Bind a parsed table to a schema (columns matched by name, any order).
Dataset dataset_from_table(const CsvTable& table, const Schema& schema);
Dataset read_dataset(const std::string& path, const Schema& schema);
void write_dataset(const std::string& path, const Dataset& ds);

}  // namespace ff::io
