#pragma once

#include <string>
#include <vector>

#include "ff/tensor.hpp"

namespace ff {

enum class Role { Covariate, Treatment, Outcome };
enum class ColKind { Continuous, Discrete };

struct SchemaCol {
    std::string name;
    Role role = Role::Covariate;
    ColKind kind = ColKind::Continuous;
};

// Column contract for a dataset: exactly one binary treatment, one outcome,
// at least one covariate.
struct Schema {
    std::vector<SchemaCol> cols;

    void validate() const;
    int treatment_index() const;
    int outcome_index() const;
    std::vector<int> covariate_indices() const;
    const SchemaCol* find(const std::string& name) const;
};

// Tabular frame in schema column order, with covariates split out.
struct Dataset {
    Schema schema;
    Tensor z;  // n x D, covariates in schema order
    std::vector<double> t;
    std::vector<double> y;

    int64_t rows() const { return static_cast<int64_t>(t.size()); }
    int n_covariates() const { return z.cols; }
    std::vector<double> z_col(int j) const;
    std::vector<std::string> covariate_names() const;
    void validate() const;  // shapes agree, t binary, all finite
};

}  // namespace ff
