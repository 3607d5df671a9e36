#include "ff/data.hpp"

#include <cmath>

#include "ff/errors.hpp"

namespace ff {

void Schema::validate() const {
    int n_treat = 0, n_out = 0, n_cov = 0;
    for (const auto& c : cols) {
        if (c.name.empty()) throw ValidationError("Schema: empty column name");
        switch (c.role) {
            case Role::Treatment: ++n_treat; break;
            case Role::Outcome: ++n_out; break;
            case Role::Covariate: ++n_cov; break;
        }
    }
    for (size_t i = 0; i < cols.size(); ++i)
        for (size_t j = i + 1; j < cols.size(); ++j)
            if (cols[i].name == cols[j].name) throw ValidationError("Schema: duplicate column '" + cols[i].name + "'");
    if (n_treat != 1) throw ValidationError("Schema: exactly one treatment column required");
    if (n_out != 1) throw ValidationError("Schema: exactly one outcome column required");
    if (n_cov < 1) throw ValidationError("Schema: at least one covariate required");
}

int Schema::treatment_index() const {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].role == Role::Treatment) return static_cast<int>(i);
    throw ValidationError("Schema: no treatment column");
}

int Schema::outcome_index() const {
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].role == Role::Outcome) return static_cast<int>(i);
    throw ValidationError("Schema: no outcome column");
}

std::vector<int> Schema::covariate_indices() const {
    std::vector<int> idx;
    for (size_t i = 0; i < cols.size(); ++i)
        if (cols[i].role == Role::Covariate) idx.push_back(static_cast<int>(i));
    return idx;
}

const SchemaCol* Schema::find(const std::string& name) const {
    for (const auto& c : cols)
        if (c.name == name) return &c;
    return nullptr;
}

std::vector<double> Dataset::z_col(int j) const {
    std::vector<double> col(static_cast<size_t>(z.rows));
    for (int i = 0; i < z.rows; ++i) col[static_cast<size_t>(i)] = z(i, j);
    return col;
}

std::vector<std::string> Dataset::covariate_names() const {
    std::vector<std::string> names;
    for (const auto& c : schema.cols)
        if (c.role == Role::Covariate) names.push_back(c.name);
    return names;
}

void Dataset::validate() const {
    schema.validate();
    const auto cov = schema.covariate_indices();
    if (z.cols != static_cast<int>(cov.size())) throw DimensionError("Dataset: covariate column count mismatch");
    if (static_cast<int>(t.size()) != z.rows || t.size() != y.size())
        throw DimensionError("Dataset: t/y/z row count mismatch");
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] != 0.0 && t[i] != 1.0)
            throw ValidationError("Dataset: treatment must be binary 0/1 (row " + std::to_string(i) + ")");
        if (!std::isfinite(y[i])) throw ValidationError("Dataset: non-finite outcome at row " + std::to_string(i));
    }
    if (!z.all_finite()) throw ValidationError("Dataset: non-finite covariate value");
}

}  // namespace ff
