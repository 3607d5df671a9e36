#pragma once

#include <cstdint>
#include <string>

#include "ff/frugal.hpp"
#include "ff/propensity.hpp"

namespace ff::io {

inline constexpr uint32_t kModelFormatVersion = 1;

// Versioned self-describing binary container holding both fitted models:
// schema, margin variant and parameters, copula conditioner weights, covariate
// handlers, propensity flow, and the training config. Round-trips bit-exactly.
struct ModelBundle {
    frugal::FrugalFlowModel frugal;
    prop::PropensityFlowModel propensity;
};

void save_models(const std::string& path, const ModelBundle& bundle);
ModelBundle load_models(const std::string& path);

std::string serialize_models(const ModelBundle& bundle);
ModelBundle deserialize_models(const std::string& bytes);

// FNV-1a over the serialized payload; written into generation sidecars so a
// benchmark records exactly which models produced it.
uint64_t model_fingerprint(const ModelBundle& bundle);

// Standalone container for a bare copula flow (test and tooling use).
void save_copula_flow(const std::string& path, const copula::CopulaFlow& flow);
copula::CopulaFlow load_copula_flow(const std::string& path);

}  // namespace ff::io
