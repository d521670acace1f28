#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ei/types.hpp"

namespace ei {

struct ModalityMatrix {
    std::string name;
    Matrix features;  // n x f, rows in sample_ids order
    std::vector<std::string> feature_names;
};

/// Per-modality feature matrices over one shared sample axis plus binary
/// labels. Construct freely, then check with validate_dataset(); the engine
/// and loaders refuse datasets with violations.
struct MultiModalDataset {
    std::vector<ModalityMatrix> modalities;
    Labels labels;
    std::vector<std::string> sample_ids;

    std::size_t sample_count() const noexcept { return labels.size(); }
    std::size_t modality_count() const noexcept { return modalities.size(); }
    /// Index of the named modality, or npos.
    std::size_t find_modality(const std::string& name) const noexcept;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct Violation {
    std::string what;
    std::string modality;  // empty when not modality-specific
    long row = -1;
    long column = -1;

    friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate_dataset(const MultiModalDataset& ds);

/// Throws DataError listing the first violations when the report is non-empty.
void require_valid(const MultiModalDataset& ds);

std::string describe(const Violation& v);

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold_of;

    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
};

/// Stratified k-fold split. Indices of each class are shuffled by `seed` and
/// dealt round-robin into the folds; the negative class continues dealing
/// where the positive class stopped so fold sizes also stay within one.
FoldAssignment stratified_k_fold(const Labels& labels, std::size_t k, Seed seed);

struct SyntheticModality {
    std::size_t features = 1;
    std::size_t informative = 0;
    double noise_std = 1.0;
};

struct SyntheticSpec {
    std::size_t n = 100;
    std::vector<SyntheticModality> modalities;
    double complementarity = 0.0;
    Seed seed = 0;
};

/// Balanced labels; informative features are class-conditional Gaussians
/// centred on -1 / +1 with the modality's noise_std, the rest N(0, 1).
/// Samples are split into one group per modality; for samples outside a
/// modality's own group the class means shrink by (1 - complementarity),
/// so at complementarity 1 each modality only sees its own share.
MultiModalDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace ei
