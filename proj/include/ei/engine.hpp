#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ei/dataset.hpp"
#include "ei/ensemble.hpp"
#include "ei/learners.hpp"
#include "ei/metrics.hpp"

namespace ei {

enum class CvMode { evaluate, build_final, both };

CvMode parse_cv_mode(std::string_view name);
std::string_view cv_mode_name(CvMode mode);

struct CvConfig {
    std::size_t k_outer = 5;
    std::size_t k_inner = 5;
    Seed seed = 0;
    CvMode mode = CvMode::both;

    bool evaluates() const noexcept { return mode != CvMode::build_final; }
    bool builds_final() const noexcept { return mode != CvMode::evaluate; }
};

struct ColumnKey {
    std::string modality;
    std::string learner;

    std::string label() const { return modality + "." + learner; }
    friend bool operator==(const ColumnKey&, const ColumnKey&) = default;
};

/// Out-of-fold base scores. Row r holds scores for dataset sample rows[r];
/// column c holds the scores of base predictor column_keys[c].
struct EnsembleTrainingData {
    Matrix scores;
    std::vector<ColumnKey> column_keys;
    std::vector<std::size_t> rows;
};

/// Ordered modality -> learners mapping.
using PredictorAssignment = std::vector<std::pair<std::string, std::vector<LearnerSpec>>>;

/// Same learners on every modality of `ds`.
PredictorAssignment assign_all(const MultiModalDataset& ds, const std::vector<LearnerSpec>& learners);

struct OuterFold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    EnsembleTrainingData train_data;  // inner out-of-fold scores over `train`
    EnsembleTrainingData test_data;   // scores on `test` from models refit on all of `train`
};

/// The deployable portion of a fitted engine: everything predict() and the
/// interpreter need, and what a model archive stores.
struct FinalModel {
    std::vector<std::string> modality_names;
    std::vector<std::vector<std::string>> feature_names;
    std::vector<std::vector<FittedBaseModel>> base_models;  // [modality][learner]
    std::vector<ColumnKey> column_keys;
    EnsembleTrainingData training;  // final ensemble training matrix
    std::vector<std::string> sample_ids;  // of training.rows, in order
    Labels labels;                        // likewise
    std::vector<EnsembleModel> ensembles;

    const EnsembleModel& ensemble(const std::string& id) const;
    std::size_t feature_count(std::size_t modality) const { return feature_names[modality].size(); }
};

/// Nested cross-validation driver for multi-modal heterogeneous ensembles.
///
/// fit_base() trains every (modality, learner) pair. In evaluate mode it
/// builds, per outer fold, an ensemble training matrix from an inner CV over
/// the outer-train split and an ensemble test matrix from models refit on the
/// whole outer-train split. In build_final mode it runs one inner CV over all
/// samples and refits every pair on all of them. fit_base may be called once
/// with every modality or repeatedly with subsets; both paths give identical
/// results because every task seed depends only on
/// (seed, outer fold, inner fold, modality index, learner index).
///
/// Worker count never changes results.
class EnsembleIntegration {
public:
    explicit EnsembleIntegration(CvConfig cv = {}, std::size_t workers = 1);

    /// Restores the final-model portion of an engine, e.g. from an archive.
    static EnsembleIntegration from_final(CvConfig cv, FinalModel model, std::optional<SummaryTable> base_summary,
                                          std::optional<SummaryTable> ensemble_summary);

    EnsembleIntegration& fit_base(const MultiModalDataset& ds, const PredictorAssignment& assignment);
    EnsembleIntegration& fit_ensemble(const std::vector<EnsembleSpec>& ensembles);

    /// Scores new samples. `samples` maps each modality name to a q x f_i matrix.
    Vector predict(const std::map<std::string, Matrix>& samples, const std::string& ensemble_id) const;
    /// Scores a dataset whose modalities are matched by name.
    Vector predict(const MultiModalDataset& ds, const std::string& ensemble_id) const;

    const SummaryTable& base_summary() const;
    const SummaryTable& ensemble_summary() const;

    const CvConfig& cv() const noexcept { return cv_; }
    std::size_t workers() const noexcept { return workers_; }
    void set_workers(std::size_t workers) noexcept { workers_ = workers == 0 ? 1 : workers; }

    /// Training data, when the engine was fitted in this process.
    const MultiModalDataset* dataset() const noexcept { return dataset_.get(); }
    bool base_complete() const noexcept;
    bool has_final_model() const noexcept { return final_.has_value(); }
    const FinalModel& final_model() const;

    /// Column keys in canonical order: dataset modality order, then learner order.
    std::vector<ColumnKey> column_keys() const;
    /// Evaluate-mode matrices, one entry per outer fold.
    std::vector<OuterFold> outer_folds() const;
    /// Build-final-mode ensemble training matrix over all samples.
    EnsembleTrainingData final_training_data() const;

    /// Pooled outer-test scores keyed by base column label or ensemble id,
    /// indexed by dataset row.
    const std::vector<std::pair<std::string, Vector>>& pooled_base_scores() const noexcept { return pooled_base_; }
    const std::vector<std::pair<std::string, Vector>>& pooled_ensemble_scores() const noexcept { return pooled_ens_; }

private:
    struct ModalityRun {
        std::vector<LearnerSpec> learners;
        std::vector<Matrix> inner_oof;   // per outer fold: |train_o| x p
        std::vector<Matrix> outer_test;  // per outer fold: |test_o| x p
        Matrix final_oof;                // n x p
        std::vector<FittedBaseModel> final_models;
    };

    void plan_folds(const MultiModalDataset& ds);
    void fit_modality_runs(const std::vector<std::pair<std::size_t, std::vector<LearnerSpec>>>& work);
    void refresh_base_summary();
    void refresh_final_model();
    std::vector<ColumnKey> keys_for(std::size_t modality) const;

    CvConfig cv_;
    std::size_t workers_ = 1;
    std::shared_ptr<const MultiModalDataset> dataset_;
    bool loaded_ = false;

    FoldAssignment outer_;
    std::vector<FoldAssignment> inner_;  // per outer fold, over that fold's train split
    FoldAssignment final_inner_;

    std::vector<std::optional<ModalityRun>> runs_;  // per dataset modality
    std::vector<std::pair<std::string, Vector>> pooled_base_;
    std::vector<std::pair<std::string, Vector>> pooled_ens_;
    std::optional<SummaryTable> base_summary_;
    std::optional<SummaryTable> ensemble_summary_;
    std::optional<FinalModel> final_;
};

}  // namespace ei
