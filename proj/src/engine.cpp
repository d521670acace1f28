#include "ei/engine.hpp"

#include <algorithm>
#include <set>

#include "ei/error.hpp"
#include "ei/parallel.hpp"

namespace ei {
namespace {

// Seed-path tags.
constexpr std::uint64_t kOuterFolds = 1;
constexpr std::uint64_t kInnerFolds = 2;
constexpr std::uint64_t kFinalFolds = 3;
constexpr std::uint64_t kBaseTask = 4;
constexpr std::uint64_t kEnsembleTask = 5;

std::vector<std::size_t> map_indices(const std::vector<std::size_t>& base, const std::vector<std::size_t>& local) {
    std::vector<std::size_t> out;
    out.reserve(local.size());
    for (auto i : local) out.push_back(base[i]);
    return out;
}

bool same_samples(const MultiModalDataset& a, const MultiModalDataset& b) {
    if (a.sample_ids != b.sample_ids || a.labels != b.labels || a.modalities.size() != b.modalities.size()) return false;
    for (std::size_t i = 0; i < a.modalities.size(); ++i) {
        const auto& ma = a.modalities[i];
        const auto& mb = b.modalities[i];
        if (ma.name != mb.name || ma.feature_names != mb.feature_names || ma.features != mb.features) return false;
    }
    return true;
}

}  // namespace

CvMode parse_cv_mode(std::string_view name) {
    if (name == "evaluate") return CvMode::evaluate;
    if (name == "build_final") return CvMode::build_final;
    if (name == "both") return CvMode::both;
    throw UsageError("unknown cv mode '" + std::string(name) + "' (expected evaluate, build_final or both)");
}

std::string_view cv_mode_name(CvMode mode) {
    switch (mode) {
        case CvMode::evaluate: return "evaluate";
        case CvMode::build_final: return "build_final";
        case CvMode::both: return "both";
    }
    return "?";
}

PredictorAssignment assign_all(const MultiModalDataset& ds, const std::vector<LearnerSpec>& learners) {
    PredictorAssignment out;
    for (const auto& m : ds.modalities) out.emplace_back(m.name, learners);
    return out;
}

const EnsembleModel& FinalModel::ensemble(const std::string& id) const {
    for (const auto& e : ensembles)
        if (e.spec.id == id) return e;
    throw UsageError("unknown ensemble id '" + id + "'");
}

EnsembleIntegration::EnsembleIntegration(CvConfig cv, std::size_t workers) : cv_(cv), workers_(workers == 0 ? 1 : workers) {
    if (cv_.k_outer < 2 || cv_.k_inner < 2) throw UsageError("k_outer and k_inner must both be at least 2");
}

EnsembleIntegration EnsembleIntegration::from_final(CvConfig cv, FinalModel model,
                                                    std::optional<SummaryTable> base_summary,
                                                    std::optional<SummaryTable> ensemble_summary) {
    EnsembleIntegration e(cv);
    e.loaded_ = true;
    e.final_ = std::move(model);
    e.base_summary_ = std::move(base_summary);
    e.ensemble_summary_ = std::move(ensemble_summary);
    return e;
}

void EnsembleIntegration::plan_folds(const MultiModalDataset& ds) {
    const auto& y = ds.labels;
    if (cv_.evaluates()) {
        outer_ = stratified_k_fold(y, cv_.k_outer, derive_seed(cv_.seed, {kOuterFolds}));
        inner_.clear();
        for (std::size_t o = 0; o < cv_.k_outer; ++o) {
            const auto train = outer_.train_indices(o);
            inner_.push_back(stratified_k_fold(take(y, train), cv_.k_inner, derive_seed(cv_.seed, {kInnerFolds, o})));
        }
    }
    if (cv_.builds_final()) final_inner_ = stratified_k_fold(y, cv_.k_inner, derive_seed(cv_.seed, {kFinalFolds}));
}

EnsembleIntegration& EnsembleIntegration::fit_base(const MultiModalDataset& ds, const PredictorAssignment& assignment) {
    if (loaded_) throw UsageError("fit_base: engine was restored from an archive and cannot be refit");
    require_valid(ds);
    if (assignment.empty()) throw UsageError("fit_base: empty predictor assignment");

    std::vector<std::pair<std::size_t, std::vector<LearnerSpec>>> work;
    std::set<std::size_t> seen;
    for (const auto& [name, learners] : assignment) {
        const auto idx = ds.find_modality(name);
        if (idx == MultiModalDataset::npos) throw UsageError("fit_base: unknown modality '" + name + "'");
        if (!seen.insert(idx).second) throw UsageError("fit_base: modality '" + name + "' assigned twice");
        if (learners.empty()) throw UsageError("fit_base: modality '" + name + "' has no learners");
        std::set<std::string> names;
        for (const auto& l : learners) {
            check_params(l);
            if (!names.insert(l.name).second)
                throw UsageError("fit_base: duplicate learner name '" + l.name + "' on modality '" + name + "'");
        }
        work.emplace_back(idx, learners);
    }

    if (!dataset_) {
        dataset_ = std::make_shared<const MultiModalDataset>(ds);
        runs_.assign(ds.modality_count(), std::nullopt);
        plan_folds(ds);
    } else if (!same_samples(*dataset_, ds)) {
        throw UsageError("fit_base: dataset differs from the one used in earlier fit_base calls");
    }

    fit_modality_runs(work);
    // Base models changed: previously fitted ensembles no longer match.
    pooled_ens_.clear();
    ensemble_summary_.reset();
    if (cv_.evaluates()) refresh_base_summary();
    if (cv_.builds_final()) refresh_final_model();
    return *this;
}

void EnsembleIntegration::fit_modality_runs(const std::vector<std::pair<std::size_t, std::vector<LearnerSpec>>>& work) {
    const auto& ds = *dataset_;
    const auto& y = ds.labels;
    const auto k_in = cv_.k_inner;

    // inner == k_inner denotes a refit on the full enclosing split; outer ==
    // k_outer denotes the build-final pass over all samples.
    struct Task {
        std::size_t slot;  // index into work
        std::size_t learner;
        std::size_t outer;
        std::size_t inner;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < work.size(); ++s) {
        for (std::size_t l = 0; l < work[s].second.size(); ++l) {
            if (cv_.evaluates())
                for (std::size_t o = 0; o < cv_.k_outer; ++o)
                    for (std::size_t i = 0; i <= k_in; ++i) tasks.push_back({s, l, o, i});
            if (cv_.builds_final())
                for (std::size_t i = 0; i <= k_in; ++i) tasks.push_back({s, l, cv_.k_outer, i});
        }
    }

    std::vector<std::vector<std::size_t>> outer_train, outer_test;
    for (std::size_t o = 0; cv_.evaluates() && o < cv_.k_outer; ++o) {
        outer_train.push_back(outer_.train_indices(o));
        outer_test.push_back(outer_.test_indices(o));
    }
    std::vector<std::size_t> all(ds.sample_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

    // Rows a task trains on and scores, as dataset sample indices.
    auto rows_for = [&](const Task& t) -> std::pair<std::vector<std::size_t>, std::vector<std::size_t>> {
        if (t.outer < cv_.k_outer) {
            const auto& base = outer_train[t.outer];
            if (t.inner == k_in) return {base, outer_test[t.outer]};
            const auto& inner = inner_[t.outer];
            return {map_indices(base, inner.train_indices(t.inner)), map_indices(base, inner.test_indices(t.inner))};
        }
        if (t.inner == k_in) return {all, {}};
        return {final_inner_.train_indices(t.inner), final_inner_.test_indices(t.inner)};
    };

    std::vector<Vector> scores(tasks.size());
    std::vector<std::optional<FittedBaseModel>> models(tasks.size());
    parallel_for(tasks.size(), workers_, [&](std::size_t ti) {
        const auto& t = tasks[ti];
        const auto modality = work[t.slot].first;
        const auto& spec = work[t.slot].second[t.learner];
        const auto& x = ds.modalities[modality].features;
        const auto [train, test] = rows_for(t);
        const Seed seed = derive_seed(cv_.seed, {kBaseTask, t.outer, t.inner, modality, t.learner});
        try {
            auto model = fit_learner(spec, take_rows(x, train), take(y, train), seed);
            if (!test.empty()) scores[ti] = predict_proba(model, take_rows(x, test));
            if (t.outer == cv_.k_outer && t.inner == k_in) models[ti] = std::move(model);
        } catch (const TrainingError& e) {
            throw TrainingError("modality '" + ds.modalities[modality].name + "', learner '" + spec.name + "': " + e.what());
        } catch (const DataError& e) {
            throw TrainingError("modality '" + ds.modalities[modality].name + "', learner '" + spec.name + "': " + e.what());
        }
    });

    // Join: scatter task outputs into per-modality matrices.
    std::vector<ModalityRun> fresh(work.size());
    for (std::size_t s = 0; s < work.size(); ++s) {
        auto& run = fresh[s];
        run.learners = work[s].second;
        const auto p = static_cast<Eigen::Index>(run.learners.size());
        if (cv_.evaluates()) {
            for (std::size_t o = 0; o < cv_.k_outer; ++o) {
                run.inner_oof.emplace_back(static_cast<Eigen::Index>(outer_train[o].size()), p);
                run.outer_test.emplace_back(static_cast<Eigen::Index>(outer_test[o].size()), p);
            }
        }
        if (cv_.builds_final()) {
            run.final_oof.resize(static_cast<Eigen::Index>(ds.sample_count()), p);
            run.final_models.resize(run.learners.size());
        }
    }
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const auto& t = tasks[ti];
        auto& run = fresh[t.slot];
        const auto col = static_cast<Eigen::Index>(t.learner);
        if (t.outer < cv_.k_outer) {
            if (t.inner == k_in) {
                run.outer_test[t.outer].col(col) = scores[ti];
            } else {
                const auto local = inner_[t.outer].test_indices(t.inner);
                for (std::size_t r = 0; r < local.size(); ++r)
                    run.inner_oof[t.outer](static_cast<Eigen::Index>(local[r]), col) = scores[ti](static_cast<Eigen::Index>(r));
            }
        } else if (t.inner == k_in) {
            run.final_models[t.learner] = std::move(*models[ti]);
        } else {
            const auto rows = final_inner_.test_indices(t.inner);
            for (std::size_t r = 0; r < rows.size(); ++r)
                run.final_oof(static_cast<Eigen::Index>(rows[r]), col) = scores[ti](static_cast<Eigen::Index>(r));
        }
    }
    for (std::size_t s = 0; s < work.size(); ++s) runs_[work[s].first] = std::move(fresh[s]);
}

bool EnsembleIntegration::base_complete() const noexcept {
    if (!dataset_) return false;
    return std::all_of(runs_.begin(), runs_.end(), [](const auto& r) { return r.has_value(); });
}

std::vector<ColumnKey> EnsembleIntegration::keys_for(std::size_t modality) const {
    std::vector<ColumnKey> keys;
    for (const auto& l : runs_[modality]->learners) keys.push_back({dataset_->modalities[modality].name, l.name});
    return keys;
}

std::vector<ColumnKey> EnsembleIntegration::column_keys() const {
    if (final_ && !dataset_) return final_->column_keys;
    std::vector<ColumnKey> keys;
    for (std::size_t m = 0; m < runs_.size(); ++m) {
        if (!runs_[m]) continue;
        auto k = keys_for(m);
        keys.insert(keys.end(), k.begin(), k.end());
    }
    return keys;
}

namespace {
Matrix hconcat(const std::vector<const Matrix*>& parts, Eigen::Index rows) {
    Eigen::Index cols = 0;
    for (auto* p : parts) cols += p->cols();
    Matrix out(rows, cols);
    Eigen::Index c = 0;
    for (auto* p : parts) {
        out.middleCols(c, p->cols()) = *p;
        c += p->cols();
    }
    return out;
}
}  // namespace

std::vector<OuterFold> EnsembleIntegration::outer_folds() const {
    if (!dataset_ || !cv_.evaluates()) throw UsageError("outer_folds: no evaluation run available");
    std::vector<OuterFold> folds;
    const auto keys = column_keys();
    for (std::size_t o = 0; o < cv_.k_outer; ++o) {
        OuterFold f;
        f.train = outer_.train_indices(o);
        f.test = outer_.test_indices(o);
        std::vector<const Matrix*> tr, te;
        for (const auto& r : runs_) {
            if (!r) continue;
            tr.push_back(&r->inner_oof[o]);
            te.push_back(&r->outer_test[o]);
        }
        f.train_data = {hconcat(tr, static_cast<Eigen::Index>(f.train.size())), keys, f.train};
        f.test_data = {hconcat(te, static_cast<Eigen::Index>(f.test.size())), keys, f.test};
        folds.push_back(std::move(f));
    }
    return folds;
}

EnsembleTrainingData EnsembleIntegration::final_training_data() const {
    if (final_) return final_->training;
    if (!dataset_ || !cv_.builds_final()) throw UsageError("final_training_data: no build_final run available");
    std::vector<const Matrix*> parts;
    for (const auto& r : runs_)
        if (r) parts.push_back(&r->final_oof);
    std::vector<std::size_t> rows(dataset_->sample_count());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return {hconcat(parts, static_cast<Eigen::Index>(rows.size())), column_keys(), rows};
}

void EnsembleIntegration::refresh_base_summary() {
    const auto n = static_cast<Eigen::Index>(dataset_->sample_count());
    pooled_base_.clear();
    for (std::size_t m = 0; m < runs_.size(); ++m) {
        if (!runs_[m]) continue;
        const auto keys = keys_for(m);
        for (std::size_t c = 0; c < keys.size(); ++c) {
            Vector pooled(n);
            for (std::size_t o = 0; o < cv_.k_outer; ++o) {
                const auto test = outer_.test_indices(o);
                for (std::size_t r = 0; r < test.size(); ++r)
                    pooled(static_cast<Eigen::Index>(test[r])) =
                        runs_[m]->outer_test[o](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
            pooled_base_.emplace_back(keys[c].label(), std::move(pooled));
        }
    }
    base_summary_ = build_summary(pooled_base_, dataset_->labels);
}

void EnsembleIntegration::refresh_final_model() {
    if (!base_complete()) {
        final_.reset();
        return;
    }
    FinalModel fm;
    for (std::size_t m = 0; m < runs_.size(); ++m) {
        fm.modality_names.push_back(dataset_->modalities[m].name);
        fm.feature_names.push_back(dataset_->modalities[m].feature_names);
        fm.base_models.push_back(runs_[m]->final_models);
    }
    fm.column_keys = column_keys();
    final_.reset();
    fm.training = final_training_data();
    fm.sample_ids = dataset_->sample_ids;
    fm.labels = dataset_->labels;
    final_ = std::move(fm);
}

EnsembleIntegration& EnsembleIntegration::fit_ensemble(const std::vector<EnsembleSpec>& ensembles) {
    if (loaded_) throw UsageError("fit_ensemble: engine was restored from an archive and cannot be refit");
    if (!base_complete()) throw UsageError("fit_ensemble: fit_base must cover every modality first");
    if (ensembles.empty()) throw UsageError("fit_ensemble: no ensembles given");
    std::set<std::string> ids;
    for (const auto& e : ensembles) {
        if (e.id.empty()) throw UsageError("fit_ensemble: ensemble id must be non-empty");
        if (!ids.insert(e.id).second) throw UsageError("fit_ensemble: duplicate ensemble id '" + e.id + "'");
        if (e.kind == EnsembleKind::stacker) check_params(e.meta);
        if (e.kind == EnsembleKind::greedy && e.bags < 1) throw UsageError("ensemble '" + e.id + "': bags must be >= 1");
    }

    const auto& y = dataset_->labels;
    const std::size_t folds = cv_.evaluates() ? cv_.k_outer : 0;
    const std::size_t passes = folds + (cv_.builds_final() ? 1 : 0);
    std::vector<OuterFold> outer;
    if (cv_.evaluates()) outer = outer_folds();
    EnsembleTrainingData final_data;
    if (cv_.builds_final()) final_data = final_training_data();

    std::vector<Vector> scores(passes * ensembles.size());
    std::vector<std::optional<EnsembleModel>> finals(ensembles.size());
    parallel_for(passes * ensembles.size(), workers_, [&](std::size_t ti) {
        const auto pass = ti / ensembles.size();
        const auto e = ti % ensembles.size();
        const auto& spec = ensembles[e];
        const Seed seed = derive_seed(cv_.seed, {kEnsembleTask, pass < folds ? pass : cv_.k_outer, hash_string(spec.id)});
        try {
            if (pass < folds) {
                const auto& f = outer[pass];
                const auto model = train_ensemble(spec, f.train_data.scores, take(y, f.train), seed);
                scores[ti] = apply_ensemble(model, f.test_data.scores);
            } else {
                finals[e] = train_ensemble(spec, final_data.scores, y, seed);
            }
        } catch (const DataError& err) {
            throw TrainingError("ensemble '" + spec.id + "': " + err.what());
        } catch (const TrainingError& err) {
            throw TrainingError("ensemble '" + spec.id + "': " + err.what());
        }
    });

    if (cv_.evaluates()) {
        for (std::size_t e = 0; e < ensembles.size(); ++e) {
            Vector pooled(static_cast<Eigen::Index>(y.size()));
            for (std::size_t o = 0; o < folds; ++o) {
                const auto& test = outer[o].test;
                const auto& s = scores[o * ensembles.size() + e];
                for (std::size_t r = 0; r < test.size(); ++r)
                    pooled(static_cast<Eigen::Index>(test[r])) = s(static_cast<Eigen::Index>(r));
            }
            auto it = std::find_if(pooled_ens_.begin(), pooled_ens_.end(),
                                   [&](const auto& p) { return p.first == ensembles[e].id; });
            if (it != pooled_ens_.end()) it->second = std::move(pooled);
            else pooled_ens_.emplace_back(ensembles[e].id, std::move(pooled));
        }
        ensemble_summary_ = build_summary(pooled_ens_, y);
    }
    if (cv_.builds_final()) {
        for (auto& m : finals) {
            auto& list = final_->ensembles;
            auto it = std::find_if(list.begin(), list.end(), [&](const auto& x) { return x.spec.id == m->spec.id; });
            if (it != list.end()) *it = std::move(*m);
            else list.push_back(std::move(*m));
        }
    }
    return *this;
}

const SummaryTable& EnsembleIntegration::base_summary() const {
    if (!base_summary_) throw UsageError("base_summary: no evaluation results (run fit_base in evaluate mode)");
    return *base_summary_;
}

const SummaryTable& EnsembleIntegration::ensemble_summary() const {
    if (!ensemble_summary_) throw UsageError("ensemble_summary: no evaluation results (run fit_ensemble in evaluate mode)");
    return *ensemble_summary_;
}

const FinalModel& EnsembleIntegration::final_model() const {
    if (!final_) throw UsageError("no final model: run fit_base in build_final mode over every modality");
    return *final_;
}

Vector EnsembleIntegration::predict(const std::map<std::string, Matrix>& samples, const std::string& ensemble_id) const {
    const auto& fm = final_model();
    const auto& ens = fm.ensemble(ensemble_id);
    std::optional<Eigen::Index> q;
    std::vector<const Matrix*> inputs;
    for (std::size_t m = 0; m < fm.modality_names.size(); ++m) {
        auto it = samples.find(fm.modality_names[m]);
        if (it == samples.end()) throw DataError("predict: missing modality '" + fm.modality_names[m] + "'");
        const auto& x = it->second;
        if (static_cast<std::size_t>(x.cols()) != fm.feature_count(m))
            throw DataError("predict: modality '" + fm.modality_names[m] + "' has " + std::to_string(x.cols()) +
                            " columns, expected " + std::to_string(fm.feature_count(m)));
        if (q && *q != x.rows()) throw DataError("predict: modalities differ in row count");
        q = x.rows();
        inputs.push_back(&x);
    }
    Matrix s(*q, static_cast<Eigen::Index>(fm.column_keys.size()));
    Eigen::Index c = 0;
    for (std::size_t m = 0; m < fm.base_models.size(); ++m)
        for (const auto& model : fm.base_models[m]) s.col(c++) = predict_proba(model, *inputs[m]);
    return apply_ensemble(ens, s);
}

Vector EnsembleIntegration::predict(const MultiModalDataset& ds, const std::string& ensemble_id) const {
    std::map<std::string, Matrix> samples;
    for (const auto& m : ds.modalities) samples.emplace(m.name, m.features);
    return predict(samples, ensemble_id);
}

}  // namespace ei
