#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ei/archive.hpp"
#include "ei/config.hpp"
#include "ei/engine.hpp"
#include "ei/error.hpp"
#include "ei/interpreter.hpp"
#include "ei/json_io.hpp"
#include "ei/manifest.hpp"

namespace py = pybind11;
using namespace ei;
using nlohmann::json;

namespace {

// Specs cross the boundary as JSON text so the Python side can pass plain dicts.
std::vector<LearnerSpec> learners_from(const std::vector<std::string>& docs) {
    std::vector<LearnerSpec> out;
    for (std::size_t i = 0; i < docs.size(); ++i)
        out.push_back(json_io::learner_spec_from_json(json::parse(docs[i]), "/learners/" + std::to_string(i), true));
    return out;
}

std::vector<EnsembleSpec> ensembles_from(const std::vector<std::string>& docs) {
    std::vector<EnsembleSpec> out;
    for (std::size_t i = 0; i < docs.size(); ++i)
        out.push_back(json_io::ensemble_spec_from_json(json::parse(docs[i]), "/ensembles/" + std::to_string(i), true));
    return out;
}

py::list summary_rows(const SummaryTable& t) {
    py::list out;
    for (const auto& r : t) {
        py::dict d;
        d["name"] = r.name;
        d["auc"] = r.auc;
        d["fmax"] = r.fmax;
        d["fmax_threshold"] = r.fmax_threshold;
        d["precision_at_fmax"] = r.precision_at_fmax;
        d["recall_at_fmax"] = r.recall_at_fmax;
        d["n_evaluated"] = r.n_evaluated;
        out.append(d);
    }
    return out;
}

py::list ranking_rows(const FeatureRanking& ranking) {
    py::list out;
    for (const auto& r : ranking) out.append(py::make_tuple(r.modality, r.feature, r.score, r.rank));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Ensemble Integration: multi-modal heterogeneous ensembles with nested cross-validation";

    auto base = py::register_exception<Error>(m, "EIError", PyExc_RuntimeError);
    auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<SchemaError>(m, "SchemaError", data.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());

    py::class_<ModalityMatrix>(m, "Modality")
        .def(py::init<std::string, Matrix, std::vector<std::string>>(), py::arg("name"), py::arg("features"),
             py::arg("feature_names"))
        .def_readwrite("name", &ModalityMatrix::name)
        .def_readwrite("features", &ModalityMatrix::features)
        .def_readwrite("feature_names", &ModalityMatrix::feature_names);

    py::class_<MultiModalDataset>(m, "Dataset")
        .def(py::init([](std::vector<ModalityMatrix> mods, Labels labels, std::vector<std::string> ids) {
                 MultiModalDataset ds{std::move(mods), std::move(labels), std::move(ids)};
                 require_valid(ds);
                 return ds;
             }),
             py::arg("modalities"), py::arg("labels"), py::arg("sample_ids"))
        .def_readonly("modalities", &MultiModalDataset::modalities)
        .def_readonly("labels", &MultiModalDataset::labels)
        .def_readonly("sample_ids", &MultiModalDataset::sample_ids)
        .def_property_readonly("n", &MultiModalDataset::sample_count)
        .def("features", [](const MultiModalDataset& ds, const std::string& name) {
            const auto i = ds.find_modality(name);
            if (i == MultiModalDataset::npos) throw UsageError("unknown modality '" + name + "'");
            return ds.modalities[i].features;
        });

    m.def("validate_dataset", [](const MultiModalDataset& ds) {
        std::vector<std::string> out;
        for (const auto& v : validate_dataset(ds)) out.push_back(describe(v));
        return out;
    });
    m.def("load_manifest", [](const std::filesystem::path& p) { return load_manifest(p); }, py::arg("path"));
    m.def("write_dataset", &write_dataset, py::arg("dataset"), py::arg("directory"));
    m.def(
        "generate_synthetic",
        [](std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& mods, double c, Seed seed) {
            SyntheticSpec spec{n, {}, c, seed};
            for (const auto& [f, inf, noise] : mods) spec.modalities.push_back({f, inf, noise});
            return generate_synthetic(spec);
        },
        py::arg("n"), py::arg("modalities"), py::arg("complementarity") = 0.0, py::arg("seed") = 0,
        "modalities: list of (features, informative, noise_std)");
    m.def(
        "stratified_k_fold", [](const Labels& y, std::size_t k, Seed seed) { return stratified_k_fold(y, k, seed).fold_of; },
        py::arg("labels"), py::arg("k"), py::arg("seed") = 0);

    m.def("roc_auc", &roc_auc, py::arg("scores"), py::arg("labels"));
    m.def(
        "fmax",
        [](const Vector& s, const Labels& y) {
            const auto r = fmax(s, y);
            return py::make_tuple(r.fmax, r.threshold);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "logistic_loss_gradient",
        [](const Vector& w, double b, const Matrix& x, const Labels& y, double l2) {
            const auto g = logistic_loss_gradient(w, b, x, y, l2);
            return py::make_tuple(g.weights, g.bias, g.loss);
        },
        py::arg("weights"), py::arg("bias"), py::arg("x"), py::arg("y"), py::arg("l2") = 0.0);

    m.def(
        "_fit_predict",
        [](const std::string& spec, const Matrix& x, const Labels& y, const Matrix& q, Seed seed) {
            const auto model = fit_learner(learners_from({spec}).front(), x, y, seed);
            return predict_proba(model, q);
        },
        py::arg("spec"), py::arg("x"), py::arg("y"), py::arg("query"), py::arg("seed") = 0);

    py::class_<EnsembleIntegration>(m, "_Engine")
        .def(py::init([](std::size_t k_outer, std::size_t k_inner, Seed seed, const std::string& mode, std::size_t workers) {
                 if (k_outer < 2 || k_inner < 2) throw UsageError("k_outer and k_inner must be at least 2");
                 return EnsembleIntegration({k_outer, k_inner, seed, parse_cv_mode(mode)}, workers);
             }),
             py::arg("k_outer"), py::arg("k_inner"), py::arg("seed"), py::arg("mode"), py::arg("workers"))
        .def(
            "fit_base",
            [](EnsembleIntegration& e, const MultiModalDataset& ds,
               const std::vector<std::pair<std::string, std::vector<std::string>>>& assignment) {
                PredictorAssignment a;
                for (const auto& [name, specs] : assignment) a.emplace_back(name, learners_from(specs));
                py::gil_scoped_release release;
                e.fit_base(ds, a);
            },
            py::arg("dataset"), py::arg("assignment"))
        .def(
            "fit_ensemble",
            [](EnsembleIntegration& e, const std::vector<std::string>& specs) {
                const auto parsed = ensembles_from(specs);
                py::gil_scoped_release release;
                e.fit_ensemble(parsed);
            },
            py::arg("ensembles"))
        .def("base_summary", [](const EnsembleIntegration& e) { return summary_rows(e.base_summary()); })
        .def("ensemble_summary", [](const EnsembleIntegration& e) { return summary_rows(e.ensemble_summary()); })
        .def("column_keys",
             [](const EnsembleIntegration& e) {
                 std::vector<std::string> out;
                 for (const auto& k : e.column_keys()) out.push_back(k.label());
                 return out;
             })
        .def("outer_folds",
             [](const EnsembleIntegration& e) {
                 py::list out;
                 for (const auto& f : e.outer_folds())
                     out.append(py::make_tuple(f.train, f.test, f.train_data.scores, f.test_data.scores));
                 return out;
             })
        .def("final_training_matrix", [](const EnsembleIntegration& e) { return e.final_training_data().scores; })
        .def("ensemble_ids",
             [](const EnsembleIntegration& e) {
                 std::vector<std::string> out;
                 for (const auto& ens : e.final_model().ensembles) out.push_back(ens.spec.id);
                 return out;
             })
        .def(
            "predict",
            [](const EnsembleIntegration& e, const std::map<std::string, Matrix>& samples, const std::string& id) {
                return e.predict(samples, id);
            },
            py::arg("samples"), py::arg("ensemble_id"))
        .def(
            "interpret",
            [](const EnsembleIntegration& e, const MultiModalDataset* ds, const std::string& id, const std::string& metric,
               std::size_t repeats, Seed seed) {
                const auto met = parse_metric(metric);
                return ranking_rows(ds ? interpret(e, *ds, id, met, repeats, seed) : interpret(e, id, met, repeats, seed));
            },
            py::arg("dataset"), py::arg("ensemble_id"), py::arg("metric"), py::arg("n_repeats"), py::arg("seed"))
        .def(
            "save", [](const EnsembleIntegration& e, const std::filesystem::path& p) { save_model(e, p); }, py::arg("path"))
        .def_static(
            "load", [](const std::filesystem::path& p) { return load_model(p); }, py::arg("path"));
}
