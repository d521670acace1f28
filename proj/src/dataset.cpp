#include "ei/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ei/error.hpp"

namespace ei {

Matrix take_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

Labels take(const Labels& y, const std::vector<std::size_t>& rows) {
    Labels out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(y[r]);
    return out;
}

std::size_t MultiModalDataset::find_modality(const std::string& name) const noexcept {
    for (std::size_t i = 0; i < modalities.size(); ++i)
        if (modalities[i].name == name) return i;
    return npos;
}

ValidationReport validate_dataset(const MultiModalDataset& ds) {
    ValidationReport report;
    const auto n = ds.labels.size();

    if (ds.modalities.empty()) report.push_back({"no modalities", "", -1, -1});
    if (ds.sample_ids.size() != n)
        report.push_back({"sample_ids length differs from labels length", "", -1, -1});

    std::set<std::string> ids;
    for (std::size_t r = 0; r < ds.sample_ids.size(); ++r)
        if (!ids.insert(ds.sample_ids[r]).second)
            report.push_back({"duplicate sample id '" + ds.sample_ids[r] + "'", "", static_cast<long>(r), -1});

    std::size_t positives = 0, negatives = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (ds.labels[r] == 1) ++positives;
        else if (ds.labels[r] == 0) ++negatives;
        else report.push_back({"label outside {0,1}", "", static_cast<long>(r), -1});
    }
    if (n > 0 && (positives == 0 || negatives == 0)) report.push_back({"single-class labels", "", -1, -1});
    if (n == 0) report.push_back({"no samples", "", -1, -1});

    std::set<std::string> names;
    for (const auto& m : ds.modalities) {
        if (m.name.empty()) report.push_back({"empty modality name", "", -1, -1});
        else if (!names.insert(m.name).second) report.push_back({"duplicate modality name", m.name, -1, -1});

        if (m.features.cols() < 1) report.push_back({"modality has no features", m.name, -1, -1});
        if (static_cast<std::size_t>(m.features.rows()) != n)
            report.push_back({"row count differs from label count", m.name, -1, -1});
        if (static_cast<std::size_t>(m.features.cols()) != m.feature_names.size())
            report.push_back({"feature_names length differs from column count", m.name, -1, -1});

        std::set<std::string> fnames;
        for (std::size_t c = 0; c < m.feature_names.size(); ++c)
            if (!fnames.insert(m.feature_names[c]).second)
                report.push_back({"duplicate feature name '" + m.feature_names[c] + "'", m.name, -1,
                                  static_cast<long>(c)});

        for (Eigen::Index r = 0; r < m.features.rows(); ++r)
            for (Eigen::Index c = 0; c < m.features.cols(); ++c)
                if (!std::isfinite(m.features(r, c)))
                    report.push_back({"non-finite value", m.name, static_cast<long>(r), static_cast<long>(c)});
    }
    return report;
}

std::string describe(const Violation& v) {
    std::ostringstream out;
    out << v.what;
    if (!v.modality.empty()) out << " [modality " << v.modality << "]";
    if (v.row >= 0) out << " [row " << v.row << "]";
    if (v.column >= 0) out << " [column " << v.column << "]";
    return out.str();
}

void require_valid(const MultiModalDataset& ds) {
    const auto report = validate_dataset(ds);
    if (report.empty()) return;
    std::ostringstream msg;
    msg << "invalid dataset: " << describe(report.front());
    if (report.size() > 1) msg << " (and " << report.size() - 1 << " more)";
    throw DataError(msg.str());
}

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) out.push_back(i);
    return out;
}

FoldAssignment stratified_k_fold(const Labels& labels, std::size_t k, Seed seed) {
    if (k < 2) throw UsageError("stratified_k_fold: k must be at least 2");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DataError("stratified_k_fold: label outside {0,1}");
        by_class[labels[i]].push_back(i);
    }
    for (int c = 1; c >= 0; --c)
        if (by_class[c].size() < k)
            throw DataError("fold infeasible: class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " samples but k = " + std::to_string(k));

    FoldAssignment folds{k, std::vector<std::size_t>(labels.size(), 0)};
    Rng rng(seed);
    std::size_t next = 0;
    for (int c = 1; c >= 0; --c) {
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        for (auto i : idx) {
            folds.fold_of[i] = next;
            next = (next + 1) % k;
        }
    }
    return folds;
}

MultiModalDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 4) throw UsageError("generate_synthetic: n must be at least 4");
    if (spec.modalities.empty()) throw UsageError("generate_synthetic: at least one modality required");
    if (!(spec.complementarity >= 0.0 && spec.complementarity <= 1.0))
        throw UsageError("generate_synthetic: complementarity must lie in [0, 1]");
    for (const auto& m : spec.modalities) {
        if (m.features < 1) throw UsageError("generate_synthetic: modality needs at least one feature");
        if (m.informative > m.features) throw UsageError("generate_synthetic: informative exceeds features");
        if (!(m.noise_std >= 0.0)) throw UsageError("generate_synthetic: noise_std must be non-negative");
    }

    const std::size_t n = spec.n;
    const std::size_t m = spec.modalities.size();
    MultiModalDataset ds;

    Rng label_rng(derive_seed(spec.seed, {0}));
    ds.labels.assign(n, 0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), label_rng);
    for (std::size_t i = 0; i < n / 2 + n % 2; ++i) ds.labels[order[i]] = 1;

    // Group of each sample: which modality carries its full signal.
    std::vector<std::size_t> group(n);
    std::shuffle(order.begin(), order.end(), label_rng);
    for (std::size_t i = 0; i < n; ++i) group[order[i]] = i % m;

    const int width = static_cast<int>(std::to_string(n - 1).size());
    for (std::size_t i = 0; i < n; ++i) {
        auto id = std::to_string(i);
        ds.sample_ids.push_back("s" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id);
    }

    for (std::size_t mi = 0; mi < m; ++mi) {
        const auto& ms = spec.modalities[mi];
        Rng rng(derive_seed(spec.seed, {1, mi}));
        std::normal_distribution<double> gauss(0.0, 1.0);
        ModalityMatrix mod;
        mod.name = "mod" + std::to_string(mi);
        mod.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ms.features));
        for (std::size_t c = 0; c < ms.features; ++c) mod.feature_names.push_back("f" + std::to_string(c));
        for (std::size_t r = 0; r < n; ++r) {
            const double sign = ds.labels[r] == 1 ? 1.0 : -1.0;
            const double strength = group[r] == mi ? 1.0 : 1.0 - spec.complementarity;
            for (std::size_t c = 0; c < ms.features; ++c) {
                const double z = gauss(rng);
                const auto ri = static_cast<Eigen::Index>(r);
                const auto ci = static_cast<Eigen::Index>(c);
                mod.features(ri, ci) = c < ms.informative ? sign * strength + ms.noise_std * z : z;
            }
        }
        ds.modalities.push_back(std::move(mod));
    }
    return ds;
}

}  // namespace ei
