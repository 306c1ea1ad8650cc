#include "flowpat/eval.hpp"

#include <algorithm>
#include <sstream>

#include "flowpat/errors.hpp"
#include "flowpat/text.hpp"

namespace flowpat {

ConfusionMatrix::ConfusionMatrix(const LabelScheme& scheme,
                                 std::vector<std::uint64_t> counts)
    : scheme_(&scheme), counts_(std::move(counts)) {
    if (counts_.size() != scheme.size() * scheme.size()) {
        throw ValidationError("confusion matrix needs k*k counts");
    }
}

void ConfusionMatrix::add(std::size_t true_idx, std::size_t pred_idx,
                          std::uint64_t count) {
    if (true_idx >= k() || pred_idx >= k()) {
        throw ValidationError("confusion matrix index out of range");
    }
    counts_[true_idx * k() + pred_idx] += count;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (const std::uint64_t c : counts_) sum += c;
    return sum;
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < k(); ++i) sum += at(i, i);
    return sum;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t i) const {
    std::uint64_t sum = 0;
    for (std::size_t j = 0; j < k(); ++j) sum += at(i, j);
    return sum;
}

std::uint64_t ConfusionMatrix::col_total(std::size_t j) const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < k(); ++i) sum += at(i, j);
    return sum;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (scheme_ != other.scheme_) {
        throw ValidationError("cannot sum confusion matrices of different schemes");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion_matrix(const Model& model, const Dataset& ds) {
    const LabelScheme& scheme = ds.scheme();
    if (scheme.classes() != model.classes) {
        throw ValidationError("dataset scheme does not match the model class list");
    }
    ConfusionMatrix cm(scheme);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::size_t true_idx = scheme.index_of(ds.label(i));
        const std::size_t pred_idx = predict_index(model, ds.features(i));
        cm.add(true_idx, pred_idx);
    }
    return cm;
}

double accuracy(const Model& model, const Dataset& ds) {
    const ConfusionMatrix cm = confusion_matrix(model, ds);
    return class_report(cm).accuracy;
}

ClassReport class_report(const ConfusionMatrix& cm) {
    ClassReport report;
    report.rows.resize(cm.k());
    for (std::size_t i = 0; i < cm.k(); ++i) {
        ClassReport::Row& row = report.rows[i];
        row.total = cm.row_total(i);
        row.misclassified = row.total - cm.at(i, i);
        if (row.total == 0) {
            row.undefined = true;
            row.error = 0.0;
        } else {
            row.error = static_cast<double>(row.misclassified) /
                        static_cast<double>(row.total);
        }
        report.total += row.total;
        report.misclassified += row.misclassified;
    }
    if (report.total > 0) {
        report.overall_error = static_cast<double>(report.misclassified) /
                               static_cast<double>(report.total);
    }
    report.accuracy = 1.0 - report.overall_error;
    return report;
}

ConfusionMatrix merge_confusion(const ConfusionMatrix& cm, const LabelScheme& target) {
    const LabelScheme& src = cm.scheme();
    if (!target.reachable_from(src)) {
        throw ValidationError("scheme " + std::string(target.name()) +
                              " is not reachable from " + std::string(src.name()));
    }
    // Source class index -> target class index.
    std::vector<std::size_t> group(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        group[i] = target.index_of(target.merge_from(src, src.classes()[i]));
    }
    ConfusionMatrix out(target);
    for (std::size_t i = 0; i < src.size(); ++i) {
        for (std::size_t j = 0; j < src.size(); ++j) {
            if (cm.at(i, j) > 0) out.add(group[i], group[j], cm.at(i, j));
        }
    }
    return out;
}

namespace {

std::string pad_left(std::string_view s, std::size_t width) {
    std::string out;
    if (s.size() < width) out.assign(width - s.size(), ' ');
    out += s;
    return out;
}

std::string rate_text(std::uint64_t misclassified, std::uint64_t total) {
    return std::to_string(misclassified) + "/" + std::to_string(total);
}

} // namespace

std::string render_table(const ClassReport& report, const ConfusionMatrix& cm) {
    const std::size_t k = cm.k();
    std::vector<std::string> names;
    names.reserve(k);
    for (const FlowLabel label : cm.scheme().classes()) {
        names.emplace_back(to_string(label));
    }

    std::size_t label_w = 5; // "Total"
    for (const std::string& n : names) label_w = std::max(label_w, n.size());
    std::size_t count_w = 5;
    for (const std::string& n : names) count_w = std::max(count_w, n.size());
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            count_w = std::max(count_w, std::to_string(cm.at(i, j)).size());
        }
        count_w = std::max(count_w, std::to_string(cm.col_total(i)).size());
    }
    std::size_t rate_w = 4; // "Rate"
    for (std::size_t i = 0; i < k; ++i) {
        rate_w = std::max(rate_w,
                          rate_text(report.rows[i].misclassified, report.rows[i].total).size());
    }
    rate_w = std::max(rate_w, rate_text(report.misclassified, report.total).size());
    const std::size_t error_w = 9; // strlen("0.0000000")

    std::ostringstream out;
    out << pad_left("", label_w);
    for (const std::string& n : names) out << "  " << pad_left(n, count_w);
    out << "  " << pad_left("Error", error_w) << "  " << pad_left("Rate", rate_w) << "\n";

    for (std::size_t i = 0; i < k; ++i) {
        out << pad_left(names[i], label_w);
        for (std::size_t j = 0; j < k; ++j) {
            out << "  " << pad_left(std::to_string(cm.at(i, j)), count_w);
        }
        out << "  " << pad_left(text::fmt7f(report.rows[i].error), error_w) << "  "
            << pad_left(rate_text(report.rows[i].misclassified, report.rows[i].total),
                        rate_w)
            << "\n";
    }

    out << pad_left("Total", label_w);
    for (std::size_t j = 0; j < k; ++j) {
        out << "  " << pad_left(std::to_string(cm.col_total(j)), count_w);
    }
    out << "  " << pad_left(text::fmt7f(report.overall_error), error_w) << "  "
        << pad_left(rate_text(report.misclassified, report.total), rate_w) << "\n";

    for (std::size_t i = 0; i < k; ++i) {
        if (report.rows[i].undefined) {
            out << "# note: no samples of class " << names[i]
                << "; row error undefined\n";
        }
    }
    return out.str();
}

std::string render_table(const ConfusionMatrix& cm) {
    return render_table(class_report(cm), cm);
}

std::string render_flat(const ConfusionMatrix& cm) {
    std::ostringstream out;
    for (std::size_t i = 0; i < cm.k(); ++i) {
        for (std::size_t j = 0; j < cm.k(); ++j) {
            out << to_string(cm.scheme().classes()[i]) << ','
                << to_string(cm.scheme().classes()[j]) << ',' << cm.at(i, j) << "\n";
        }
    }
    return out.str();
}

} // namespace flowpat
