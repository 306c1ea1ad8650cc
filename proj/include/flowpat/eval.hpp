#pragma once

// Confusion matrices, per-class error rates, overall error/accuracy, and
// the fixed-width report table.

#include <cstdint>
#include <string>
#include <vector>

#include "flowpat/data.hpp"
#include "flowpat/mlp.hpp"

namespace flowpat {

/// k x k count matrix; rows are the true class, columns the predicted class,
/// both in scheme class order.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(const LabelScheme& scheme)
        : scheme_(&scheme), counts_(scheme.size() * scheme.size(), 0) {}

    ConfusionMatrix(const LabelScheme& scheme, std::vector<std::uint64_t> counts);

    const LabelScheme& scheme() const { return *scheme_; }
    std::size_t k() const { return scheme_->size(); }

    std::uint64_t at(std::size_t true_idx, std::size_t pred_idx) const {
        return counts_[true_idx * k() + pred_idx];
    }
    void add(std::size_t true_idx, std::size_t pred_idx, std::uint64_t count = 1);

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_total(std::size_t i) const;
    std::uint64_t col_total(std::size_t j) const;

    /// Cell-wise sum; schemes must match.
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

private:
    const LabelScheme* scheme_;
    std::vector<std::uint64_t> counts_;
};

/// Evaluates the model on every sample. The dataset scheme must match the
/// model's class list and carry the training standardization.
ConfusionMatrix confusion_matrix(const Model& model, const Dataset& ds);

/// Fraction of correctly classified samples.
double accuracy(const Model& model, const Dataset& ds);

struct ClassReport {
    struct Row {
        std::uint64_t misclassified = 0;
        std::uint64_t total = 0;
        double error = 0.0;      // misclassified / total; 0 when total == 0
        bool undefined = false;  // true when total == 0 (rate reads 0/0)
    };
    std::vector<Row> rows;              // one per class, scheme order
    std::uint64_t misclassified = 0;
    std::uint64_t total = 0;
    double overall_error = 0.0;
    double accuracy = 0.0;
};

/// Integer counts stay exact; divisions happen once, here.
ClassReport class_report(const ConfusionMatrix& cm);

/// Aggregates cells under a coarser scheme (row groups and column groups
/// summed). Coarsening never increases the overall error.
ConfusionMatrix merge_confusion(const ConfusionMatrix& cm, const LabelScheme& target);

/// Fixed-width table: predicted classes, Error (7 decimals), Rate
/// ("misclassified/total"); footer row with column sums and the overall
/// error. Classes with no samples are flagged in a trailing comment.
std::string render_table(const ClassReport& report, const ConfusionMatrix& cm);
std::string render_table(const ConfusionMatrix& cm);

/// Machine-readable cells, one "true_label,predicted_label,count" line per cell.
std::string render_flat(const ConfusionMatrix& cm);

} // namespace flowpat
