#include "flowpat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flowpat/errors.hpp"
#include "flowpat/rng.hpp"
#include "flowpat/text.hpp"

namespace flowpat {

namespace {

std::string row_prefix(std::size_t line_no) {
    return "line " + std::to_string(line_no) + ": ";
}

} // namespace

void validate_raw_features(const FeatureVector& x) {
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::isfinite(x[i])) {
            throw ValidationError(std::string(kFeatureNames[i]) + " is not finite");
        }
    }
    if (x[kVsl] < 0.0 || x[kVsg] < 0.0) {
        throw ValidationError("superficial velocities must be >= 0");
    }
    if (x[kDiameter] <= 0.0) throw ValidationError("diameter must be > 0");
    if (x[kInclination] < -90.0 || x[kInclination] > 90.0) {
        throw ValidationError("inclination must lie in [-90, 90] degrees");
    }
    if (x[kRhoL] <= 0.0 || x[kRhoG] <= 0.0) {
        throw ValidationError("densities must be > 0");
    }
    if (x[kMuL] <= 0.0 || x[kMuG] <= 0.0) {
        throw ValidationError("viscosities must be > 0");
    }
    if (x[kSigma] <= 0.0) throw ValidationError("surface tension must be > 0");
}

// ---------------------------------------------------------------------------
// Labels and schemes

std::string_view to_string(FlowLabel label) {
    switch (label) {
        case FlowLabel::A: return "A";
        case FlowLabel::B: return "B";
        case FlowLabel::DB: return "DB";
        case FlowLabel::I: return "I";
        case FlowLabel::SS: return "SS";
        case FlowLabel::SW: return "SW";
        case FlowLabel::ST: return "ST";
        case FlowLabel::Intermittent: return "Intermittent";
        case FlowLabel::Dispersed: return "Dispersed";
        case FlowLabel::Segregate: return "Segregate";
    }
    return "?";
}

std::optional<FlowLabel> parse_label(std::string_view token) {
    static const std::pair<std::string_view, FlowLabel> kTable[] = {
        {"a", FlowLabel::A},
        {"b", FlowLabel::B},
        {"db", FlowLabel::DB},
        {"i", FlowLabel::I},
        {"ss", FlowLabel::SS},
        {"sw", FlowLabel::SW},
        {"st", FlowLabel::ST},
        {"intermittent", FlowLabel::Intermittent},
        {"dispersed", FlowLabel::Dispersed},
        {"segregate", FlowLabel::Segregate},
    };
    const std::string lower = text::to_lower(token);
    for (const auto& [name, label] : kTable) {
        if (lower == name) return label;
    }
    return std::nullopt;
}

LabelScheme::LabelScheme(SchemeId id, std::vector<FlowLabel> classes)
    : id_(id), classes_(std::move(classes)) {}

const LabelScheme& LabelScheme::test1() {
    static const LabelScheme scheme(SchemeId::Test1,
                                    {FlowLabel::A, FlowLabel::B, FlowLabel::DB,
                                     FlowLabel::I, FlowLabel::SS, FlowLabel::SW});
    return scheme;
}

const LabelScheme& LabelScheme::test2() {
    static const LabelScheme scheme(SchemeId::Test2,
                                    {FlowLabel::A, FlowLabel::B, FlowLabel::DB,
                                     FlowLabel::I, FlowLabel::ST});
    return scheme;
}

const LabelScheme& LabelScheme::test3() {
    static const LabelScheme scheme(SchemeId::Test3,
                                    {FlowLabel::Intermittent, FlowLabel::Dispersed,
                                     FlowLabel::Segregate});
    return scheme;
}

const LabelScheme& LabelScheme::get(SchemeId id) {
    switch (id) {
        case SchemeId::Test1: return test1();
        case SchemeId::Test2: return test2();
        case SchemeId::Test3: return test3();
    }
    throw ValidationError("unknown scheme id");
}

std::optional<SchemeId> LabelScheme::parse_id(std::string_view name) {
    const std::string lower = text::to_lower(name);
    if (lower == "test1") return SchemeId::Test1;
    if (lower == "test2") return SchemeId::Test2;
    if (lower == "test3") return SchemeId::Test3;
    return std::nullopt;
}

std::string_view LabelScheme::name() const {
    switch (id_) {
        case SchemeId::Test1: return "Test1";
        case SchemeId::Test2: return "Test2";
        case SchemeId::Test3: return "Test3";
    }
    return "?";
}

bool LabelScheme::contains(FlowLabel label) const {
    return std::find(classes_.begin(), classes_.end(), label) != classes_.end();
}

std::size_t LabelScheme::index_of(FlowLabel label) const {
    const auto it = std::find(classes_.begin(), classes_.end(), label);
    if (it == classes_.end()) {
        throw ValidationError("label " + std::string(to_string(label)) +
                              " is not a class of scheme " + std::string(name()));
    }
    return static_cast<std::size_t>(it - classes_.begin());
}

namespace {

int chain_rank(SchemeId id) {
    switch (id) {
        case SchemeId::Test1: return 0;
        case SchemeId::Test2: return 1;
        case SchemeId::Test3: return 2;
    }
    return -1;
}

FlowLabel merge_step_to_test2(FlowLabel label) {
    if (label == FlowLabel::SS || label == FlowLabel::SW) return FlowLabel::ST;
    return label;
}

FlowLabel merge_step_to_test3(FlowLabel label) {
    switch (label) {
        case FlowLabel::I: return FlowLabel::Intermittent;
        case FlowLabel::DB:
        case FlowLabel::B: return FlowLabel::Dispersed;
        case FlowLabel::ST:
        case FlowLabel::A: return FlowLabel::Segregate;
        default:
            throw ValidationError("label " + std::string(to_string(label)) +
                                  " has no Test3 merge target");
    }
}

} // namespace

bool LabelScheme::reachable_from(const LabelScheme& src) const {
    return chain_rank(id_) >= chain_rank(src.id());
}

FlowLabel LabelScheme::merge_from(const LabelScheme& src, FlowLabel label) const {
    if (!reachable_from(src)) {
        throw ValidationError("scheme " + std::string(name()) +
                              " is not reachable from " + std::string(src.name()));
    }
    if (!src.contains(label)) {
        throw ValidationError("label " + std::string(to_string(label)) +
                              " is not a class of scheme " + std::string(src.name()));
    }
    FlowLabel out = label;
    int rank = chain_rank(src.id());
    while (rank < chain_rank(id_)) {
        out = rank == 0 ? merge_step_to_test2(out) : merge_step_to_test3(out);
        ++rank;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset

void Dataset::add(const FeatureVector& x, FlowLabel label) {
    if (!scheme_->contains(label)) {
        throw ValidationError("label " + std::string(to_string(label)) +
                              " is not a class of scheme " + std::string(scheme_->name()));
    }
    features_.push_back(x);
    labels_.push_back(label);
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(scheme_->size(), 0);
    for (const FlowLabel label : labels_) {
        counts[scheme_->index_of(label)] += 1;
    }
    return counts;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kRulesCommentKey = "flowmap-rules ";

struct CsvLines {
    std::vector<std::string> rows; // data rows only
    std::vector<std::size_t> line_numbers;
    std::string rules_version;
};

CsvLines read_csv_lines(const std::filesystem::path& path,
                        std::string_view expected_header) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    CsvLines out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '#') {
            const std::string_view body = text::trim(trimmed.substr(1));
            if (body.rfind(kRulesCommentKey, 0) == 0) {
                out.rules_version = std::string(text::trim(body.substr(kRulesCommentKey.size())));
            }
            continue;
        }
        if (!header_seen) {
            if (trimmed != expected_header) {
                throw ValidationError(row_prefix(line_no) + "bad header, expected \"" +
                                      std::string(expected_header) + "\"");
            }
            header_seen = true;
            continue;
        }
        out.rows.emplace_back(trimmed);
        out.line_numbers.push_back(line_no);
    }
    if (!header_seen) {
        throw ValidationError(path.string() + ": missing header row");
    }
    if (out.rows.empty()) {
        throw ValidationError(path.string() + ": empty dataset (header only)");
    }
    return out;
}

FeatureVector parse_feature_fields(std::span<const std::string_view> fields,
                                   std::size_t line_no) {
    FeatureVector x{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const auto value = text::parse_double(text::trim(fields[i]));
        if (!value) {
            throw ValidationError(row_prefix(line_no) + "field " +
                                  std::string(kFeatureNames[i]) + " is not numeric: \"" +
                                  std::string(fields[i]) + "\"");
        }
        x[i] = *value;
    }
    try {
        validate_raw_features(x);
    } catch (const ValidationError& e) {
        throw ValidationError(row_prefix(line_no) + e.what());
    }
    return x;
}

FlowLabel parse_scheme_label(std::string_view token, const LabelScheme& scheme,
                             std::size_t line_no) {
    const std::string_view trimmed = text::trim(token);
    const std::string lower = text::to_lower(trimmed);
    if (lower == "sl" || lower == "ch") {
        throw ValidationError(row_prefix(line_no) + "label \"" + std::string(trimmed) +
                              "\" is not used: slug and churn are recorded as intermittent, relabel as I");
    }
    const auto label = parse_label(trimmed);
    if (!label || !scheme.contains(*label)) {
        std::string classes;
        for (const FlowLabel c : scheme.classes()) {
            if (!classes.empty()) classes += ",";
            classes += std::string(to_string(c));
        }
        throw UnknownLabelError(row_prefix(line_no) + "unknown label \"" + std::string(trimmed) +
                                "\" for scheme " + std::string(scheme.name()) +
                                " (classes: " + classes + ")");
    }
    return *label;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const LabelScheme& scheme) {
    const CsvLines lines = read_csv_lines(path, kCsvHeader);
    Dataset ds(scheme);
    ds.set_rules_version(lines.rules_version);
    for (std::size_t r = 0; r < lines.rows.size(); ++r) {
        const std::size_t line_no = lines.line_numbers[r];
        const auto fields = text::split(lines.rows[r], ',');
        if (fields.size() != kFeatureCount + 1) {
            throw ValidationError(row_prefix(line_no) + "expected " +
                                  std::to_string(kFeatureCount + 1) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        const FeatureVector x = parse_feature_fields({fields.data(), kFeatureCount}, line_no);
        ds.add(x, parse_scheme_label(fields.back(), scheme, line_no));
    }
    return ds;
}

Dataset load_csv_auto(const std::filesystem::path& path) {
    std::string last_error;
    for (const SchemeId id : {SchemeId::Test1, SchemeId::Test2, SchemeId::Test3}) {
        try {
            return load_csv(path, LabelScheme::get(id));
        } catch (const UnknownLabelError& e) {
            last_error = e.what();
        }
    }
    throw ValidationError(path.string() + ": no label scheme fits: " + last_error);
}

void save_csv(const Dataset& ds, const std::filesystem::path& path,
              std::span<const std::string> comments) {
    if (ds.empty()) {
        throw ValidationError("refusing to write an empty dataset");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    if (!ds.rules_version().empty()) {
        out << "# " << kRulesCommentKey << ds.rules_version() << "\n";
    }
    for (const std::string& c : comments) out << "# " << c << "\n";
    out << kCsvHeader << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const FeatureVector& x = ds.features(i);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            out << text::fmt17(x[j]) << ',';
        }
        out << to_string(ds.label(i)) << "\n";
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

std::vector<FeatureVector> load_csv_unlabeled(const std::filesystem::path& path) {
    // Header is the labeled header minus the final ",label".
    static const std::string header(kCsvHeader.substr(0, kCsvHeader.rfind(",label")));
    const CsvLines lines = read_csv_lines(path, header);
    std::vector<FeatureVector> out;
    out.reserve(lines.rows.size());
    for (std::size_t r = 0; r < lines.rows.size(); ++r) {
        const std::size_t line_no = lines.line_numbers[r];
        const auto fields = text::split(lines.rows[r], ',');
        if (fields.size() != kFeatureCount) {
            throw ValidationError(row_prefix(line_no) + "expected " +
                                  std::to_string(kFeatureCount) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        out.push_back(parse_feature_fields({fields.data(), kFeatureCount}, line_no));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transforms

Dataset merge_labels(const Dataset& ds, const LabelScheme& target) {
    Dataset out(target);
    out.set_rules_version(ds.rules_version());
    if (ds.standardization()) out.set_standardization(*ds.standardization());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.add(ds.features(i), target.merge_from(ds.scheme(), ds.label(i)));
    }
    return out;
}

namespace {

void validate_split_spec(const SplitSpec& spec) {
    const double fractions[3] = {spec.train_fraction, spec.validation_fraction,
                                 spec.test_fraction};
    for (const double f : fractions) {
        if (!(f > 0.0 && f < 1.0)) {
            throw ValidationError("split fractions must lie in (0, 1)");
        }
    }
    const double sum = fractions[0] + fractions[1] + fractions[2];
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ValidationError("split fractions must sum to 1");
    }
}

// Rounds fraction*n to nearest per split, then repairs the total so the
// counts partition n while each stays within one sample of fraction*n.
std::array<std::size_t, 3> apportion(std::size_t n, const double (&fractions)[3]) {
    double exact[3];
    long counts[3];
    long total = 0;
    for (int i = 0; i < 3; ++i) {
        exact[i] = fractions[i] * static_cast<double>(n);
        counts[i] = static_cast<long>(std::floor(exact[i] + 0.5));
        total += counts[i];
    }
    while (total > static_cast<long>(n)) {
        int pick = 2;
        for (int i = 2; i >= 0; --i) {
            const double over_i = static_cast<double>(counts[i]) - exact[i];
            const double over_p = static_cast<double>(counts[pick]) - exact[pick];
            if (counts[i] > 0 && (counts[pick] == 0 || over_i > over_p)) pick = i;
        }
        counts[pick] -= 1;
        total -= 1;
    }
    while (total < static_cast<long>(n)) {
        int pick = 0;
        for (int i = 0; i < 3; ++i) {
            if (exact[i] - static_cast<double>(counts[i]) >
                exact[pick] - static_cast<double>(counts[pick])) {
                pick = i;
            }
        }
        counts[pick] += 1;
        total += 1;
    }
    return {static_cast<std::size_t>(counts[0]), static_cast<std::size_t>(counts[1]),
            static_cast<std::size_t>(counts[2])};
}

} // namespace

SplitIndices stratified_split_indices(const Dataset& ds, const SplitSpec& spec) {
    validate_split_spec(spec);
    if (ds.empty()) {
        throw ValidationError("cannot split an empty dataset");
    }
    const double fractions[3] = {spec.train_fraction, spec.validation_fraction,
                                 spec.test_fraction};
    rng::Engine engine(spec.seed);
    SplitIndices out;
    for (const FlowLabel cls : ds.scheme().classes()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.label(i) == cls) idx.push_back(i);
        }
        rng::shuffle(idx, engine);
        if (idx.empty()) continue;
        const auto counts = apportion(idx.size(), fractions);
        std::size_t pos = 0;
        for (std::size_t i = 0; i < counts[0]; ++i) out.train.push_back(idx[pos++]);
        for (std::size_t i = 0; i < counts[1]; ++i) out.validation.push_back(idx[pos++]);
        for (std::size_t i = 0; i < counts[2]; ++i) out.test.push_back(idx[pos++]);
    }
    return out;
}

std::array<Dataset, 3> stratified_split(const Dataset& ds, const SplitSpec& spec) {
    const SplitIndices idx = stratified_split_indices(ds, spec);
    return {subset(ds, idx.train), subset(ds, idx.validation), subset(ds, idx.test)};
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds,
                                                       std::size_t nfolds,
                                                       std::uint64_t seed) {
    if (nfolds < 2) {
        throw ValidationError("nfolds must be >= 2");
    }
    if (nfolds > ds.size()) {
        throw ValidationError("nfolds exceeds the dataset size");
    }
    rng::Engine engine(seed);
    std::vector<std::vector<std::size_t>> folds(nfolds);
    // A single cursor runs across classes so that leave-one-out degenerates
    // to one sample per fold. Classes smaller than nfolds simply leave some
    // folds without that class.
    std::size_t cursor = 0;
    for (const FlowLabel cls : ds.scheme().classes()) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.label(i) == cls) idx.push_back(i);
        }
        rng::shuffle(idx, engine);
        for (const std::size_t sample : idx) {
            folds[cursor % nfolds].push_back(sample);
            ++cursor;
        }
    }
    return folds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out(ds.scheme());
    out.set_rules_version(ds.rules_version());
    if (ds.standardization()) out.set_standardization(*ds.standardization());
    for (const std::size_t i : indices) {
        if (i >= ds.size()) {
            throw ValidationError("subset index out of range");
        }
        out.add(ds.features(i), ds.label(i));
    }
    return out;
}

std::pair<Dataset, Standardization> standardize_fit(const Dataset& ds) {
    if (ds.empty()) {
        throw ValidationError("cannot standardize an empty dataset");
    }
    const double n = static_cast<double>(ds.size());
    Standardization params;
    for (std::size_t col = 0; col < kFeatureCount; ++col) {
        bool constant = true;
        const double first = ds.features(0)[col];
        double sum = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double v = ds.features(i)[col];
            sum += v;
            if (v != first) constant = false;
        }
        if (constant) {
            // All values identical: center on the shared value and record a
            // unit stddev so the transform stays total.
            params.mean[col] = first;
            params.stddev[col] = 1.0;
            continue;
        }
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const double d = ds.features(i)[col] - mean;
            sq += d * d;
        }
        params.mean[col] = mean;
        params.stddev[col] = std::sqrt(sq / n);
    }
    return {standardize_apply(ds, params), params};
}

Dataset standardize_apply(const Dataset& ds, const Standardization& params) {
    for (std::size_t col = 0; col < kFeatureCount; ++col) {
        if (!(params.stddev[col] > 0.0)) {
            throw ValidationError("standardization stddev must be > 0");
        }
    }
    Dataset out(ds.scheme());
    out.set_rules_version(ds.rules_version());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        FeatureVector x = ds.features(i);
        for (std::size_t col = 0; col < kFeatureCount; ++col) {
            x[col] = (x[col] - params.mean[col]) / params.stddev[col];
        }
        out.add(x, ds.label(i));
    }
    out.set_standardization(params);
    return out;
}

void save_standardization(const Standardization& params,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << kScalerMagic << "\n";
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        out << kFeatureNames[i] << ' ' << text::fmt17(params.mean[i]) << ' '
            << text::fmt17(params.stddev[i]) << "\n";
    }
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

Standardization load_standardization(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string() +
                      " (the scaler sidecar written by `flowpat train`)");
    }
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kScalerMagic) {
        throw ValidationError(path.string() + ": unsupported scaler format");
    }
    Standardization params;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!std::getline(in, line)) {
            throw ValidationError(path.string() + ": truncated scaler file");
        }
        const auto fields = text::split(text::trim(line), ' ');
        if (fields.size() != 3 || text::trim(fields[0]) != kFeatureNames[i]) {
            throw ValidationError(path.string() + ": bad scaler line for " +
                                  std::string(kFeatureNames[i]));
        }
        const auto mean = text::parse_double(text::trim(fields[1]));
        const auto stddev = text::parse_double(text::trim(fields[2]));
        if (!mean || !stddev || !(*stddev > 0.0)) {
            throw ValidationError(path.string() + ": bad scaler numbers for " +
                                  std::string(kFeatureNames[i]));
        }
        params.mean[i] = *mean;
        params.stddev[i] = *stddev;
    }
    return params;
}

} // namespace flowpat
