#pragma once

// Feature schema, label schemes, dataset container, CSV ingestion,
// standardization, stratified splitting and label merging.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flowpat {

// The fixed 11-column feature schema. Column order is part of the file
// format and must not change:
//   vsl          superficial liquid velocity   [m/s]
//   vsg          superficial gas velocity      [m/s]
//   diameter     pipe inner diameter           [m]
//   inclination  pipe inclination              [deg, -90..90]
//   rho_l        liquid density                [kg/m^3]
//   rho_g        gas density                   [kg/m^3]
//   mu_l         liquid viscosity              [Pa s]
//   mu_g         gas viscosity                 [Pa s]
//   sigma        surface tension               [N/m]
//   pressure     system pressure               [kPa]
//   temperature  system temperature            [degC]
inline constexpr std::size_t kFeatureCount = 11;

using FeatureVector = std::array<double, kFeatureCount>;

enum Feature : std::size_t {
    kVsl = 0,
    kVsg = 1,
    kDiameter = 2,
    kInclination = 3,
    kRhoL = 4,
    kRhoG = 5,
    kMuL = 6,
    kMuG = 7,
    kSigma = 8,
    kPressure = 9,
    kTemperature = 10,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "vsl", "vsg", "diameter", "inclination", "rho_l", "rho_g",
    "mu_l", "mu_g", "sigma", "pressure", "temperature",
};

inline constexpr std::string_view kCsvHeader =
    "vsl,vsg,diameter,inclination,rho_l,rho_g,mu_l,mu_g,sigma,pressure,temperature,label";

/// Throws ValidationError unless the vector satisfies the raw-data schema:
/// all entries finite, velocities >= 0, diameter/densities/viscosities/
/// surface tension > 0, inclination in [-90, 90].
void validate_raw_features(const FeatureVector& x);

// ---------------------------------------------------------------------------
// Labels and schemes

enum class FlowLabel : std::uint8_t {
    A,            // annular
    B,            // bubble
    DB,           // dispersed bubble
    I,            // intermittent (slug + churn)
    SS,           // stratified smooth
    SW,           // stratified wavy
    ST,           // stratified (SS + SW merged)
    Intermittent, // coarse: I
    Dispersed,    // coarse: DB + B
    Segregate,    // coarse: ST + A
};

std::string_view to_string(FlowLabel label);

/// Case-insensitive parse of any label token; nullopt for unknown tokens.
std::optional<FlowLabel> parse_label(std::string_view token);

enum class SchemeId : std::uint8_t { Test1, Test2, Test3 };

/// A class set plus the merge map that produced it from the base six
/// classes. The three schemes are fixed singletons:
///   Test1: A, B, DB, I, SS, SW            (identity)
///   Test2: A, B, DB, I, ST                (SS, SW -> ST)
///   Test3: Intermittent, Dispersed, Segregate
///          (I -> Intermittent; DB, B -> Dispersed; SS, SW, A -> Segregate)
class LabelScheme {
public:
    static const LabelScheme& test1();
    static const LabelScheme& test2();
    static const LabelScheme& test3();
    static const LabelScheme& get(SchemeId id);

    /// Case-insensitive "Test1"/"Test2"/"Test3".
    static std::optional<SchemeId> parse_id(std::string_view name);

    SchemeId id() const { return id_; }
    std::string_view name() const;
    const std::vector<FlowLabel>& classes() const { return classes_; }
    std::size_t size() const { return classes_.size(); }

    bool contains(FlowLabel label) const;
    /// Position of label in classes(); throws ValidationError if absent.
    std::size_t index_of(FlowLabel label) const;

    /// True when this scheme can be produced from `src` along the
    /// Test1 -> Test2 -> Test3 chain (identity included).
    bool reachable_from(const LabelScheme& src) const;

    /// Maps a label of `src` into this scheme, composing merge steps as
    /// needed. Throws ValidationError when unreachable.
    FlowLabel merge_from(const LabelScheme& src, FlowLabel label) const;

private:
    LabelScheme(SchemeId id, std::vector<FlowLabel> classes);

    SchemeId id_;
    std::vector<FlowLabel> classes_;
};

// ---------------------------------------------------------------------------
// Datasets

/// Per-feature z-score parameters recorded by standardize_fit.
struct Standardization {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};
};

class Dataset {
public:
    explicit Dataset(const LabelScheme& scheme) : scheme_(&scheme) {}

    const LabelScheme& scheme() const { return *scheme_; }
    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    const FeatureVector& features(std::size_t i) const { return features_[i]; }
    FlowLabel label(std::size_t i) const { return labels_[i]; }

    /// Appends a sample; the label must belong to the scheme.
    void add(const FeatureVector& x, FlowLabel label);

    const std::optional<Standardization>& standardization() const {
        return standardization_;
    }
    void set_standardization(const Standardization& s) { standardization_ = s; }

    /// Flow-map rule version carried in a CSV comment, empty when absent.
    const std::string& rules_version() const { return rules_version_; }
    void set_rules_version(std::string v) { rules_version_ = std::move(v); }

    /// Sample count per scheme class, in class order.
    std::vector<std::size_t> class_counts() const;

private:
    const LabelScheme* scheme_;
    std::vector<FeatureVector> features_;
    std::vector<FlowLabel> labels_;
    std::optional<Standardization> standardization_;
    std::string rules_version_;
};

// ---------------------------------------------------------------------------
// CSV

/// Reads the documented CSV format under the given scheme. Lines starting
/// with '#' are comments; a `# flowmap-rules <version>` comment is captured
/// into the dataset. Labels parse case-insensitively. SL/CH tags are
/// rejected with a pointed message (they belong under I).
Dataset load_csv(const std::filesystem::path& path, const LabelScheme& scheme);

/// Tries Test1, then Test2, then Test3 and returns the first scheme whose
/// class set accepts every label in the file.
Dataset load_csv_auto(const std::filesystem::path& path);

/// Writes header plus one row per sample with 17 significant digits. The
/// dataset's rule version (when set) and any extra comment lines are written
/// as "# <text>" before the header. Empty dataset is an error.
void save_csv(const Dataset& ds, const std::filesystem::path& path,
              std::span<const std::string> comments = {});

/// Reads a label-free CSV (11 feature columns, mandatory header).
std::vector<FeatureVector> load_csv_unlabeled(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Transforms

/// Relabels every sample into `target` via the merge map chain. Features and
/// sample order are untouched. Throws when target is unreachable.
Dataset merge_labels(const Dataset& ds, const LabelScheme& target);

struct SplitSpec {
    double train_fraction = 0.6;
    double validation_fraction = 0.2;
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Stratified 3-way split. Per class, samples are shuffled by the seeded
/// generator and apportioned by rounding fraction*count to nearest; the
/// leftover (at most one per class) goes to the most under-filled split,
/// train first on ties. The three index lists partition the dataset.
SplitIndices stratified_split_indices(const Dataset& ds, const SplitSpec& spec);

/// Same split, materialized as train/validation/test datasets.
std::array<Dataset, 3> stratified_split(const Dataset& ds, const SplitSpec& spec);

/// Stratified fold assignment for cross-validation: per class, shuffled
/// indices are dealt round-robin, so per-class fold counts differ by <= 1.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds,
                                                       std::size_t nfolds,
                                                       std::uint64_t seed);

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// z-scores every column with its sample mean and population stddev and
/// records the parameters on the result. Columns whose values are all
/// identical map to zero with stddev recorded as 1.
std::pair<Dataset, Standardization> standardize_fit(const Dataset& ds);

/// Applies previously fitted parameters (validation/test path).
Dataset standardize_apply(const Dataset& ds, const Standardization& params);

inline constexpr std::string_view kScalerMagic = "FLOWPAT-SCALER v1";

/// Text sidecar with one "name mean stddev" line per feature; written next
/// to trained models so evaluation can reuse the training parameters.
void save_standardization(const Standardization& params,
                          const std::filesystem::path& path);
Standardization load_standardization(const std::filesystem::path& path);

} // namespace flowpat
