#pragma once

#include "fairnet/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fairnet {

// Bit g is set when a sample belongs to group g. Groups may overlap.
using GroupMask = std::uint32_t;
inline constexpr std::size_t kMaxGroups = 32;

enum class ColumnKind { numeric, categorical };

// --- manifests ---------------------------------------------------------------
//
// A manifest is a plain-text file, one directive per line, '#' starts a
// comment, tokens are separated by whitespace:
//
//   name <dataset name>
//   file <relative path> [skip <n>]        data file(s), concatenated in order
//   header present|absent                  first line of each file names the columns
//   columns <c1> <c2> ...                  column names when header is absent
//   numeric <c> ...                        numeric feature columns
//   categorical <c> ...                    categorical feature columns
//   target <c> positive <v> [<v> ...]      binary target: positive iff value in list
//   missing <token> ...                    cell values treated as missing
//   filter <c> range <lo> <hi>             keep rows with lo <= c <= hi
//   filter <c> == <v> | filter <c> != <v>  keep rows satisfying the comparison
//   group <name> <c> ==|!= <v> [<c> ==|!= <v> ...]   conjunction of predicates
//   expect rows <n>                        counts checked after loading
//   expect positive_percent <pct>
//   test_count <n>                         default number of test samples
//
// Rows failing a filter are dropped first; rows with a missing value in any
// feature, target or group column are dropped next.

struct Predicate {
    std::string column;
    bool equal = true;
    std::string value;
};

struct RowFilter {
    std::string column;
    enum class Kind { range, equal, not_equal } kind = Kind::equal;
    double lo = 0.0;
    double hi = 0.0;
    std::string value;
};

struct GroupDef {
    std::string name;
    std::vector<Predicate> conjunction;
};

struct DataFile {
    std::string path;
    std::size_t skip = 0;
};

struct Manifest {
    std::string name;
    std::vector<DataFile> files;
    bool header = false;
    std::vector<std::string> columns;
    std::vector<std::string> numeric;
    std::vector<std::string> categorical;
    std::string target;
    std::vector<std::string> positive_values;
    std::vector<std::string> missing_tokens;
    std::vector<RowFilter> filters;
    std::vector<GroupDef> groups;
    std::optional<std::size_t> expect_rows;
    std::optional<double> expect_positive_percent;
    std::optional<std::size_t> test_count;
};

Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& path);

// --- datasets ----------------------------------------------------------------

struct FeatureColumn {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    std::vector<double> numeric;
    std::vector<std::string> categorical;
};

struct Dataset {
    std::string name;
    std::vector<FeatureColumn> columns;
    std::vector<double> targets;
    std::vector<std::string> group_names;
    std::vector<GroupMask> membership;
    std::optional<std::size_t> default_test_count;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return targets.size(); }
    std::size_t group_index(std::string_view group) const;
    bool in_group(std::size_t row, std::size_t group) const noexcept { return (membership[row] >> group) & 1u; }
    // Rows of `rows` that belong to `group`, in order. kAllGroup matches all.
    std::vector<std::size_t> members(std::string_view group, std::span<const std::size_t> rows) const;
    std::vector<double> targets_of(std::span<const std::size_t> rows) const;
};

// Loads every file listed in the manifest from `data_dir`. Schema problems are
// rejected; row-count or positive-rate drift against `expect` lines is
// recorded in Dataset::warnings.
Dataset load_dataset(const Manifest& manifest, const std::filesystem::path& data_dir);

struct GroupStatistics {
    std::string group;
    std::size_t size = 0;
    std::size_t positives = 0;
    double positive_percent = 0.0;
    double imbalance_ratio = 0.0;
};

// Statistics for the whole dataset (group kAllGroup) followed by every group.
std::vector<GroupStatistics> group_statistics(const Dataset& dataset, std::span<const std::size_t> rows);

// Negatives over positives. Requires both classes.
double imbalance_ratio(std::span<const double> targets);

// The group each row is scored as when a single prediction per sample is
// needed: the smallest group (by dataset size) containing it.
std::vector<std::string> home_groups(const Dataset& dataset, std::span<const std::size_t> rows);

// --- preprocessing -----------------------------------------------------------

// Column transforms fitted on training rows only: numeric columns are
// standardized (zero-variance columns map to 0), categorical columns are
// one-hot encoded over the categories seen in training, sorted.
class Encoder {
public:
    struct Column {
        std::string name;
        ColumnKind kind = ColumnKind::numeric;
        double mean = 0.0;
        double scale = 0.0;  // 1/std, or 0 for constant columns
        std::vector<std::string> categories;
    };

    static Encoder fit(const Dataset& dataset, std::span<const std::size_t> train_rows);

    std::size_t width() const noexcept;
    std::vector<std::string> feature_names() const;
    const std::vector<Column>& columns() const noexcept { return columns_; }

    // Unseen categories encode as all zeros; a warning per affected column is
    // appended to `warnings` when given.
    ad::Matrix transform(const Dataset& dataset, std::span<const std::size_t> rows,
                         std::vector<std::string>* warnings = nullptr) const;

private:
    std::vector<Column> columns_;
};

// --- splitting ---------------------------------------------------------------

struct SplitSpec {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    double test_fraction = 0.0;
    double val_fraction = 0.0;
    std::uint64_t seed = 0;
};

// Stratifies on (group membership pattern x class): each cell is allocated to
// test, validation and train proportionally with largest-remainder rounding,
// so the totals are exact and every cell is within one sample of its
// proportional share. `test_count`, when given, overrides test_fraction for
// the total test size. Validation takes val_fraction of what remains.
SplitSpec stratified_split(const Dataset& dataset, double test_fraction, double val_fraction, std::uint64_t seed,
                           std::optional<std::size_t> test_count = std::nullopt);

// Three text files (train.idx, validation.idx, test.idx), one index per line.
void write_split(const std::filesystem::path& dir, const SplitSpec& split);
SplitSpec read_split(const std::filesystem::path& dir);

// --- synthetic data ----------------------------------------------------------

struct SyntheticSpec {
    std::size_t n = 1000;
    std::size_t d = 4;
    std::vector<double> group_fractions{0.9, 0.1};
    std::vector<double> per_group_ir{3.0, 10.0};
    double separation = 1.0;
    std::uint64_t seed = 0;
};

// Disjoint groups g0, g1, ... with exact sizes (largest remainder on
// n * fraction) and positives round(size / (1 + IR)). Features are unit
// Gaussians whose mean moves by `separation` (Mahalanobis distance) between
// classes, plus a categorical "group" column.
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace fairnet
