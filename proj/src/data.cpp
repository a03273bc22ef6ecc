#include "fairnet/data.hpp"

#include "fairnet/errors.hpp"
#include "fairnet/model.hpp"

#include <boost/tokenizer.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace fairnet {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::size_t parse_count(const std::string& s, std::string_view what) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw InvalidArgument("manifest: bad " + std::string(what) + " '" + s + "'");
    }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Fisher-Yates with an explicit index draw, so the permutation depends only
// on the engine's output sequence.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(v[i - 1], v[std::min(j, i - 1)]);
    }
}

// Splits `total` across cells proportionally to `sizes` (Hamilton method).
// Ties in the fractional part go to the earlier cell.
std::vector<std::size_t> apportion(std::span<const std::size_t> sizes, std::size_t total) {
    const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<std::size_t> out(sizes.size(), 0);
    if (n == 0) return out;
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        // integer arithmetic for the quotient keeps this exact
        const unsigned __int128 num = static_cast<unsigned __int128>(sizes[c]) * total;
        out[c] = static_cast<std::size_t>(num / n);
        remainders.emplace_back(static_cast<double>(static_cast<std::size_t>(num % n)) / static_cast<double>(n), c);
        assigned += out[c];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[remainders[k].second];
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// manifests

Manifest parse_manifest(std::string_view text) {
    Manifest m;
    std::istringstream is{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    auto fail = [&](const std::string& why) {
        throw InvalidArgument("manifest line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(is, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const auto tok = split_ws(raw);
        if (tok.empty()) continue;
        const auto& key = tok[0];
        auto rest = [&] { return std::vector<std::string>(tok.begin() + 1, tok.end()); };
        if (key == "name") {
            if (tok.size() != 2) fail("name takes one value");
            m.name = tok[1];
        } else if (key == "file") {
            if (tok.size() != 2 && !(tok.size() == 4 && tok[2] == "skip")) fail("expected: file <path> [skip <n>]");
            m.files.push_back({tok[1], tok.size() == 4 ? parse_count(tok[3], "skip count") : 0});
        } else if (key == "header") {
            if (tok.size() != 2 || (tok[1] != "present" && tok[1] != "absent")) fail("header present|absent");
            m.header = tok[1] == "present";
        } else if (key == "columns") {
            m.columns = rest();
        } else if (key == "numeric") {
            for (auto& c : rest()) m.numeric.push_back(c);
        } else if (key == "categorical") {
            for (auto& c : rest()) m.categorical.push_back(c);
        } else if (key == "target") {
            if (tok.size() < 4 || tok[2] != "positive") fail("expected: target <column> positive <value>...");
            m.target = tok[1];
            m.positive_values.assign(tok.begin() + 3, tok.end());
        } else if (key == "missing") {
            for (auto& c : rest()) m.missing_tokens.push_back(c);
        } else if (key == "filter") {
            RowFilter f;
            if (tok.size() == 5 && tok[2] == "range") {
                f.column = tok[1];
                f.kind = RowFilter::Kind::range;
                const auto lo = parse_double(tok[3]), hi = parse_double(tok[4]);
                if (!lo || !hi || *lo > *hi) fail("bad range bounds");
                f.lo = *lo;
                f.hi = *hi;
            } else if (tok.size() == 4 && (tok[2] == "==" || tok[2] == "!=")) {
                f.column = tok[1];
                f.kind = tok[2] == "==" ? RowFilter::Kind::equal : RowFilter::Kind::not_equal;
                f.value = tok[3];
            } else {
                fail("expected: filter <column> range <lo> <hi> | filter <column> ==|!= <value>");
            }
            m.filters.push_back(f);
        } else if (key == "group") {
            if (tok.size() < 5 || (tok.size() - 2) % 3 != 0) fail("expected: group <name> <column> ==|!= <value> ...");
            GroupDef g{tok[1], {}};
            for (std::size_t i = 2; i < tok.size(); i += 3) {
                if (tok[i + 1] != "==" && tok[i + 1] != "!=") fail("group predicates use == or !=");
                g.conjunction.push_back({tok[i], tok[i + 1] == "==", tok[i + 2]});
            }
            m.groups.push_back(std::move(g));
        } else if (key == "expect") {
            if (tok.size() != 3) fail("expected: expect rows|positive_percent <value>");
            if (tok[1] == "rows") {
                m.expect_rows = parse_count(tok[2], "row count");
            } else if (tok[1] == "positive_percent") {
                const auto v = parse_double(tok[2]);
                if (!v) fail("bad percentage");
                m.expect_positive_percent = *v;
            } else {
                fail("unknown expectation '" + tok[1] + "'");
            }
        } else if (key == "test_count") {
            if (tok.size() != 2) fail("test_count takes one value");
            m.test_count = parse_count(tok[1], "test count");
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    if (m.name.empty()) throw InvalidArgument("manifest has no name");
    if (m.files.empty()) throw InvalidArgument("manifest lists no files");
    if (!m.header && m.columns.empty()) throw InvalidArgument("manifest needs 'columns' when header is absent");
    if (m.target.empty()) throw InvalidArgument("manifest has no target");
    if (m.numeric.empty() && m.categorical.empty()) throw InvalidArgument("manifest lists no feature columns");
    if (m.groups.size() > kMaxGroups) throw InvalidArgument("manifest defines more than 32 groups");
    std::set<std::string> names;
    for (const auto& g : m.groups) {
        if (g.name == kAllGroup) throw InvalidArgument("group name 'all' is reserved");
        if (!names.insert(g.name).second) throw InvalidArgument("duplicate group " + g.name);
    }
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

// ---------------------------------------------------------------------------
// loading

std::size_t Dataset::group_index(std::string_view group) const {
    for (std::size_t g = 0; g < group_names.size(); ++g)
        if (group_names[g] == group) return g;
    throw InvalidArgument("dataset " + name + " has no group '" + std::string(group) + "'");
}

std::vector<std::size_t> Dataset::members(std::string_view group, std::span<const std::size_t> rows) const {
    if (group == kAllGroup) return {rows.begin(), rows.end()};
    const auto g = group_index(group);
    std::vector<std::size_t> out;
    for (auto r : rows)
        if (in_group(r, g)) out.push_back(r);
    return out;
}

std::vector<double> Dataset::targets_of(std::span<const std::size_t> rows) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(targets.at(r));
    return out;
}

Dataset load_dataset(const Manifest& manifest, const std::filesystem::path& data_dir) {
    using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
    const boost::escaped_list_separator<char> separator('\\', ',', '"');

    std::vector<std::string> header = manifest.columns;
    std::vector<std::vector<std::string>> rows;

    for (const auto& file : manifest.files) {
        const auto path = data_dir / file.path;
        std::ifstream in(path);
        if (!in) throw IoError("cannot open data file " + path.string());
        std::string line;
        std::size_t line_no = 0;
        bool header_pending = manifest.header;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no <= file.skip) continue;
            if (trim(line).empty()) continue;
            std::vector<std::string> fields;
            try {
                Tokenizer tok(line, separator);
                for (const auto& f : tok) fields.push_back(trim(f));
            } catch (const boost::escaped_list_error& e) {
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed CSV (" + e.what() + ")");
            }
            if (header_pending) {
                header_pending = false;
                if (header.empty()) {
                    header = fields;
                } else if (fields != header) {
                    throw IoError(path.string() + ": header differs from the first file's header");
                }
                continue;
            }
            if (fields.size() != header.size())
                throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
            rows.push_back(std::move(fields));
        }
    }

    // Resolve columns (first occurrence wins for duplicated header names).
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], i);
    std::vector<std::string> needed;
    auto need = [&](const std::string& c) { needed.push_back(c); };
    for (const auto& c : manifest.numeric) need(c);
    for (const auto& c : manifest.categorical) need(c);
    need(manifest.target);
    for (const auto& f : manifest.filters) need(f.column);
    for (const auto& g : manifest.groups)
        for (const auto& p : g.conjunction) need(p.column);
    std::vector<std::string> missing_cols;
    for (const auto& c : needed)
        if (!index.count(c) && std::find(missing_cols.begin(), missing_cols.end(), c) == missing_cols.end())
            missing_cols.push_back(c);
    if (!missing_cols.empty()) {
        std::string msg = "schema mismatch for " + manifest.name + ": missing columns {";
        for (std::size_t i = 0; i < missing_cols.size(); ++i) msg += (i ? ", " : "") + missing_cols[i];
        msg += "}; file provides {";
        for (std::size_t i = 0; i < header.size(); ++i) msg += (i ? ", " : "") + header[i];
        throw IoError(msg + "}");
    }
    auto col = [&](const std::string& c) { return index.find(c)->second; };

    std::vector<std::size_t> used;  // columns subject to the missing-value rule
    for (const auto& c : manifest.numeric) used.push_back(col(c));
    for (const auto& c : manifest.categorical) used.push_back(col(c));
    used.push_back(col(manifest.target));
    for (const auto& g : manifest.groups)
        for (const auto& p : g.conjunction) used.push_back(col(p.column));

    auto is_missing = [&](const std::string& v) {
        if (v.empty()) return true;
        return std::find(manifest.missing_tokens.begin(), manifest.missing_tokens.end(), v) !=
               manifest.missing_tokens.end();
    };
    auto keep = [&](const std::vector<std::string>& r) {
        for (const auto& f : manifest.filters) {
            const auto& v = r[col(f.column)];
            switch (f.kind) {
                case RowFilter::Kind::range: {
                    const auto x = parse_double(v);
                    if (!x || *x < f.lo || *x > f.hi) return false;
                    break;
                }
                case RowFilter::Kind::equal:
                    if (v != f.value) return false;
                    break;
                case RowFilter::Kind::not_equal:
                    if (v == f.value) return false;
                    break;
            }
        }
        for (auto c : used)
            if (is_missing(r[c])) return false;
        return true;
    };

    Dataset ds;
    ds.name = manifest.name;
    ds.default_test_count = manifest.test_count;
    for (const auto& g : manifest.groups) ds.group_names.push_back(g.name);
    for (const auto& c : manifest.numeric) ds.columns.push_back({c, ColumnKind::numeric, {}, {}});
    for (const auto& c : manifest.categorical) ds.columns.push_back({c, ColumnKind::categorical, {}, {}});

    const auto target_col = col(manifest.target);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (!keep(row)) continue;
        for (auto& fc : ds.columns) {
            const auto& v = row[col(fc.name)];
            if (fc.kind == ColumnKind::numeric) {
                const auto x = parse_double(v);
                if (!x)
                    throw IoError(manifest.name + ": non-numeric value '" + v + "' in numeric column " + fc.name);
                fc.numeric.push_back(*x);
            } else {
                fc.categorical.push_back(v);
            }
        }
        const auto& t = row[target_col];
        ds.targets.push_back(std::find(manifest.positive_values.begin(), manifest.positive_values.end(), t) !=
                                     manifest.positive_values.end()
                                 ? 1.0
                                 : 0.0);
        GroupMask mask = 0;
        for (std::size_t g = 0; g < manifest.groups.size(); ++g) {
            bool match = true;
            for (const auto& p : manifest.groups[g].conjunction)
                match = match && ((row[col(p.column)] == p.value) == p.equal);
            if (match) mask |= GroupMask{1} << g;
        }
        ds.membership.push_back(mask);
    }

    if (manifest.expect_rows && *manifest.expect_rows != ds.size())
        ds.warnings.push_back(manifest.name + ": expected " + std::to_string(*manifest.expect_rows) +
                              " rows, loaded " + std::to_string(ds.size()) + " (data source drift?)");
    if (manifest.expect_positive_percent && ds.size() > 0) {
        const double pct =
            100.0 * std::accumulate(ds.targets.begin(), ds.targets.end(), 0.0) / static_cast<double>(ds.size());
        if (std::abs(pct - *manifest.expect_positive_percent) > 0.05) {
            std::ostringstream os;
            os << manifest.name << ": expected " << *manifest.expect_positive_percent << "% positives, observed "
               << pct << "%";
            ds.warnings.push_back(os.str());
        }
    }
    return ds;
}

double imbalance_ratio(std::span<const double> targets) {
    std::size_t pos = 0;
    for (double t : targets) pos += t > 0.5 ? 1 : 0;
    if (pos == 0) throw DegenerateStratum("imbalance ratio undefined: no positive samples");
    if (pos == targets.size()) throw DegenerateStratum("imbalance ratio undefined: no negative samples");
    return static_cast<double>(targets.size() - pos) / static_cast<double>(pos);
}

std::vector<GroupStatistics> group_statistics(const Dataset& dataset, std::span<const std::size_t> rows) {
    std::vector<GroupStatistics> out;
    auto stats = [&](std::string name, const std::vector<std::size_t>& members) {
        GroupStatistics s;
        s.group = std::move(name);
        s.size = members.size();
        for (auto r : members) s.positives += dataset.targets[r] > 0.5 ? 1 : 0;
        s.positive_percent = s.size ? 100.0 * static_cast<double>(s.positives) / static_cast<double>(s.size) : 0.0;
        s.imbalance_ratio = s.positives && s.positives < s.size
                                ? static_cast<double>(s.size - s.positives) / static_cast<double>(s.positives)
                                : std::numeric_limits<double>::quiet_NaN();
        out.push_back(std::move(s));
    };
    stats(std::string(kAllGroup), {rows.begin(), rows.end()});
    for (const auto& g : dataset.group_names) stats(g, dataset.members(g, rows));
    return out;
}

std::vector<std::string> home_groups(const Dataset& dataset, std::span<const std::size_t> rows) {
    std::vector<std::size_t> size(dataset.group_names.size(), 0);
    for (auto mask : dataset.membership)
        for (std::size_t g = 0; g < size.size(); ++g) size[g] += (mask >> g) & 1u;
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (auto r : rows) {
        std::optional<std::size_t> best;
        for (std::size_t g = 0; g < size.size(); ++g)
            if (dataset.in_group(r, g) && (!best || size[g] < size[*best])) best = g;
        if (!best) throw InvalidArgument("sample " + std::to_string(r) + " belongs to no group");
        out.push_back(dataset.group_names[*best]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// preprocessing

Encoder Encoder::fit(const Dataset& dataset, std::span<const std::size_t> train_rows) {
    if (train_rows.empty()) throw InvalidArgument("cannot fit preprocessing on zero rows");
    Encoder enc;
    for (const auto& c : dataset.columns) {
        Column out{c.name, c.kind, 0.0, 0.0, {}};
        if (c.kind == ColumnKind::numeric) {
            double sum = 0.0;
            for (auto r : train_rows) sum += c.numeric.at(r);
            out.mean = sum / static_cast<double>(train_rows.size());
            double ss = 0.0;
            for (auto r : train_rows) ss += (c.numeric[r] - out.mean) * (c.numeric[r] - out.mean);
            const double sd = std::sqrt(ss / static_cast<double>(train_rows.size()));
            out.scale = sd > 1e-12 * std::max(1.0, std::abs(out.mean)) ? 1.0 / sd : 0.0;
        } else {
            std::set<std::string> cats;
            for (auto r : train_rows) cats.insert(c.categorical.at(r));
            out.categories.assign(cats.begin(), cats.end());
        }
        enc.columns_.push_back(std::move(out));
    }
    return enc;
}

std::size_t Encoder::width() const noexcept {
    std::size_t w = 0;
    for (const auto& c : columns_) w += c.kind == ColumnKind::numeric ? 1 : c.categories.size();
    return w;
}

std::vector<std::string> Encoder::feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) {
        if (c.kind == ColumnKind::numeric)
            out.push_back(c.name);
        else
            for (const auto& v : c.categories) out.push_back(c.name + "=" + v);
    }
    return out;
}

ad::Matrix Encoder::transform(const Dataset& dataset, std::span<const std::size_t> rows,
                              std::vector<std::string>* warnings) const {
    if (dataset.columns.size() != columns_.size()) throw InvalidArgument("dataset columns do not match the encoder");
    ad::Matrix out = ad::Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width()));
    Eigen::Index offset = 0;
    for (std::size_t c = 0; c < columns_.size(); ++c) {
        const auto& enc = columns_[c];
        const auto& src = dataset.columns[c];
        if (src.name != enc.name || src.kind != enc.kind) throw InvalidArgument("column mismatch at " + src.name);
        if (enc.kind == ColumnKind::numeric) {
            for (std::size_t i = 0; i < rows.size(); ++i)
                out(static_cast<Eigen::Index>(i), offset) = (src.numeric.at(rows[i]) - enc.mean) * enc.scale;
            ++offset;
            continue;
        }
        std::size_t unseen = 0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& v = src.categorical.at(rows[i]);
            const auto it = std::lower_bound(enc.categories.begin(), enc.categories.end(), v);
            if (it == enc.categories.end() || *it != v) {
                ++unseen;
                continue;
            }
            out(static_cast<Eigen::Index>(i), offset + (it - enc.categories.begin())) = 1.0;
        }
        if (unseen && warnings)
            warnings->push_back("column " + enc.name + ": " + std::to_string(unseen) +
                                " rows with categories unseen in training encoded as all zeros");
        offset += static_cast<Eigen::Index>(enc.categories.size());
    }
    return out;
}

// ---------------------------------------------------------------------------
// splitting

SplitSpec stratified_split(const Dataset& dataset, double test_fraction, double val_fraction, std::uint64_t seed,
                           std::optional<std::size_t> test_count) {
    const std::size_t n = dataset.size();
    if (n == 0) throw InvalidArgument("cannot split an empty dataset");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("test fraction must lie in (0, 1)");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw InvalidArgument("validation fraction must lie in [0, 1)");

    // cells keyed by (membership pattern, class), in key order
    std::map<std::pair<GroupMask, int>, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < n; ++i)
        cells[{dataset.membership[i], dataset.targets[i] > 0.5 ? 1 : 0}].push_back(i);

    auto describe = [&](const std::pair<GroupMask, int>& key) {
        std::string s = "{";
        bool first = true;
        for (std::size_t g = 0; g < dataset.group_names.size(); ++g)
            if ((key.first >> g) & 1u) {
                s += (first ? "" : ",") + dataset.group_names[g];
                first = false;
            }
        return s + "} x class " + std::to_string(key.second);
    };
    std::vector<std::size_t> sizes;
    for (const auto& [key, members] : cells) {
        if (members.size() < 3)
            throw DegenerateStratum("split cell " + describe(key) + " has only " + std::to_string(members.size()) +
                                    " samples (need at least 3)");
        sizes.push_back(members.size());
    }

    const std::size_t total_test =
        test_count ? *test_count : static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    if (total_test == 0 || total_test >= n) throw InvalidArgument("test size must be between 1 and N-1");
    const auto test_alloc = apportion(sizes, total_test);
    std::vector<std::size_t> remaining(sizes.size());
    for (std::size_t c = 0; c < sizes.size(); ++c) remaining[c] = sizes[c] - test_alloc[c];
    const std::size_t total_val =
        static_cast<std::size_t>(std::llround(static_cast<double>(n - total_test) * val_fraction));
    const auto val_alloc = apportion(remaining, total_val);

    SplitSpec split;
    split.test_fraction = static_cast<double>(total_test) / static_cast<double>(n);
    split.val_fraction = val_fraction;
    split.seed = seed;
    std::size_t c = 0;
    for (const auto& [key, members] : cells) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(c)};
        std::mt19937_64 rng(seq);
        auto order = members;
        shuffle(order, rng);
        std::size_t k = 0;
        for (; k < test_alloc[c]; ++k) split.test.push_back(order[k]);
        for (std::size_t v = 0; v < val_alloc[c]; ++v, ++k) split.validation.push_back(order[k]);
        for (; k < order.size(); ++k) split.train.push_back(order[k]);
        ++c;
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

namespace {

void write_indices(const std::filesystem::path& path, const std::vector<std::size_t>& idx) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (auto i : idx) out << i << '\n';
}

std::vector<std::size_t> read_indices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::size_t> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto t = trim(line);
        if (t.empty()) continue;
        char* end = nullptr;
        const auto v = std::strtoull(t.c_str(), &end, 10);
        if (*end != '\0') throw IoError(path.string() + ": bad index '" + t + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

}  // namespace

void write_split(const std::filesystem::path& dir, const SplitSpec& split) {
    std::filesystem::create_directories(dir);
    write_indices(dir / "train.idx", split.train);
    write_indices(dir / "validation.idx", split.validation);
    write_indices(dir / "test.idx", split.test);
}

SplitSpec read_split(const std::filesystem::path& dir) {
    SplitSpec s;
    s.train = read_indices(dir / "train.idx");
    s.validation = read_indices(dir / "validation.idx");
    s.test = read_indices(dir / "test.idx");
    const double n = static_cast<double>(s.train.size() + s.validation.size() + s.test.size());
    if (n > 0) {
        s.test_fraction = static_cast<double>(s.test.size()) / n;
        const double rest = static_cast<double>(s.train.size() + s.validation.size());
        s.val_fraction = rest > 0 ? static_cast<double>(s.validation.size()) / rest : 0.0;
    }
    return s;
}

// ---------------------------------------------------------------------------
// synthetic

Dataset make_synthetic(const SyntheticSpec& spec) {
    const auto k = spec.group_fractions.size();
    if (k == 0 || k > kMaxGroups) throw InvalidArgument("synthetic data needs between 1 and 32 groups");
    if (spec.per_group_ir.size() != k) throw InvalidArgument("one imbalance ratio per group is required");
    if (spec.d == 0) throw InvalidArgument("synthetic data needs at least one feature");
    double total = 0.0;
    for (double f : spec.group_fractions) {
        if (!(f > 0.0)) throw InvalidArgument("group fractions must be positive");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("group fractions must sum to 1");

    // Largest remainder on n * fraction.
    std::vector<std::size_t> sizes(k);
    {
        std::vector<std::pair<double, std::size_t>> rem;
        std::size_t assigned = 0;
        for (std::size_t g = 0; g < k; ++g) {
            const double q = static_cast<double>(spec.n) * spec.group_fractions[g];
            sizes[g] = static_cast<std::size_t>(std::floor(q + 1e-9));
            rem.emplace_back(q - static_cast<double>(sizes[g]), g);
            assigned += sizes[g];
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < spec.n; ++i, ++assigned) ++sizes[rem[i % k].second];
    }

    Dataset ds;
    ds.name = "synthetic";
    for (std::size_t j = 0; j < spec.d; ++j) ds.columns.push_back({"x" + std::to_string(j), ColumnKind::numeric, {}, {}});
    ds.columns.push_back({"group", ColumnKind::categorical, {}, {}});

    std::mt19937_64 rng(spec.seed);
    auto normal = [&] {
        const double u1 = 1.0 - uniform01(rng);  // (0, 1]
        const double u2 = uniform01(rng);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    };
    const double shift = spec.separation / std::sqrt(static_cast<double>(spec.d));

    for (std::size_t g = 0; g < k; ++g) {
        const auto name = "g" + std::to_string(g);
        ds.group_names.push_back(name);
        if (sizes[g] < 10) throw InvalidArgument("group " + name + " would have fewer than 10 samples");
        if (!(spec.per_group_ir[g] > 0.0)) throw InvalidArgument("imbalance ratios must be positive");
        const auto pos = static_cast<std::size_t>(std::llround(static_cast<double>(sizes[g]) / (1.0 + spec.per_group_ir[g])));
        if (pos == 0 || pos == sizes[g])
            throw InvalidArgument("group " + name + " cannot realise imbalance ratio " +
                                  std::to_string(spec.per_group_ir[g]) + " with " + std::to_string(sizes[g]) +
                                  " samples");
        for (std::size_t i = 0; i < sizes[g]; ++i) {
            const double t = i < pos ? 1.0 : 0.0;
            for (std::size_t j = 0; j < spec.d; ++j) ds.columns[j].numeric.push_back(normal() + shift * (t - 0.5));
            ds.columns[spec.d].categorical.push_back(name);
            ds.targets.push_back(t);
            ds.membership.push_back(GroupMask{1} << g);
        }
    }
    return ds;
}

}  // namespace fairnet
