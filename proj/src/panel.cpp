#include "tailica/panel.hpp"

#include "tailica/error.hpp"
#include "tailica/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace tailica {

namespace {

void validate(const Eigen::MatrixXd& data, const std::vector<std::string>& column_ids,
              const std::vector<std::string>& row_ids) {
    if (data.rows() < 2) throw DataError("panel needs at least 2 rows, got " + std::to_string(data.rows()));
    if (data.cols() < 1) throw DataError("panel needs at least 1 column");
    if (static_cast<Eigen::Index>(column_ids.size()) != data.cols())
        throw DataError("column id count does not match panel width");
    if (static_cast<Eigen::Index>(row_ids.size()) != data.rows())
        throw DataError("row id count does not match panel height");
    if (!data.allFinite()) throw DataError("panel contains non-finite entries");
    for (std::size_t i = 1; i < row_ids.size(); ++i) {
        if (!(row_ids[i - 1] < row_ids[i]))
            throw DataError("row ids not strictly increasing at '" + row_ids[i] + "'");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : column_ids) {
        if (!seen.insert(id).second) throw DataError("duplicate column id '" + id + "'");
    }
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    return in;
}

// Returns the first non-blank line (header); line_no is updated.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!io::trim(line).empty()) return true;
    }
    return false;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
    return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

SamplePanel::SamplePanel(Eigen::MatrixXd data, std::vector<std::string> column_ids,
                         std::vector<std::string> row_ids)
    : data_(std::move(data)), column_ids_(std::move(column_ids)), row_ids_(std::move(row_ids)) {
    validate(data_, column_ids_, row_ids_);
}

SamplePanel SamplePanel::with_data(Eigen::MatrixXd data, std::vector<std::string> column_ids) const {
    return SamplePanel(std::move(data), std::move(column_ids), row_ids_);
}

bool is_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    int parts[3] = {0, 0, 0};
    const std::pair<std::size_t, std::size_t> spans[3] = {{0, 4}, {5, 2}, {8, 2}};
    for (int p = 0; p < 3; ++p) {
        for (std::size_t i = spans[p].first; i < spans[p].first + spans[p].second; ++i) {
            if (text[i] < '0' || text[i] > '9') return false;
            parts[p] = parts[p] * 10 + (text[i] - '0');
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{parts[0]},
                                          std::chrono::month{static_cast<unsigned>(parts[1])},
                                          std::chrono::day{static_cast<unsigned>(parts[2])}};
    return ymd.ok();
}

std::vector<std::string> weekday_dates(const std::string& first_date, std::size_t count) {
    using namespace std::chrono;
    if (!is_iso_date(first_date)) throw DataError("not an ISO-8601 date: '" + first_date + "'");
    const int y = std::stoi(first_date.substr(0, 4));
    const unsigned mo = static_cast<unsigned>(std::stoi(first_date.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(first_date.substr(8, 2)));
    sys_days day{year_month_day{year{y}, month{mo}, std::chrono::day{d}}};
    std::vector<std::string> out;
    out.reserve(count);
    while (out.size() < count) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day};
            char buf[16];
            std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
            out.emplace_back(buf);
        }
        day += days{1};
    }
    return out;
}

IngestResult ingest_csv(const std::filesystem::path& path, bool fill_missing) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no)) throw DataError("empty file '" + path.string() + "'");
    const auto header = io::split_csv_line(line);
    if (header != std::vector<std::string>{"date", "symbol", "return"})
        throw DataError(where(path, line_no) + ": expected header 'date,symbol,return'");

    std::map<std::pair<std::string, std::string>, double> cells;
    std::set<std::string> dates;
    std::vector<std::string> symbols;
    std::unordered_set<std::string> symbol_set;
    while (next_line(in, line, line_no)) {
        const auto fields = io::split_csv_line(line);
        if (fields.size() != 3) throw DataError(where(path, line_no) + ": expected 3 fields");
        if (!is_iso_date(fields[0]))
            throw DataError(where(path, line_no) + ": bad date '" + fields[0] + "'");
        if (fields[1].empty()) throw DataError(where(path, line_no) + ": empty symbol");
        double value = 0.0;
        if (!io::parse_double(fields[2], value))
            throw DataError(where(path, line_no) + ": bad return '" + fields[2] + "'");
        if (!cells.emplace(std::pair{fields[0], fields[1]}, value).second)
            throw DataError(where(path, line_no) + ": duplicate (date,symbol) pair (" + fields[0] + "," +
                            fields[1] + ")");
        dates.insert(fields[0]);
        if (symbol_set.insert(fields[1]).second) symbols.push_back(fields[1]);
    }
    std::sort(symbols.begin(), symbols.end());

    const std::vector<std::string> row_ids(dates.begin(), dates.end());
    std::vector<std::string> kept;
    std::vector<std::string> dropped;
    std::size_t filled = 0;
    for (const auto& sym : symbols) {
        std::size_t present = 0;
        for (const auto& date : row_ids) present += cells.count({date, sym});
        if (present == row_ids.size() || fill_missing) {
            kept.push_back(sym);
            filled += row_ids.size() - present;
        } else {
            dropped.push_back(sym);
        }
    }
    if (kept.empty() || row_ids.size() < 2)
        throw DataError("empty panel after cleaning '" + path.string() + "'");

    Eigen::MatrixXd data = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(row_ids.size()),
                                                 static_cast<Eigen::Index>(kept.size()));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            const auto it = cells.find({row_ids[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(j)]});
            if (it != cells.end()) data(i, j) = it->second;
        }
    }
    return IngestResult{SamplePanel(std::move(data), std::move(kept), row_ids), std::move(dropped), filled};
}

SamplePanel ingest_wide_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no)) throw DataError("empty file '" + path.string() + "'");
    auto header = io::split_csv_line(line);
    if (header.size() < 2 || header.front() != "date")
        throw DataError(where(path, line_no) + ": expected header 'date,<symbol>,...'");
    std::vector<std::string> columns(header.begin() + 1, header.end());

    std::vector<std::string> rows;
    std::vector<double> values;
    while (next_line(in, line, line_no)) {
        const auto fields = io::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError(where(path, line_no) + ": expected " + std::to_string(header.size()) + " fields");
        if (!is_iso_date(fields[0]))
            throw DataError(where(path, line_no) + ": bad date '" + fields[0] + "'");
        if (!rows.empty() && !(rows.back() < fields[0]))
            throw DataError(where(path, line_no) + ": dates not strictly increasing");
        rows.push_back(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            double value = 0.0;
            if (!io::parse_double(fields[j], value))
                throw DataError(where(path, line_no) + ": bad value '" + fields[j] + "'");
            values.push_back(value);
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    const auto n = static_cast<Eigen::Index>(columns.size());
    if (m < 2) throw DataError("panel in '" + path.string() + "' has fewer than 2 rows");
    Eigen::MatrixXd data(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j) data(i, j) = values[static_cast<std::size_t>(i * n + j)];
    return SamplePanel(std::move(data), std::move(columns), std::move(rows));
}

IngestResult ingest_any_csv(const std::filesystem::path& path, bool fill_missing) {
    auto in = open_input(path);
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no)) throw DataError("empty file '" + path.string() + "'");
    if (io::split_csv_line(line) == std::vector<std::string>{"date", "symbol", "return"})
        return ingest_csv(path, fill_missing);
    return IngestResult{ingest_wide_csv(path), {}, 0};
}

BucketSplit split_buckets(const SamplePanel& panel, const std::string& boundary_date) {
    const auto& rows = panel.row_ids();
    if (!(rows.front() < boundary_date) || boundary_date > rows.back())
        throw DataError("boundary " + boundary_date + " outside panel range [" + rows.front() + ", " +
                        rows.back() + "]");
    const auto cut = static_cast<Eigen::Index>(
        std::lower_bound(rows.begin(), rows.end(), boundary_date) - rows.begin());
    const Eigen::Index m = panel.rows();
    if (cut < 2 || m - cut < 2)
        throw DataError("boundary " + boundary_date + " leaves a bucket with fewer than 2 rows");
    const auto first = static_cast<std::ptrdiff_t>(cut);
    return BucketSplit{
        SamplePanel(panel.data().topRows(cut), panel.column_ids(),
                    std::vector<std::string>(rows.begin(), rows.begin() + first)),
        SamplePanel(panel.data().bottomRows(m - cut), panel.column_ids(),
                    std::vector<std::string>(rows.begin() + first, rows.end())),
    };
}

std::string midpoint_boundary(const SamplePanel& panel) {
    return panel.row_ids()[static_cast<std::size_t>(panel.rows() / 2)];
}

SamplePanel concat_rows(const SamplePanel& first, const SamplePanel& second) {
    if (first.column_ids() != second.column_ids()) throw DataError("cannot stack panels with different columns");
    Eigen::MatrixXd data(first.rows() + second.rows(), first.cols());
    data << first.data(), second.data();
    auto rows = first.row_ids();
    rows.insert(rows.end(), second.row_ids().begin(), second.row_ids().end());
    return SamplePanel(std::move(data), first.column_ids(), std::move(rows));
}

SamplePanel center(const SamplePanel& panel) {
    Eigen::MatrixXd data = panel.data();
    const double m = static_cast<double>(data.rows());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        auto col = data.col(j);
        if (col.minCoeff() == col.maxCoeff()) {
            col.setZero();
            continue;
        }
        // Second pass removes the rounding residue of the first.
        col.array() -= col.sum() / m;
        col.array() -= col.sum() / m;
    }
    return panel.with_data(std::move(data), panel.column_ids());
}

void write_wide_csv(const SamplePanel& panel, std::ostream& out) {
    out << "date";
    for (const auto& id : panel.column_ids()) out << ',' << id;
    out << '\n';
    const auto& data = panel.data();
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        out << panel.row_ids()[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < data.cols(); ++j) out << ',' << io::format_double(data(i, j));
        out << '\n';
    }
}

void write_wide_csv(const SamplePanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    write_wide_csv(panel, out);
}

}  // namespace tailica
