#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <string>
#include <vector>

namespace tailica {

/// Dense return panel: m time samples (rows) by n assets (columns).
///
/// Invariants checked at construction: m >= 2, n >= 1, all entries finite,
/// row ids strictly increasing, column ids unique. Panels are immutable once
/// built and may be shared read-only across threads.
class SamplePanel {
public:
    SamplePanel(Eigen::MatrixXd data, std::vector<std::string> column_ids,
                std::vector<std::string> row_ids);

    const Eigen::MatrixXd& data() const noexcept { return data_; }
    const std::vector<std::string>& column_ids() const noexcept { return column_ids_; }
    const std::vector<std::string>& row_ids() const noexcept { return row_ids_; }

    Eigen::Index rows() const noexcept { return data_.rows(); }
    Eigen::Index cols() const noexcept { return data_.cols(); }

    /// Contiguous view of one column (Eigen storage is column-major).
    std::span<const double> column(Eigen::Index j) const {
        return {data_.col(j).data(), static_cast<std::size_t>(data_.rows())};
    }

    /// Same rows, new values and column ids.
    SamplePanel with_data(Eigen::MatrixXd data, std::vector<std::string> column_ids) const;

    friend bool operator==(const SamplePanel&, const SamplePanel&) = default;

private:
    Eigen::MatrixXd data_;
    std::vector<std::string> column_ids_;
    std::vector<std::string> row_ids_;
};

struct BucketSplit {
    SamplePanel in_sample;
    SamplePanel out_sample;
};

struct IngestResult {
    SamplePanel panel;
    /// Symbols removed because they lacked at least one date (fill_missing = false).
    std::vector<std::string> dropped_symbols;
    /// Cells set to 0.0 because the (date, symbol) pair was absent (fill_missing = true).
    std::size_t filled_cells = 0;
};

/// Reads long-format `date,symbol,return` CSV into a dense panel over the union
/// of dates and symbols. Missing cells are zero-filled, or the affected symbols
/// dropped when `fill_missing` is false. Values are stored as read.
IngestResult ingest_csv(const std::filesystem::path& path, bool fill_missing);

/// Reads wide-format CSV: header `date,<sym1>,<sym2>,...`, one row per date.
SamplePanel ingest_wide_csv(const std::filesystem::path& path);

/// Dispatches on the header: `date,symbol,return` is long format, anything
/// else starting with `date` is wide format.
IngestResult ingest_any_csv(const std::filesystem::path& path, bool fill_missing);

/// Rows dated before `boundary_date` form the in-sample bucket.
BucketSplit split_buckets(const SamplePanel& panel, const std::string& boundary_date);

/// Date of the middle row; splitting there gives buckets of equal length
/// (the out-of-sample bucket takes the extra row for odd m).
std::string midpoint_boundary(const SamplePanel& panel);

/// Stacks the rows of two panels with identical columns.
SamplePanel concat_rows(const SamplePanel& first, const SamplePanel& second);

/// Subtracts every column mean.
SamplePanel center(const SamplePanel& panel);

/// Wide CSV, first column `date`, values in shortest round-trip form.
void write_wide_csv(const SamplePanel& panel, std::ostream& out);
void write_wide_csv(const SamplePanel& panel, const std::filesystem::path& path);

/// True for a valid calendar date in `YYYY-MM-DD` form.
bool is_iso_date(std::string_view text);

/// `count` consecutive weekdays starting at (or after) `first_date`.
std::vector<std::string> weekday_dates(const std::string& first_date, std::size_t count);

}  // namespace tailica
