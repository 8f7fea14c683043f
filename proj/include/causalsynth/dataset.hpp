#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "causalsynth/common.hpp"

namespace causal {

// Named-column table of real-valued samples. Rows are units (parts), columns
// are variables; column order is preserved from construction / file order.
class DatasetTable {
public:
    DatasetTable() = default;

    void add_column(const std::string& name, std::vector<double> values);

    std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().size(); }
    std::size_t cols() const { return columns_.size(); }

    bool has_column(const std::string& name) const { return index_.count(name) > 0; }
    const std::vector<double>& column(const std::string& name) const;
    const std::vector<double>& column(std::size_t i) const { return columns_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t i) const { return names_.at(i); }

    // Subset of columns, in the order given.
    DatasetTable select(const std::vector<std::string>& names) const;

    // Z-scores every column with its own sample mean/sd. Constant columns are
    // left centered but unscaled.
    DatasetTable standardized() const;

    // CSV with header row, dot-decimal floats, no missing values. Doubles are
    // written with round-trip precision so save/load is value-exact.
    static DatasetTable read_csv(const std::string& path);
    void write_csv(const std::string& path) const;

private:
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace causal
