#include "causalsynth/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace causal {

void DatasetTable::add_column(const std::string& name, std::vector<double> values) {
    if (index_.count(name)) throw InputError("duplicate column: " + name);
    if (!columns_.empty() && values.size() != rows())
        throw InputError("column " + name + " has " + std::to_string(values.size()) +
                         " rows, table has " + std::to_string(rows()));
    for (double v : values)
        if (!std::isfinite(v)) throw InputError("non-finite value in column " + name);
    index_[name] = columns_.size();
    names_.push_back(name);
    columns_.push_back(std::move(values));
}

const std::vector<double>& DatasetTable::column(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("unknown column: " + name);
    return columns_[it->second];
}

DatasetTable DatasetTable::select(const std::vector<std::string>& names) const {
    DatasetTable out;
    for (const auto& n : names) out.add_column(n, column(n));
    return out;
}

DatasetTable DatasetTable::standardized() const {
    DatasetTable out;
    for (std::size_t i = 0; i < cols(); ++i) {
        const auto& col = columns_[i];
        const double m = stats::mean(col);
        double s = col.size() > 1 ? stats::sd(col) : 0.0;
        if (s <= 0.0) s = 1.0;
        std::vector<double> z(col.size());
        for (std::size_t r = 0; r < col.size(); ++r) z[r] = (col[r] - m) / s;
        out.add_column(names_[i], std::move(z));
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

DatasetTable DatasetTable::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(IoError::Kind::open, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(IoError::Kind::parse, path + ": empty file");
    const auto header = split_csv_line(line);
    if (header.empty() || header.front().empty())
        throw IoError(IoError::Kind::parse, path + ": bad header");
    std::vector<std::vector<double>> cols(header.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw IoError(IoError::Kind::parse, path + ":" + std::to_string(lineno) +
                                                    ": expected " + std::to_string(header.size()) +
                                                    " fields, got " + std::to_string(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(fields[i].c_str(), &end);
            if (end == fields[i].c_str() || *end != '\0' || !std::isfinite(v))
                throw IoError(IoError::Kind::parse,
                              path + ":" + std::to_string(lineno) + ": bad value '" + fields[i] + "'");
            cols[i].push_back(v);
        }
    }
    DatasetTable table;
    for (std::size_t i = 0; i < header.size(); ++i) table.add_column(header[i], std::move(cols[i]));
    return table;
}

void DatasetTable::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(IoError::Kind::open, "cannot write " + path);
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (i) out << ',';
        out << names_[i];
    }
    out << '\n';
    char buf[64];
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            if (i) out << ',';
            std::snprintf(buf, sizeof buf, "%.17g", columns_[i][r]);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw IoError(IoError::Kind::open, "write failed: " + path);
}

}  // namespace causal
