#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "roballoc/errors.hpp"
#include "roballoc/influence.hpp"

// Instance files and CSV emission. Instances are edge lists with one of two
// headers:
//
//   s,t,alpha,beta   Beta posterior counts, prior included (alpha,beta >= 1)
//   s,t,x_hat,n      failure-probability estimate plus observation count;
//                    counts are reconstructed as alpha = 1 + round(x_hat n),
//                    beta = 1 + n - round(x_hat n)
//
// Duplicate (s,t) rows are a validation error, not merged.

namespace roballoc {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_number(const std::string& s, const std::string& path, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("not finite");
        return v;
    } catch (const std::exception&) {
        throw parse_error(path, line_no, "expected a number, got '" + s + "'");
    }
}

/// Shortest round-trippable decimal representation.
inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    for (int prec = 1; prec < 17; ++prec) {
        char probe[32];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        std::sscanf(probe, "%lf", &back);
        if (back == v) return probe;
    }
    return buf;
}

} // namespace detail

inline InfluenceInstance parse_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw parse_error(path, 1, "empty file");
    ++line_no;
    const std::vector<std::string> header = detail::split_csv_line(line);
    bool counts_format;
    if (header == std::vector<std::string>{"s", "t", "alpha", "beta"})
        counts_format = true;
    else if (header == std::vector<std::string>{"s", "t", "x_hat", "n"})
        counts_format = false;
    else
        throw parse_error(path, 1, "header must be s,t,alpha,beta or s,t,x_hat,n");

    std::vector<std::string> channels, customers;
    std::unordered_map<std::string, std::uint32_t> channel_ix, customer_ix;
    std::vector<EdgeData> edges;
    auto intern = [](const std::string& id, std::vector<std::string>& names,
                     std::unordered_map<std::string, std::uint32_t>& ix) {
        auto [it, inserted] = ix.try_emplace(id, std::uint32_t(names.size()));
        if (inserted) names.push_back(id);
        return it->second;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        if (f.size() != 4) throw parse_error(path, line_no, "expected 4 fields");
        if (f[0].empty() || f[1].empty()) throw parse_error(path, line_no, "empty id");
        EdgeData e;
        e.channel = intern(f[0], channels, channel_ix);
        e.customer = intern(f[1], customers, customer_ix);
        if (counts_format) {
            e.alpha = detail::parse_number(f[2], path, line_no);
            e.beta = detail::parse_number(f[3], path, line_no);
            if (e.alpha < 1.0 || e.beta < 1.0) throw parse_error(path, line_no, "alpha and beta must be >= 1");
            e.n_obs = e.alpha + e.beta - 2.0;
        } else {
            const double x_hat = detail::parse_number(f[2], path, line_no);
            const double n = detail::parse_number(f[3], path, line_no);
            if (x_hat < 0.0 || x_hat > 1.0) throw parse_error(path, line_no, "x_hat must be in [0,1]");
            if (n < 0.0) throw parse_error(path, line_no, "n must be nonnegative");
            const double failures = std::round(x_hat * n);
            e.alpha = 1.0 + failures;
            e.beta = 1.0 + n - failures;
            e.n_obs = n;
        }
        e.x_hat = e.alpha / (e.alpha + e.beta);
        edges.push_back(e);
    }
    if (edges.empty()) throw validation_error("instance file has no edges: " + path);
    return InfluenceInstance(std::move(channels), std::move(customers), std::move(edges));
}

inline void write_instance(const InfluenceInstance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write instance file: " + path);
    out << "s,t,alpha,beta\n";
    for (const EdgeData& e : inst.edges()) {
        out << inst.channels()[e.channel] << ',' << inst.customers()[e.customer] << ','
            << detail::format_number(e.alpha) << ',' << detail::format_number(e.beta) << '\n';
    }
}

/// Minimal CSV table: fixed header, rows of preformatted cells.
class CsvWriter {
public:
    CsvWriter(std::string path, std::vector<std::string> columns) : path_(std::move(path)), columns_(std::move(columns)) {}

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size()) throw std::logic_error("csv row width mismatch");
        rows_.push_back(cells);
    }

    void flush() const {
        std::ofstream out(path_);
        if (!out) throw std::runtime_error("cannot write " + path_);
        for (std::size_t c = 0; c < columns_.size(); ++c) out << (c ? "," : "") << columns_[c];
        out << '\n';
        for (const auto& r : rows_) {
            for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << r[c];
            out << '\n';
        }
    }

private:
    std::string path_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == name) return c;
        throw std::runtime_error("no such column: " + name);
    }
};

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable t;
    std::string line;
    if (std::getline(in, line)) t.columns = detail::split_csv_line(line);
    while (std::getline(in, line)) {
        if (!line.empty()) t.rows.push_back(detail::split_csv_line(line));
    }
    return t;
}

} // namespace roballoc
