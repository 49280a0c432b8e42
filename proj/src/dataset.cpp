#include "crcop/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crcop {

void Dataset::append(double t, int delta, std::span<const double> zrow) {
    if (zrow.size() != n_covariates)
        throw std::invalid_argument("Dataset::append: covariate dimension mismatch");
    time.push_back(t);
    status.push_back(delta);
    covariates.insert(covariates.end(), zrow.begin(), zrow.end());
}

void Dataset::validate() const {
    if (status.size() != size() || covariates.size() != size() * n_covariates)
        throw std::invalid_argument("Dataset: inconsistent column lengths");
    for (std::size_t i = 0; i < size(); ++i) {
        if (!(time[i] > 0.0) || !std::isfinite(time[i]))
            throw std::invalid_argument("Dataset: durations must be positive and finite");
        if (status[i] < 0 || status[i] > 2)
            throw std::invalid_argument("Dataset: status must be 0, 1 or 2");
    }
    for (double v : covariates)
        if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite covariate");
}

namespace {

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << "CSV parse error at line " << line << ": " << what;
    throw std::runtime_error(msg.str());
}

} // namespace

void write_csv(const Dataset& data, std::ostream& out) {
    out << "t,delta";
    for (std::size_t k = 0; k < data.n_covariates; ++k) out << ",z" << (k + 1);
    out << "\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_double(data.time[i]) << ',' << data.status[i];
        for (double v : data.z(i)) out << ',' << format_double(v);
        out << "\n";
    }
}

void write_csv_file(const Dataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_csv(data, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) parse_fail(1, "empty input, expected header t,delta,z1[,...]");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.size() < 3 || header[0] != "t" || header[1] != "delta")
        parse_fail(1, "header must be t,delta,z1[,z2,...], got '" + line + "'");
    for (std::size_t k = 2; k < header.size(); ++k) {
        const std::string expected = "z" + std::to_string(k - 1);
        if (header[k] != expected)
            parse_fail(1, "expected column '" + expected + "', got '" + header[k] + "'");
    }

    Dataset data;
    data.n_covariates = header.size() - 2;
    std::vector<double> zrow(data.n_covariates);
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            parse_fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(cells.size()));
        const auto to_double = [&](const std::string& s) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s, &used);
            } catch (const std::exception&) {
                parse_fail(line_no, "not a number: '" + s + "'");
            }
            if (used != s.size()) parse_fail(line_no, "trailing characters in '" + s + "'");
            return v;
        };
        const double t = to_double(cells[0]);
        const double delta_raw = to_double(cells[1]);
        const int delta = static_cast<int>(delta_raw);
        if (delta != delta_raw || delta < 0 || delta > 2)
            parse_fail(line_no, "delta must be 0, 1 or 2, got '" + cells[1] + "'");
        if (!(t > 0.0)) parse_fail(line_no, "duration must be positive, got '" + cells[0] + "'");
        for (std::size_t k = 0; k < data.n_covariates; ++k) zrow[k] = to_double(cells[k + 2]);
        data.append(t, delta, zrow);
    }
    return data;
}

Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return read_csv(in);
}

} // namespace crcop
