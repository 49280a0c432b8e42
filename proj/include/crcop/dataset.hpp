#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace crcop {

/// Observed competing-risks data: duration, risk indicator (1 or 2, with 0
/// for an independently censored spell) and a covariate row per observation.
struct Dataset {
    std::size_t n_covariates = 1;
    std::vector<double> time;
    std::vector<int> status;
    std::vector<double> covariates; // row-major, size() x n_covariates
    std::uint64_t tie_redraws = 0;  // latent-pair ties redrawn by the sampler

    std::size_t size() const { return time.size(); }

    std::span<const double> z(std::size_t i) const {
        return {covariates.data() + i * n_covariates, n_covariates};
    }

    void append(double t, int delta, std::span<const double> z);
    void validate() const;
};

/// CSV with header `t,delta,z1[,z2,...]`, decimal point, LF line endings.
void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

/// Parses the CSV format above; errors carry the 1-based line number.
Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);

} // namespace crcop
