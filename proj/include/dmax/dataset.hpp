#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmax/linalg.hpp"

namespace dmax {

// N feature/response samples.  Immutable by convention after construction.
struct Dataset {
    int d = 0;
    std::vector<Vec> features;  // each of length d
    Vec responses;

    struct Provenance {
        std::uint64_t seed = 0;
        std::string generator = "unspecified";
    } provenance;

    int size() const { return static_cast<int>(responses.size()); }

    void validate() const {
        if (size() < 1) throw std::invalid_argument("dataset: needs at least one sample");
        if (features.size() != responses.size())
            throw std::invalid_argument("dataset: feature/response count mismatch");
        for (const auto& xi : features)
            if (static_cast<int>(xi.size()) != d)
                throw std::invalid_argument("dataset: inconsistent feature dimension");
    }
};

// CSV with header xi_1,...,xi_d,z.  Lines starting with '#' are ignored; the
// writer emits one such line carrying the provenance.
inline void write_csv(const Dataset& data, std::ostream& out) {
    out << "# seed=" << data.provenance.seed << " generator=" << data.provenance.generator << "\n";
    for (int j = 1; j <= data.d; ++j) out << "xi_" << j << ",";
    out << "z\n";
    out.precision(17);
    for (int n = 0; n < data.size(); ++n) {
        for (double v : data.features[n]) out << v << ",";
        out << data.responses[n] << "\n";
    }
}

inline void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    write_csv(data, out);
}

inline Dataset read_csv(std::istream& in) {
    Dataset data;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column names; dimension comes from the rows
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        Vec values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() < 2) throw std::runtime_error("read_csv: row with fewer than two columns");
        data.responses.push_back(values.back());
        values.pop_back();
        data.features.push_back(std::move(values));
    }
    if (data.features.empty()) throw std::runtime_error("read_csv: no samples");
    data.d = static_cast<int>(data.features.front().size());
    data.provenance.generator = "csv";
    data.validate();
    return data;
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    return read_csv(in);
}

}  // namespace dmax
