#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "cpgrl/common.hpp"

namespace cpgrl {

// Shortest round-trip decimal form of a double.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Header-first CSV emitter. All numeric cells use the round-trip form so logs
// from identical runs compare byte-for-byte.
class CsvWriter {
  public:
    // With append=true an existing nonempty file is continued without
    // re-emitting the header (checkpoint resume).
    CsvWriter(const std::string& path, const std::vector<std::string>& header, bool append = false)
        : cols_(header.size()) {
        bool fresh = true;
        if (append) {
            std::ifstream probe(path);
            fresh = !probe || probe.peek() == std::ifstream::traits_type::eof();
        }
        out_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!out_) throw io_error("cannot open CSV for writing: " + path);
        if (fresh) write_cells(header);
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(csv_num(v));
        write_cells(cells);
    }

    void row(const std::vector<std::string>& cells) { write_cells(cells); }

    void flush() { out_.flush(); }

  private:
    void write_cells(const std::vector<std::string>& cells) {
        require(cells.size() == cols_, "CsvWriter: column count mismatch");
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw io_error("CSV write failure");
    }

    std::ofstream out_;
    size_t cols_;
};

}  // namespace cpgrl
