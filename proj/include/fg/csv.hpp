#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fg/common.hpp"

namespace fg {

// Minimal CSV emitter with stable %.17g formatting (bit-identical reruns).
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw Error("cannot open " + path.string());
        for (size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& vals) {
        char buf[32];
        for (size_t i = 0; i < vals.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", vals[i]);
            out_ << (i ? "," : "") << buf;
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

}  // namespace fg
