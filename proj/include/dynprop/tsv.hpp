#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace dynprop::tsv {

// Line-oriented tab-separated reader. Blank lines and lines starting with '#'
// are skipped; a trailing '\r' is dropped.
class Reader {
public:
    // Throws DataError if the file cannot be opened.
    explicit Reader(const std::filesystem::path& path);

    // Advances to the next record. Returns false at end of file.
    bool next();

    const std::vector<std::string_view>& fields() const { return fields_; }
    std::size_t line_number() const { return line_no_; }
    const std::filesystem::path& path() const { return path_; }

    // Throws DataError "<path>:<line>: <what>".
    [[noreturn]] void fail(std::string_view what) const;

    // Throws unless the record has exactly `n` fields.
    void expect_fields(std::size_t n) const;

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::string line_;
    std::vector<std::string_view> fields_;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split(std::string_view s, char sep);

// Parses a comma-separated list of decimal floats. Throws std::invalid_argument.
std::vector<double> parse_floats(std::string_view s);

// Shortest round-trip decimal form of `v`.
std::string format_double(double v);

}  // namespace dynprop::tsv
