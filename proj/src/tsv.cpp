#include "dynprop/tsv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#include "dynprop/errors.hpp"

namespace dynprop::tsv {

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open " + path.string());
}

bool Reader::next() {
    while (std::getline(in_, line_)) {
        ++line_no_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty() || line_.front() == '#') continue;
        fields_ = split(line_, '\t');
        return true;
    }
    return false;
}

void Reader::fail(std::string_view what) const {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + std::string(what));
}

void Reader::expect_fields(std::size_t n) const {
    if (fields_.size() != n) {
        fail("expected " + std::to_string(n) + " tab-separated fields, found " +
             std::to_string(fields_.size()));
    }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<double> parse_floats(std::string_view s) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (auto tok : split(s, ',')) {
        while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty() || !std::isfinite(v)) {
            throw std::invalid_argument("not a finite decimal number: '" + std::string(tok) + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace dynprop::tsv
