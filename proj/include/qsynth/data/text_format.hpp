#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qsynth/epoch.hpp"
#include "qsynth/errors.hpp"

namespace qsynth::data {

// Delimiter-separated text: one row per epoch holding C*T values in
// [channel][time] order followed by the integer label. Blank lines and lines
// starting with '#' are skipped. Whitespace around fields is ignored; with
// delimiter ' ' any run of blanks or tabs separates fields.

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    auto trim = [](std::string_view s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string_view::npos) return std::string_view{};
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    if (delim == ' ') {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
            const std::size_t j = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
            if (i > j) out.push_back(line.substr(j, i - j));
        }
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_field(std::string_view field, std::size_t line_no) {
    T value{};
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw InvalidArgument("text epochs: line " + std::to_string(line_no) + ": cannot parse '" +
                              std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

inline LabeledSet read_delimited(std::istream& in, Shape shape, char delim = ',') {
    if (shape.size() == 0) throw InvalidArgument("text epochs: empty epoch shape");
    LabeledSet out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto fields = detail::split_fields(line, delim);
        if (fields.size() != shape.size() + 1) {
            throw InvalidArgument("text epochs: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(shape.size() + 1));
        }
        std::vector<double> values(shape.size());
        for (std::size_t i = 0; i < shape.size(); ++i) values[i] = detail::parse_field<double>(fields[i], line_no);
        out.add(Epoch(shape, std::move(values)), detail::parse_field<Label>(fields.back(), line_no));
    }
    return out;
}

inline void write_delimited(std::ostream& out, const LabeledSet& set, char delim = ',') {
    const auto old = out.precision(9);
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (double v : set.epoch(i).values()) out << v << delim;
        out << set.label(i) << '\n';
    }
    out.precision(old);
}

}  // namespace qsynth::data
