#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mhpp::csv {

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0;  // 1-based line where the record starts
};

/// RFC 4180 reader: quoted fields may contain commas, doubled quotes and
/// newlines. Lines starting with '#' outside a record are skipped.
class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    std::optional<Record> next();

private:
    std::istream& in_;
    std::size_t line_ = 0;
};

/// Quotes a field only when it needs quoting.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
/// Strict parse of a whole field; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace mhpp::csv
