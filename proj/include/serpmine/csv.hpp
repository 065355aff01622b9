#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace serpmine::csv {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Row = std::vector<std::string>;

// RFC 4180 field quoting: fields holding a comma, quote, CR or LF are quoted.
std::string format_row(const Row& row);

// Parses a whole document; rows end with LF or CRLF. A trailing newline does
// not produce an empty row.
std::vector<Row> parse(std::string_view text);

} // namespace serpmine::csv
