#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval::csv {

using Row = std::vector<std::string>;

/// RFC 4180 parsing: quoted fields, doubled quotes, embedded newlines.
std::vector<Row> parse(std::string_view text);
std::vector<Row> read_file(const std::filesystem::path &path);

std::string escape(std::string_view field);
std::string format_row(const Row &row);

/// Index of `name` in header, or throws FormatError.
std::size_t column(const Row &header, std::string_view name);

} // namespace dialeval::csv
