#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dialeval/error.hpp"

namespace dialeval::detail {

/// Calls fn(object, line_no) for every non-blank line. Malformed JSON reports its line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path &path, Fn &&fn) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t no = 0;
    while (std::getline(is, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error &e) {
            throw FormatError(std::string("malformed JSON: ") + e.what(), no);
        }
        if (!j.is_object()) throw FormatError("expected a JSON object", no);
        fn(j, no);
    }
    if (is.bad()) throw IoError("read failed: " + path.string());
}

} // namespace dialeval::detail
