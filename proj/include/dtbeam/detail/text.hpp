// Copyright (C) 2026 The dtbeam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "dtbeam/error.hpp"

#include <array>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dtbeam::detail
{

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v)
{
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc())
        throw Error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

inline std::string_view trim(std::string_view s) noexcept
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(std::string_view s) noexcept
{
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos)
        {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string join(const std::vector<double>& values, char sep = ',')
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out.push_back(sep);
        out += format_double(values[i]);
    }
    return out;
}

struct CsvLine
{
    std::size_t line_no; // 1-based
    std::string text;
};

// Reads data lines of a CSV file, skipping blank lines and '#' comments.
inline std::vector<CsvLine> read_data_lines(std::istream& in)
{
    std::vector<CsvLine> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line))
    {
        ++n;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        out.push_back({n, std::string(t)});
    }
    return out;
}

inline std::ifstream open_input(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw NotFoundError("cannot open '" + path.string() + "'");
    return in;
}

inline std::string read_text(const std::filesystem::path& path)
{
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const std::filesystem::path& path, std::string_view content)
{
    namespace fs = std::filesystem;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

} // namespace dtbeam::detail
