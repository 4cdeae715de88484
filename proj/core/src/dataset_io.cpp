#include "tpt/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "tpt/error.hpp"

namespace tpt {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump_line(const json& row) {
    return row.dump(-1, ' ', false, json::error_handler_t::replace);
}

// Writes through a sibling temp file and renames over the destination.
// Missing parent directories are created.
void atomic_write(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, "cannot open for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw IoError(path, "write failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError(path, "rename failed");
    }
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(path, lineno, e.what());
        }
        try {
            fn(row, lineno);
        } catch (const json::exception& e) {
            throw ParseError(path, lineno, e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(fmt::format("{}:{}: {}", path.string(), lineno, e.what()));
        }
    }
    if (in.bad()) throw IoError(path, "read failed");
}

}  // namespace

std::vector<ProblemSpec> load_problems(const fs::path& path, TaskKind kind) {
    std::vector<ProblemSpec> problems;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const json& row, std::size_t) {
        auto p = row.get<ProblemSpec>();
        if (p.kind() != kind) {
            throw ValidationError(fmt::format("problem '{}' is a {} problem but a {} set was requested", p.id,
                                              to_string(p.kind()), to_string(kind)));
        }
        if (!seen.insert(p.id).second) throw ValidationError(fmt::format("duplicate problem id '{}'", p.id));
        problems.push_back(std::move(p));
    });
    return problems;
}

void write_problems(const std::vector<ProblemSpec>& problems, const fs::path& path) {
    std::vector<json> rows(problems.begin(), problems.end());
    write_json_lines(rows, path);
}

std::size_t write_records(const std::vector<SolutionRecord>& records, const fs::path& path) {
    std::string out;
    for (const auto& r : records) {
        out += dump_line(json(r));
        out += '\n';
    }
    atomic_write(path, out);
    return records.size();
}

std::vector<SolutionRecord> read_records(const fs::path& path) {
    std::vector<SolutionRecord> records;
    for_each_line(path, [&](const json& row, std::size_t) { records.push_back(row.get<SolutionRecord>()); });
    return records;
}

std::vector<json> read_json_lines(const fs::path& path) {
    std::vector<json> rows;
    for_each_line(path, [&](const json& row, std::size_t) { rows.push_back(row); });
    return rows;
}

void write_json_lines(const std::vector<json>& rows, const fs::path& path) {
    std::string out;
    for (const auto& r : rows) {
        out += dump_line(r);
        out += '\n';
    }
    atomic_write(path, out);
}

json read_json_file(const fs::path& path) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
}

void write_json_file(const json& doc, const fs::path& path) {
    atomic_write(path, doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n");
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return ss.str();
}

void write_text_file(const std::string& contents, const fs::path& path) { atomic_write(path, contents); }

}  // namespace tpt
