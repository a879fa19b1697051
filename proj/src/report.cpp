#include "bsdelay/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "bsdelay/errors.hpp"

namespace bsdelay {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DomainError("cannot open " + tmp + " for writing");
        out << content;
        if (!out) throw DomainError("write to " + tmp + " failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw DomainError("rename " + tmp + " -> " + path + " failed");
    }
}

void write_json_report(const nlohmann::json& report, const std::string& path) {
    write_text_atomic(path, report.dump(2) + "\n");
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out << (j ? "," : "") << columns[j];
    }
    out << "\n";
    for (const auto& row : rows) {
        if (row.size() != columns.size()) throw DomainError("csv row width != header width");
        for (std::size_t j = 0; j < row.size(); ++j) {
            out << (j ? "," : "") << g17(row[j]);
        }
        out << "\n";
    }
    write_text_atomic(path, out.str());
}

}  // namespace bsdelay
