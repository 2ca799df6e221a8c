#include "ifl/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "ifl/errors.hpp"

namespace ifl {

std::string build_identifier() {
#ifdef IFL_VERSION
    const char* version = IFL_VERSION;
#else
    const char* version = "0.0.0";
#endif
    return std::string("ifl ") + version + " (" +
#if defined(__clang__)
           "clang " __clang_version__
#elif defined(__GNUC__)
           "gcc " __VERSION__
#else
           "unknown compiler"
#endif
           + std::string(")");
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string serialize_manifest(const RunManifest& manifest) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = manifest.schema_version;
    doc["subcommand"] = manifest.subcommand;
    doc["build_id"] = manifest.build_id;
    doc["started_utc"] = manifest.started_utc;
    doc["wall_seconds"] = manifest.wall_seconds;
    doc["master_seed"] = manifest.master_seed;
    doc["outputs"] = manifest.outputs;
    doc["clip_events"] = manifest.clip_events;
    doc["flags"] = manifest.flags;
    nlohmann::ordered_json echo;
    try {
        echo = nlohmann::ordered_json::parse(manifest.config_echo);
    } catch (...) {
        echo = manifest.config_echo; // keep raw text if not valid JSON
    }
    doc["config"] = std::move(echo);
    return doc.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out) throw Error("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    write_file_atomic(path, serialize_manifest(manifest));
}

} // namespace ifl
