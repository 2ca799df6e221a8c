#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ifl {

// Reproducibility record written next to every data output. Outputs are
// byte-identical across reruns with the same config and seed; the manifest
// itself carries the wall clock and so is not.
struct RunManifest {
    int schema_version = 1;
    std::string subcommand;
    std::string config_echo; // canonical serialized config
    std::uint64_t master_seed = 0;
    std::string build_id;
    std::string started_utc;
    double wall_seconds = 0.0;
    std::vector<std::string> outputs; // files written by this run
    std::uint64_t clip_events = 0;
    std::vector<std::string> flags; // notable run events, human-readable
};

// Library version plus compiler tag; stable for a given build.
std::string build_identifier();

// Current wall clock as an ISO-8601 UTC string.
std::string utc_timestamp();

std::string serialize_manifest(const RunManifest& manifest);

// Writes via a temporary file in the target directory followed by rename, so
// a manifest is either absent or complete.
void write_file_atomic(const std::string& path, const std::string& content);
void write_manifest(const RunManifest& manifest, const std::string& path);

} // namespace ifl
