#pragma once

#include "herald/util.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace herald {

// Insertion-ordered JSON everywhere so serialized artifacts are byte-stable.
using json = nlohmann::ordered_json;

// Append-only JSONL run log. Records (one JSON object per line):
//   meta    {"ev":"meta","schema":1,"scenario":...,"seed":...,"horizon":...}
//   spawn   {"ev":"spawn","t":..,"veh":..,"lane":..}
//   cross   {"ev":"cross","t":..,"veh":..,"int":..,"lane":..,"mov":"S","sig":"green","v":..,"d":..}
//   signal  {"ev":"signal","t":..,"int":..,"ph":"P1","mode":"green","dur":..}
//   release {"ev":"release","t":..,"int":..,"lane":..,"q":..,"rel":..}
//   tick    {"ev":"tick","t":..,"q":..,"act":..,"sp":..,"ex":..}
//   exit    {"ev":"exit","t":..,"veh":..,"wait":..}
//   resid   {"ev":"resid","veh":..,"enter":..,"wait":..}   (unfinished at horizon)
class EventLog {
public:
    void emit(const json &record) { lines_.push_back(record.dump()); }

    const std::vector<std::string> &lines() const { return lines_; }
    bool empty() const { return lines_.empty(); }

    // FNV-1a over the serialized content; equal hashes mean byte-identical
    // logs.
    uint64_t hash() const {
        uint64_t h = kFnvOffset;
        for (const std::string &line : lines_) {
            h = fnv1a64(line, h);
            h = fnv1a64("\n", h);
        }
        return h;
    }

    std::string to_string() const {
        std::string out;
        for (const std::string &line : lines_) {
            out += line;
            out += '\n';
        }
        return out;
    }

    void save(const std::string &path) const { write_file_atomic(path, to_string()); }
    static EventLog load(const std::string &path);
    static EventLog from_string(const std::string &content);

    // Parses every line; call sites filter on rec["ev"].
    template <typename Fn> void for_each(Fn &&fn) const {
        for (const std::string &line : lines_) fn(json::parse(line));
    }

private:
    std::vector<std::string> lines_;
};

} // namespace herald
