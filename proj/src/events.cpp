#include "herald/events.hpp"

#include <sstream>

namespace herald {

EventLog EventLog::from_string(const std::string &content) {
    EventLog log;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) log.lines_.push_back(line);
    }
    return log;
}

EventLog EventLog::load(const std::string &path) { return from_string(read_file(path)); }

} // namespace herald
